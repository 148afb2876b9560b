"""
Slot-level Monte-Carlo simulation of the status-update protocols.

Every slot carries one transmission attempt on the hop currently in
progress, decided by one uniform draw against that hop's success
probability. Control frames (polls, ACK/NACK) take no time.

Timing convention: a packet is generated at the start of its first-hop
slot and delivered at the end of its final second-hop slot, so the age at
delivery is 2 for two-hop without ARQ and 1 + X with ARQ, where X is the
number of relay transmissions of the delivered packet. Single-hop without
ARQ delivers age 1; single-hop with ARQ delivers a packet generated at the
start of the cycle, so its age equals the cycle length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .params import LinkParams, Scheme

RNG_NAME = "numpy.random.PCG64"
DEFAULT_WARMUP = 100
DEFAULT_BATCHES = 32
_CHUNK = 1 << 20

_SCHEME_CODE = {
    Scheme.SINGLE_NOARQ: 0,
    Scheme.SINGLE_ARQ: 1,
    Scheme.TWO_NOARQ: 2,
    Scheme.TWO_ARQ: 3,
}


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    scheme: Scheme
    params: LinkParams
    horizon: int
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not isinstance(self.params, LinkParams):
            raise TypeError("params must be a LinkParams instance")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class RenewalCycle:
    """One inter-delivery interval.

    ``tau`` is the age right after the delivery that closes this cycle;
    ``area`` is the integral of the age over the cycle, which depends on
    the previous cycle's ``tau`` and is NaN for the very first cycle.
    """

    z: int
    tau: int
    first_hop_slots: int
    second_hop_slots: int
    area: float


@dataclass
class CycleLog:
    """Columnar record of the cycles completed in one run.

    Cycle 0 runs from time 0 to the first delivery. ``tail_slots`` counts
    the slots after the last delivery, so ``z.sum() + tail_slots`` equals
    the horizon.
    """

    config: SimConfig
    z: np.ndarray
    tau: np.ndarray
    first_hop_slots: np.ndarray
    second_hop_slots: np.ndarray
    tail_slots: int
    rng: str = field(default=RNG_NAME)

    def __len__(self) -> int:
        return len(self.z)

    @property
    def area(self) -> np.ndarray:
        z = self.z.astype(float)
        tau_prev = np.empty(len(z))
        tau_prev[0] = np.nan
        tau_prev[1:] = self.tau[:-1]
        return tau_prev * z + 0.5 * z * z

    @property
    def delivery_times(self) -> np.ndarray:
        return np.cumsum(self.z)

    def __getitem__(self, i: int) -> RenewalCycle:
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        z = int(self.z[i])
        area = float("nan") if i == 0 else float(self.tau[i - 1] * z + 0.5 * z * z)
        return RenewalCycle(
            z=z,
            tau=int(self.tau[i]),
            first_hop_slots=int(self.first_hop_slots[i]),
            second_hop_slots=int(self.second_hop_slots[i]),
            area=area,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@numba.njit(cache=True)
def _advance(u, code, p1, p2, state, out_z, out_tau, out_h1, out_h2):
    """Consume one chunk of uniforms; returns the number of cycles closed.

    ``state`` = [hop, slots since last delivery, hop-1 slots, hop-2 slots,
    current packet age] and is updated in place.
    """
    hop, since, h1, h2, age = state[0], state[1], state[2], state[3], state[4]
    k = 0
    for t in range(u.shape[0]):
        since += 1
        if hop == 1:
            h1 += 1
            if code == 1 and h1 == 1:
                age = 0  # ARQ source: the packet is generated once per cycle
            elif code != 1:
                age = 0  # otherwise a fresh sample every first-hop slot
            age += 1
            if u[t] < p1:
                if code <= 1:
                    out_z[k] = since
                    out_tau[k] = age
                    out_h1[k] = h1
                    out_h2[k] = 0
                    k += 1
                    since = 0
                    h1 = 0
                else:
                    hop = 2
        else:
            h2 += 1
            age += 1
            if u[t] < p2:
                out_z[k] = since
                out_tau[k] = age
                out_h1[k] = h1
                out_h2[k] = h2
                k += 1
                since = 0
                h1 = 0
                h2 = 0
                hop = 1
            elif code == 2:
                hop = 1
    state[0], state[1], state[2], state[3], state[4] = hop, since, h1, h2, age
    return k


def _uniforms(config: SimConfig):
    rng = np.random.Generator(np.random.PCG64(config.seed))
    remaining = config.horizon
    while remaining > 0:
        n = min(_CHUNK, remaining)
        yield rng.random(n)
        remaining -= n


def simulate(config: SimConfig) -> CycleLog:
    """Run the protocol for ``config.horizon`` slots and log every completed cycle.

    Deterministic in ``config``. Raises SimulationError if no delivery
    happens within the horizon.
    """
    code = _SCHEME_CODE[config.scheme]
    p1 = config.params.p1
    p2 = config.params.p2 if config.scheme.two_hop else 1.0
    state = np.array([1, 0, 0, 0, 0], dtype=np.int64)
    parts = []
    for u in _uniforms(config):
        buffers = [np.empty(len(u), dtype=np.int64) for _ in range(4)]
        k = _advance(u, code, p1, p2, state, *buffers)
        parts.append([b[:k].copy() for b in buffers])
    z, tau, h1, h2 = (np.concatenate(cols) for cols in zip(*parts))
    if len(z) == 0:
        raise SimulationError(
            f"no completed cycles within {config.horizon} slots for {config.scheme} {config.params}"
        )
    return CycleLog(
        config=config,
        z=z,
        tau=tau,
        first_hop_slots=h1,
        second_hop_slots=h2,
        tail_slots=int(state[1]),
    )


@dataclass(frozen=True)
class SimStats:
    average_aoi: float
    cycle_count: int
    emp_e_z: float
    emp_e_z2: float
    emp_e_tau_z: float
    std_error: float
    batches: int


def _batch_count(n: int, batches: int) -> int:
    if n >= 2 * batches:
        return batches
    return max(n // 2, 1)


def stats(cycles: CycleLog, warmup_cycles: int = DEFAULT_WARMUP, batches: int = DEFAULT_BATCHES) -> SimStats:
    """Renewal-reward estimate of the average AoI with a batch-means standard error.

    The first cycle only seeds the age before the next one and is always
    dropped, followed by ``warmup_cycles`` more. The standard error comes
    from ``batches`` equal groups of consecutive cycles (fewer when there
    are under ``2 * batches`` cycles; NaN with a single cycle).
    """
    if warmup_cycles < 0:
        raise ValueError("warmup_cycles must be >= 0")
    start = 1 + int(warmup_cycles)
    if len(cycles) <= start:
        raise SimulationError(
            f"{len(cycles)} cycles leave nothing after discarding {start} (first cycle + warmup)"
        )
    z = cycles.z[start:].astype(float)
    tau_prev = cycles.tau[start - 1 : -1].astype(float)
    area = tau_prev * z + 0.5 * z * z
    n = len(z)
    average = area.sum() / z.sum()

    b = _batch_count(n, batches)
    if b < 2:
        std_error = float("nan")
    else:
        size = n // b
        used = size * b
        batch_area = area[:used].reshape(b, size).sum(axis=1)
        batch_z = z[:used].reshape(b, size).sum(axis=1)
        std_error = float(np.std(batch_area / batch_z, ddof=1) / np.sqrt(b))
    return SimStats(
        average_aoi=float(average),
        cycle_count=n,
        emp_e_z=float(z.mean()),
        emp_e_z2=float((z * z).mean()),
        emp_e_tau_z=float((tau_prev * z).mean()),
        std_error=std_error,
        batches=b,
    )


def instantaneous_trace(config: SimConfig, max_slots: int) -> np.ndarray:
    """Age at the end of each of the first ``max_slots`` slots (after any drop).

    Slots before the first delivery have no defined age and are NaN.
    Uses the same random stream as :func:`simulate`, so the trace and the
    cycle log of a run with ``horizon=max_slots`` describe the same path.
    """
    if max_slots < 1:
        raise ValueError("max_slots must be >= 1")
    short = SimConfig(config.scheme, config.params, int(max_slots), config.seed)
    trace = np.full(int(max_slots), np.nan)
    try:
        log = simulate(short)
    except SimulationError:
        return trace
    ends = log.delivery_times
    slot_end = np.arange(1, max_slots + 1)
    # index of the latest delivery at or before each slot end
    last = np.searchsorted(ends, slot_end, side="right") - 1
    seen = last >= 0
    trace[seen] = log.tau[last[seen]] + (slot_end[seen] - ends[last[seen]])
    return trace


def trace_area(trace: np.ndarray) -> tuple[float, int]:
    """Integral of the continuous sawtooth rebuilt from an end-of-slot trace.

    Over each slot the age rises linearly from the previous slot's
    end value, contributing ``value + 1/2``. Only slots after the first
    defined sample are covered; returns (area, slot count).
    """
    trace = np.asarray(trace, dtype=float)
    defined = np.flatnonzero(~np.isnan(trace))
    if len(defined) < 2:
        return 0.0, 0
    starts = trace[defined[0] : -1]
    return float(np.sum(starts + 0.5)), len(starts)
