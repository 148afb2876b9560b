"""Three-way AoI verification and parameter sweeps."""

from __future__ import annotations

import concurrent.futures
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .. import analytic, chain, sim
from ..params import LinkParams, Scheme, check_probability

DEFAULT_HORIZON = 1_000_000
DEFAULT_GRID = tuple(round(0.2 + 0.1 * i, 1) for i in range(9))
TWO_HOP = (Scheme.TWO_NOARQ, Scheme.TWO_ARQ)


@dataclass(frozen=True)
class SweepRow:
    scheme: Scheme
    p1: float
    p2: float
    analytic_aoi: float
    solver_aoi: float
    sim_aoi: float
    sim_std_error: float
    cycles: int
    agrees: bool = True
    error: str | None = None

    def sort_key(self):
        return (str(self.scheme), self.p1, self.p2)


def solver_moments(scheme, params: LinkParams) -> analytic.SchemeMoments:
    """Cycle moments from the chain's hitting times plus the scheme's delivery-age rule."""
    scheme = Scheme.parse(scheme)
    h = chain.hitting_moments(chain.build_chain(scheme, params))
    e_z, e_z2 = float(h.mean[0]), float(h.second_moment[0])
    if scheme is Scheme.SINGLE_NOARQ:
        e_tau_z = e_z
    elif scheme is Scheme.SINGLE_ARQ:
        e_tau_z = e_z * e_z
    elif scheme is Scheme.TWO_NOARQ:
        e_tau_z = 2.0 * e_z
    else:
        # relay retransmission time X is the hitting time from state 2
        e_tau_z = (1.0 + float(h.mean[1])) * e_z
    return analytic.SchemeMoments(e_z=e_z, e_z2=e_z2, e_tau_z=e_tau_z)


def solver_aoi(scheme, params: LinkParams) -> float:
    return analytic.aoi_from_moments(solver_moments(scheme, params))


def verify(params: LinkParams, scheme, horizon: int = DEFAULT_HORIZON, seed: int = 0,
           warmup: int = sim.DEFAULT_WARMUP) -> SweepRow:
    """Closed form, chain solver and simulation for one operating point.

    ``agrees`` is False when the simulated value sits more than three
    standard errors from the closed form.
    """
    scheme = Scheme.parse(scheme)
    exact = analytic.aoi(scheme, params).average_aoi
    solved = solver_aoi(scheme, params)
    st = sim.stats(sim.simulate(sim.SimConfig(scheme, params, horizon, seed)), warmup)
    return SweepRow(
        scheme=scheme,
        p1=params.p1,
        p2=params.p2,
        analytic_aoi=exact,
        solver_aoi=solved,
        sim_aoi=st.average_aoi,
        sim_std_error=st.std_error,
        cycles=st.cycle_count,
        agrees=_agrees(st.average_aoi, exact, st.std_error),
    )


def _agrees(value: float, reference: float, std_error: float) -> bool:
    if math.isnan(std_error):
        return value == reference
    return abs(value - reference) <= 3.0 * std_error


@dataclass(frozen=True)
class SweepSpec:
    schemes: tuple = TWO_HOP
    p1_values: tuple = DEFAULT_GRID
    p2_values: tuple = DEFAULT_GRID
    horizon: int = DEFAULT_HORIZON
    seed: int = 0
    replications: int = 1
    warmup: int = sim.DEFAULT_WARMUP
    # "grid": every (p1, p2) combination; "diagonal": pair the lists elementwise
    pairing: str = "grid"

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        set_(self, "p1_values", tuple(check_probability("p1", p) for p in self.p1_values))
        set_(self, "p2_values", tuple(check_probability("p2", p) for p in self.p2_values))
        if not self.schemes or not self.p1_values or not self.p2_values:
            raise ValueError("schemes, p1_values and p2_values must be nonempty")
        if int(self.horizon) < 1 or int(self.replications) < 1 or int(self.warmup) < 0:
            raise ValueError("horizon and replications must be >= 1, warmup >= 0")
        set_(self, "horizon", int(self.horizon))
        set_(self, "seed", int(self.seed))
        set_(self, "replications", int(self.replications))
        set_(self, "warmup", int(self.warmup))
        if self.pairing not in ("grid", "diagonal"):
            raise ValueError(f"pairing must be 'grid' or 'diagonal', got {self.pairing!r}")
        if self.pairing == "diagonal" and len(self.p1_values) != len(self.p2_values):
            raise ValueError("diagonal pairing needs p1_values and p2_values of equal length")

    def points(self):
        """Yield (p1 index, p2 index, p1, p2) in sweep order."""
        if self.pairing == "diagonal":
            for i, (a, b) in enumerate(zip(self.p1_values, self.p2_values)):
                yield i, i, a, b
            return
        for i, a in enumerate(self.p1_values):
            for j, b in enumerate(self.p2_values):
                yield i, j, a, b

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schemes"] = [str(s) for s in self.schemes]
        d["p1_values"] = list(self.p1_values)
        d["p2_values"] = list(self.p2_values)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def updated(self, **overrides) -> "SweepSpec":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


PRESETS = {
    "equal": SweepSpec(p1_values=DEFAULT_GRID, p2_values=DEFAULT_GRID, pairing="diagonal"),
    "p1-0.5": SweepSpec(p1_values=(0.5,), p2_values=DEFAULT_GRID),
    "p1-0.9": SweepSpec(p1_values=(0.9,), p2_values=DEFAULT_GRID),
    "p2-0.5": SweepSpec(p1_values=DEFAULT_GRID, p2_values=(0.5,)),
    "p2-0.9": SweepSpec(p1_values=DEFAULT_GRID, p2_values=(0.9,)),
}
PRESET_AXIS = {"equal": "diagonal", "p1-0.5": "vary_p2", "p1-0.9": "vary_p2",
               "p2-0.5": "vary_p1", "p2-0.9": "vary_p1"}


def point_seed(base_seed: int, scheme, i: int, j: int, replication: int = 0) -> int:
    """Seed for one grid point, independent of which other points are run."""
    idx = list(Scheme).index(Scheme.parse(scheme))
    ss = np.random.SeedSequence([int(base_seed), idx, int(i), int(j), int(replication)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class _Task:
    scheme: Scheme
    i: int
    j: int
    p1: float
    p2: float
    spec: SweepSpec = field(repr=False)


def _run_point(task: _Task) -> SweepRow:
    spec = task.spec
    try:
        params = LinkParams(task.p1, task.p2)
        exact = analytic.aoi(task.scheme, params).average_aoi
        solved = solver_aoi(task.scheme, params)
        values, errors, cycles = [], [], 0
        for r in range(spec.replications):
            seed = point_seed(spec.seed, task.scheme, task.i, task.j, r)
            log = sim.simulate(sim.SimConfig(task.scheme, params, spec.horizon, seed))
            st = sim.stats(log, spec.warmup)
            values.append(st.average_aoi)
            errors.append(st.std_error)
            cycles += st.cycle_count
        estimate = float(np.mean(values))
        pooled = float(math.sqrt(sum(e * e for e in errors)) / len(errors))
        return SweepRow(task.scheme, task.p1, task.p2, exact, solved, estimate, pooled,
                        cycles, agrees=_agrees(estimate, exact, pooled))
    except Exception as exc:  # recorded in the row; the sweep goes on
        nan = float("nan")
        return SweepRow(task.scheme, task.p1, task.p2, nan, nan, nan, nan, 0,
                        agrees=False, error=f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """One row per (scheme, p1, p2), sorted by scheme then p1 then p2.

    Points are independent, so ``jobs > 1`` runs them in worker processes
    without changing any value.
    """
    tasks = [_Task(s, i, j, a, b, spec) for s in spec.schemes for i, j, a, b in spec.points()]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, tasks))
    else:
        rows = [_run_point(t) for t in tasks]
    return sorted(rows, key=SweepRow.sort_key)


def reduction(arq_value: float, noarq_value: float) -> float:
    """Fractional AoI reduction of the first value relative to the second."""
    return 1.0 - arq_value / noarq_value


def save_spec(spec: SweepSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")
