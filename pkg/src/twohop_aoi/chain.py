"""
First-passage moments of finite absorbing-return Markov chains.

The protocol chains have states ``1`` (first hop in progress), ``2``
(second hop in progress) and ``s`` (update delivered). The moment solvers
accept any finite chain with a designated target state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import LinkParams, Scheme

ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-10

# Protocol matrices are stored in extended precision: for any float64 p the
# complement 1 - p is then exact, so I - Q recovers p without rounding.
WIDE = np.longdouble


class DivergentChainError(ValueError):
    """The target state cannot be reached, so hitting moments are infinite."""


@dataclass(frozen=True)
class ChainSpec:
    state_labels: tuple
    transition: np.ndarray
    target: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "state_labels", tuple(self.state_labels))
        matrix = np.array(self.transition)
        if not np.issubdtype(matrix.dtype, np.floating):
            matrix = matrix.astype(float)
        object.__setattr__(self, "transition", matrix)

    @property
    def size(self) -> int:
        return len(self.state_labels)

    def index(self, label) -> int:
        return self.state_labels.index(str(label))


@dataclass(frozen=True)
class HittingMoments:
    mean: np.ndarray
    second_moment: np.ndarray

    @property
    def variance(self) -> np.ndarray:
        return self.second_moment - self.mean**2


def build_chain(scheme, params: LinkParams) -> ChainSpec:
    """Transition matrix of the delivery protocol for ``scheme``.

    Two-hop schemes give a chain over ``(1, 2, s)``; without ARQ a
    second-hop failure sends the chain back to state 1, with ARQ it stays
    in state 2. Single-hop schemes share the two-state chain ``(1, s)``.
    """
    scheme = Scheme.parse(scheme)
    if not isinstance(params, LinkParams):
        raise TypeError("params must be a LinkParams instance")
    P = build_transitions(scheme, params.p1, params.p2)[0]
    if scheme.two_hop:
        return ChainSpec(("1", "2", "s"), P, target=2)
    return ChainSpec(("1", "s"), P, target=1)


def build_transitions(scheme, p1, p2=1.0) -> np.ndarray:
    """Stack of protocol transition matrices over arrays of ``p1`` and ``p2``.

    Same layout as :func:`build_chain`; broadcasting applies, and the result
    has shape (B, n, n) for the flattened broadcast shape B.
    """
    scheme = Scheme.parse(scheme)
    p1, p2 = np.broadcast_arrays(np.asarray(p1, dtype=WIDE), np.asarray(p2, dtype=WIDE))
    p1, p2 = p1.ravel(), p2.ravel()
    for name, p in (("p1", p1), ("p2", p2)):
        if np.any(~(p > 0.0)) or np.any(p > 1.0):
            raise ValueError(f"{name} values must lie in (0, 1]")
    if not scheme.two_hop:
        P = np.zeros((len(p1), 2, 2), dtype=WIDE)
        P[:, 0, 0], P[:, 0, 1], P[:, 1, 0] = 1.0 - p1, p1, 1.0
        return P
    P = np.zeros((len(p1), 3, 3), dtype=WIDE)
    P[:, 0, 0], P[:, 0, 1] = 1.0 - p1, p1
    if scheme.arq:
        P[:, 1, 1] = 1.0 - p2
    else:
        P[:, 1, 0] = 1.0 - p2
    P[:, 1, 2] = p2
    P[:, 2, 0] = 1.0
    return P


def _reaches_target(support: np.ndarray, target: int) -> np.ndarray:
    # transitive closure of the support graph (Warshall), batched over leading axes
    reach = support.copy()
    n = reach.shape[-1]
    reach[..., np.arange(n), np.arange(n)] = True
    for k in range(n):
        reach |= reach[..., :, k : k + 1] & reach[..., k : k + 1, :]
    return reach[..., :, target]


def validate(chain: ChainSpec) -> list[str]:
    """Return human-readable violations of the chain invariants (empty when valid)."""
    problems = []
    P = np.asarray(chain.transition, dtype=float)
    n = len(chain.state_labels)
    if P.ndim != 2 or P.shape != (n, n):
        return [f"transition has shape {P.shape}, expected ({n}, {n})"]
    if not 0 <= chain.target < n:
        return [f"target index {chain.target} out of range for {n} states"]
    for i, row in enumerate(P):
        for j, value in enumerate(row):
            if not np.isfinite(value) or value < 0.0 or value > 1.0:
                problems.append(f"entry ({i}, {j}) = {value:g} outside [0, 1]")
        total = row.sum()
        if not abs(total - 1.0) <= ROW_SUM_TOL:
            problems.append(f"row {i} sums to {total:.12g}")
    if problems:
        return problems
    reachable = _reaches_target(P > 0.0, chain.target)
    for i in np.flatnonzero(~reachable):
        problems.append(
            f"state {chain.state_labels[i]!r} (row {i}) cannot reach target "
            f"{chain.state_labels[chain.target]!r}"
        )
    return problems


def _lu_factor(A: np.ndarray):
    """Row-pivoted LU of a stack of matrices, shape (B, n, n)."""
    LU = A.copy()
    B, n, _ = LU.shape
    perm = np.tile(np.arange(n), (B, 1))
    rows = np.arange(B)
    scale = np.maximum(np.abs(A).max(axis=(1, 2)), 1.0)
    for k in range(n):
        pivot = k + np.argmax(np.abs(LU[:, k:, k]), axis=1)
        if np.any(np.abs(LU[rows, pivot, k]) <= 1e-14 * scale):
            bad = np.flatnonzero(np.abs(LU[rows, pivot, k]) <= 1e-14 * scale)
            raise DivergentChainError(f"singular system at column {k} (batch items {bad[:5].tolist()})")
        LU[rows, k], LU[rows, pivot] = LU[rows, pivot], LU[rows, k].copy()
        perm[rows, k], perm[rows, pivot] = perm[rows, pivot], perm[rows, k].copy()
        factors = LU[:, k + 1 :, k] / LU[:, k, k][:, None]
        LU[:, k + 1 :, k + 1 :] -= factors[:, :, None] * LU[:, k, None, k + 1 :]
        LU[:, k + 1 :, k] = factors
    return LU, perm


def _lu_solve(LU: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = LU.shape[-1]
    x = np.take_along_axis(b, perm, axis=1)
    for k in range(n):
        x[:, k + 1 :] -= LU[:, k + 1 :, k] * x[:, k : k + 1]
    for k in range(n - 1, -1, -1):
        x[:, k] = (x[:, k] - np.einsum("bj,bj->b", LU[:, k, k + 1 :], x[:, k + 1 :])) / LU[:, k, k]
    return x


def gauss_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``A`` may be a single (n, n) matrix or a stack (B, n, n) with ``b`` of
    shape (n,) or (B, n). One round of iterative refinement with an
    extended-precision residual is applied. Works in the input precision
    (float64 or longdouble). Raises DivergentChainError if
    a pivot vanishes.
    """
    dtype = np.result_type(np.asarray(A).dtype, np.asarray(b).dtype, float)
    A = np.asarray(A, dtype=dtype)
    b = np.asarray(b, dtype=dtype)
    single = A.ndim == 2
    if single:
        A, b = A[None], b[None]
    if A.ndim != 3 or A.shape[1] != A.shape[2] or b.shape != A.shape[:2]:
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    LU, perm = _lu_factor(A)
    x = _lu_solve(LU, perm, b.copy())
    residual = b.astype(WIDE) - np.einsum("bij,bj->bi", A.astype(WIDE), x.astype(WIDE))
    x = x + _lu_solve(LU, perm, residual.astype(dtype))
    return x[0] if single else x


def _solve_checked(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = gauss_solve(A, b)
    # residual relative to the magnitudes involved; absolute 1e-10 is
    # unreachable in float64 once moments exceed ~1e6
    scale = np.abs(A).sum(axis=-1).max(axis=-1) * np.abs(x).max(axis=-1) + np.abs(b).max(axis=-1)
    residual = np.abs(np.einsum("...ij,...j->...i", A, x) - b).max(axis=-1)
    if not np.all(np.isfinite(x)) or np.any(residual > RESIDUAL_TOL * np.maximum(scale, 1.0)):
        raise DivergentChainError(f"linear solve residual {np.max(residual):.3g} too large")
    return x


def batch_hitting_moments(transitions, target: int):
    """Hitting-time mean and second moment for a stack of chains.

    ``transitions`` has shape (B, n, n); returns two (B, n) arrays. Every
    chain must be valid (see :func:`validate`); reachability is checked
    here and raises DivergentChainError.
    """
    P = np.asarray(transitions)
    if not np.issubdtype(P.dtype, np.floating):
        P = P.astype(float)
    if P.ndim != 3 or P.shape[1] != P.shape[2]:
        raise ValueError(f"expected a (B, n, n) stack, got shape {P.shape}")
    B, n, _ = P.shape
    if np.any(P < 0.0) or np.any(P > 1.0) or np.any(np.abs(P.sum(axis=2) - 1.0) > ROW_SUM_TOL):
        raise ValueError("stack contains a matrix that is not row-stochastic")
    reachable = _reaches_target(P > 0.0, target)
    if not reachable.all():
        bad = np.flatnonzero(~reachable.all(axis=1))
        raise DivergentChainError(f"target unreachable in batch items {bad[:5].tolist()}")
    keep = np.array([i for i in range(n) if i != target], dtype=int)
    Q = P[:, keep][:, :, keep]
    A = np.eye(len(keep), dtype=P.dtype) - Q
    mean = np.zeros((B, n), dtype=P.dtype)
    mean[:, keep] = _solve_checked(A, np.ones((B, len(keep)), dtype=P.dtype))
    second = np.zeros((B, n), dtype=P.dtype)
    rhs = 1.0 + 2.0 * np.einsum("bij,bj->bi", Q, mean[:, keep])
    second[:, keep] = _solve_checked(A, rhs)
    return mean.astype(float), second.astype(float)


def _checked(chain: ChainSpec) -> None:
    problems = validate(chain)
    if problems:
        unreachable = [p for p in problems if "cannot reach" in p]
        if unreachable:
            raise DivergentChainError("; ".join(unreachable))
        raise ValueError("invalid chain: " + "; ".join(problems))


def mean_hitting(chain: ChainSpec) -> np.ndarray:
    """Expected first-passage time (slots) from each state to the target.

    Solves ``m_i = 1 + sum_{j != s} P_ij m_j`` over the non-target states.
    """
    return _mean_wide(chain).astype(float)


def _mean_wide(chain: ChainSpec) -> np.ndarray:
    _checked(chain)
    P = chain.transition
    keep = [i for i in range(chain.size) if i != chain.target]
    Q = P[np.ix_(keep, keep)]
    m = np.zeros(chain.size, dtype=P.dtype)
    m[keep] = _solve_checked(np.eye(len(keep), dtype=P.dtype) - Q, np.ones(len(keep), dtype=P.dtype))
    return m


def second_moment_hitting(chain: ChainSpec, mean=None) -> np.ndarray:
    """Expected squared first-passage time (slots^2) to the target.

    Solves ``n_i = 1 + sum_{j != s} P_ij (n_j + 2 m_j)``. ``mean`` is
    recomputed when not supplied.
    """
    if mean is None:
        mean = _mean_wide(chain)
    else:
        _checked(chain)
    P = chain.transition
    mean = np.asarray(mean, dtype=P.dtype)
    if mean.shape != (chain.size,):
        raise ValueError(f"mean has shape {mean.shape}, expected ({chain.size},)")
    keep = [i for i in range(chain.size) if i != chain.target]
    Q = P[np.ix_(keep, keep)]
    n = np.zeros(chain.size, dtype=P.dtype)
    n[keep] = _solve_checked(np.eye(len(keep), dtype=P.dtype) - Q, 1.0 + 2.0 * Q @ mean[keep])
    return n.astype(float)


def hitting_moments(chain: ChainSpec) -> HittingMoments:
    mean = _mean_wide(chain)
    second = second_moment_hitting(chain, mean)
    return HittingMoments(mean=mean.astype(float), second_moment=second)
