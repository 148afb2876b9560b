"""Independent reference computations used by the tests.

Nothing here calls the package's solvers: exact rational closed forms,
and first-passage moments summed over path lengths with a proven tail
bound.
"""

from fractions import Fraction

import numpy as np


def exact_two_noarq(p1, p2) -> Fraction:
    p1, p2 = Fraction(p1), Fraction(p2)
    return Fraction(3, 2) + (1 + p1) / (p1 * p2) - 1 / (1 + p1)


def exact_two_arq(p1, p2) -> Fraction:
    p1, p2 = Fraction(p1), Fraction(p2)
    return Fraction(1, 2) + 1 / p1 + 2 / p2 - 1 / (p1 + p2)


def protocol_matrix(arq: bool, p1: float, p2: float) -> np.ndarray:
    """Transition matrix over (1, 2, s), written out by hand."""
    if arq:
        return np.array([[1 - p1, p1, 0.0], [0.0, 1 - p2, p2], [1.0, 0.0, 0.0]])
    return np.array([[1 - p1, p1, 0.0], [1 - p2, 0.0, p2], [1.0, 0.0, 0.0]])


def first_passage_distribution(P: np.ndarray, target: int, start: int, max_len: int):
    """P(T = k) for k = 1..max_len, summing over every path that avoids the
    target until step k; also returns the survival vector Q^max_len 1.

    Path probabilities are accumulated length by length: ``alive[j]`` is the
    total probability of all target-avoiding paths of the current length
    that end in transient state j.
    """
    keep = [i for i in range(len(P)) if i != target]
    Q = P[np.ix_(keep, keep)]
    r = P[keep, target]
    alive = np.zeros(len(keep))
    alive[keep.index(start)] = 1.0
    pmf = np.zeros(max_len + 1)
    for k in range(1, max_len + 1):
        pmf[k] = alive @ r
        alive = alive @ Q
    return pmf, alive, Q, keep


def truncated_moments(P: np.ndarray, target: int, start: int, max_len: int = 60):
    """(mean, second moment, mean tail bound, second-moment tail bound).

    The truncated sums are lower bounds; the true moments exceed them by
    at most the returned bounds. The bounds use a contraction factor r
    between the dominant transient eigenvalue rho and 1: with
    v = (I - Q/r)^-1 1 >= 1 we have Q v <= r v, hence
    P(T > K + m) <= r^m (Q^K v)_start.
    """
    pmf, _, Q, keep = first_passage_distribution(P, target, start, max_len)
    k = np.arange(max_len + 1)
    mean = float(np.sum(k * pmf))
    second = float(np.sum(k * k * pmf))

    rho = float(max(abs(np.linalg.eigvals(Q))))
    e = np.zeros(len(keep))
    e[keep.index(start)] = 1.0
    QK = np.linalg.matrix_power(Q, max_len)
    survive = float(e @ QK @ np.ones(len(keep)))  # P(T > K)
    K = max_len
    candidates = []
    # every r in (rho, 1) gives a valid bound; keep the tightest
    for frac in (1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3):
        r = rho + frac * (1.0 - rho)
        v = np.linalg.solve(np.eye(len(keep)) - Q / r, np.ones(len(keep)))
        candidates.append((r, v))
    # a strictly positive Perron vector allows r = rho itself
    vals, vecs = np.linalg.eig(Q)
    perron = np.abs(np.real(vecs[:, np.argmax(np.abs(vals))]))
    if perron.min() > 1e-12 * perron.max():
        candidates.append((rho, perron / perron.min()))
    best = (np.inf, np.inf)
    for r, v in candidates:
        weighted = float(e @ QK @ v)  # bounds P(T > K + m) / r^m
        # E[T; T > K] = K P(T > K) + sum_{m >= 0} P(T > K + m)
        mean_tail = K * survive + weighted / (1 - r)
        # E[T^2; T > K] = K^2 P(T > K) + sum_{m >= 0} (2(K + m) + 1) P(T > K + m)
        second_tail = K * K * survive + weighted * ((2 * K + 1) / (1 - r) + 2 * r / (1 - r) ** 2)
        best = (min(best[0], mean_tail), min(best[1], second_tail))
    return mean, second, best[0], best[1]
