"""Optimal pricing when the platform knows every user's valuation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkValueFn, validate_cost
from .valuation import ValuationProfile, sample_sorted

BRUTE_FORCE_MAX_N = 20
_CHUNK_BITS = 16


@dataclass(frozen=True)
class CompleteInfoSolution:
    m_star: int
    profit: float
    prices: np.ndarray
    admitted: tuple[int, ...]


def best_prefix(sorted_values: np.ndarray, vtable: np.ndarray, c: float) -> tuple[int, float]:
    """Maximise v(m) * (sum of the m largest values) - m*c over m = 0..n.

    ``sorted_values`` must be in descending order and ``vtable`` hold
    v(0..n). Ties go to the smaller m.
    """
    n = sorted_values.size
    objective = np.empty(n + 1)
    objective[0] = 0.0
    np.cumsum(sorted_values, out=objective[1:])
    objective *= vtable[: n + 1]
    objective -= c * np.arange(n + 1)
    m = int(np.argmax(objective))
    return m, float(objective[m])


def _profile_values(profile) -> np.ndarray:
    if isinstance(profile, ValuationProfile):
        return profile.values
    v = np.asarray(profile, dtype=float)
    if np.any(np.diff(v) > 0):
        raise ValueError("profile must be sorted in descending order")
    return v


def solve_complete(profile, fn: NetworkValueFn, c: float) -> CompleteInfoSolution:
    """Admit the m* highest valuations and charge each their full value.

    By the top-prefix property only n+1 candidate admission sets need to be
    compared, so the search is exact and O(n).
    """
    c = validate_cost(c, fn)
    theta = _profile_values(profile)
    m, profit = best_prefix(theta, fn.table(theta.size), c)
    value = fn.table(theta.size)[m]
    return CompleteInfoSolution(m, profit, theta[:m] * value, tuple(range(m)))


def brute_force_complete(profile, fn: NetworkValueFn, c: float) -> CompleteInfoSolution:
    """Exhaustive search over all 2**n admission vectors (n <= 20).

    Test oracle for :func:`solve_complete`. Among optimal subsets the one
    with the fewest participants wins.
    """
    c = validate_cost(c, fn)
    theta = _profile_values(profile)
    n = theta.size
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}")
    vtable = fn.table(n)
    bits = np.arange(n)
    best = (0.0, 0, 0)  # (profit, size, mask) with the empty platform as baseline
    chunk = 1 << min(n, _CHUNK_BITS)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        member = ((masks[:, None] >> bits) & 1).astype(float)
        size = member.sum(axis=1).astype(int)
        profit = vtable[size] * (member @ theta) - size * c
        # lexsort: primary key profit (desc), secondary size (asc)
        k = np.lexsort((size, -profit))[0]
        if profit[k] > best[0] or (profit[k] == best[0] and size[k] < best[1]):
            best = (float(profit[k]), int(size[k]), int(masks[k]))
    profit, m, mask = best
    admitted = tuple(int(i) for i in bits if (mask >> i) & 1)
    prices = theta[list(admitted)] * vtable[m]
    return CompleteInfoSolution(m, profit, prices, admitted)


class CompleteProfit:
    """Estimand: complete-information profit of one sampled profile."""

    def __init__(self, dist, fn: NetworkValueFn, c: float, n: int) -> None:
        self.dist, self.c, self.n = dist, validate_cost(c, fn), n
        self.vtable = fn.table(n)

    def __call__(self, rng: np.random.Generator) -> float:
        return best_prefix(sample_sorted(self.dist, self.n, rng), self.vtable, self.c)[1]
