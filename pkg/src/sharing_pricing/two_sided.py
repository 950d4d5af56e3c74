"""Two-group market: contributors create the network value, consumers only use it.

Externalities follow Metcalfe's law counted over admitted contributors only:
every participant in either group enjoys ``theta * m1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .mc import EstimateWithCI, ReplicatePlan, run_estimators
from .uniform import golden_max
from .valuation import UNIFORM, ValuationDistribution, sample_sorted

GRID = 300
MOVE_TOL = 1e-6
CORNER_K = 0.25


@dataclass(frozen=True)
class TwoSidedInstance:
    n1: int
    n2: int
    c: float = 0.0
    dist: ValuationDistribution = UNIFORM

    def __post_init__(self) -> None:
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("both groups need at least one potential user")
        if self.c < 0:
            raise ValueError("cost must be non-negative")

    @property
    def k(self) -> float:
        return self.n1 / self.n2


@dataclass(frozen=True)
class TwoSidedCompleteSolution:
    m1: int
    m2: int
    profit: float


@dataclass(frozen=True)
class TwoSidedUniformSolution:
    theta1_bar: float
    theta2_bar: float
    P1: float
    P2: float
    expected_profit: float


def _desc(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if np.any(np.diff(v) > 0):
        raise ValueError("profiles must be sorted in descending order")
    return v


def solve_two_sided_complete(theta1, theta2, c: float) -> TwoSidedCompleteSolution:
    """All-or-nothing optimum under complete information.

    Either every contributor is admitted together with the consumers whose
    value n1*theta covers the cost, or nobody is.
    """
    t1, t2 = _desc(theta1), _desc(theta2)
    n1 = t1.size
    m2_bar = int(np.count_nonzero(n1 * t2 >= c))
    bracket = t1.sum() + t2[:m2_bar].sum() - (n1 + m2_bar) / n1 * c
    if bracket > 0:
        return TwoSidedCompleteSolution(n1, m2_bar, float(n1 * bracket))
    return TwoSidedCompleteSolution(0, 0, 0.0)


def two_sided_prefix_profits(s1: np.ndarray, s2: np.ndarray, c: float) -> np.ndarray:
    """Profit table over (m1, m2) for prefix sums ``s1``, ``s2`` (index 0 = empty)."""
    m1 = np.arange(s1.size)[:, None]
    m2 = np.arange(s2.size)[None, :]
    return m1 * (s1[:, None] + s2[None, :]) - (m1 + m2) * c


def _prefix(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.size + 1)
    np.cumsum(v, out=out[1:])
    return out


def brute_force_two_sided(theta1, theta2, c: float) -> TwoSidedCompleteSolution:
    """Exhaustive search over every admission subset of both groups (small n only)."""
    t1, t2 = np.asarray(theta1, float), np.asarray(theta2, float)
    if t1.size + t2.size > 16:
        raise ValueError("brute force limited to 16 users in total")
    best = TwoSidedCompleteSolution(0, 0, 0.0)
    for a in itertools.product((0, 1), repeat=t1.size):
        m1 = sum(a)
        s1 = float(np.dot(a, t1))
        for b in itertools.product((0, 1), repeat=t2.size):
            m2 = sum(b)
            profit = m1 * (s1 + float(np.dot(b, t2))) - (m1 + m2) * c
            if profit > best.profit or (profit == best.profit and m1 + m2 < best.m1 + best.m2):
                best = TwoSidedCompleteSolution(m1, m2, profit)
    return best


def two_sided_uniform_objective(theta1_bar, theta2_bar, inst: TwoSidedInstance):
    """Profit of posting one price per group; vectorised over both thresholds."""
    F = inst.dist.cdf
    q1 = 1.0 - np.asarray(F(np.asarray(theta1_bar, float)), float)
    q2 = 1.0 - np.asarray(F(np.asarray(theta2_bar, float)), float)
    value = q1 * inst.n1
    return inst.n1 * q1 * (theta1_bar * value - inst.c) + inst.n2 * q2 * (theta2_bar * value - inst.c)


def solve_two_sided_uniform(inst: TwoSidedInstance, grid: int = GRID, tol: float = MOVE_TOL,
                            max_passes: int = 100) -> TwoSidedUniformSolution:
    """Grid scan over both thresholds, then alternating golden-section passes."""
    axis = np.linspace(0.0, 1.0, grid)
    table = two_sided_uniform_objective(axis[:, None], axis[None, :], inst)
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    t1, t2 = float(axis[i]), float(axis[j])
    best = float(table[i, j])
    h = axis[1] - axis[0]

    def obj(a, b):
        return float(two_sided_uniform_objective(a, b, inst))

    for _ in range(max_passes):
        lo, hi = max(t1 - h, 0.0), min(t1 + h, 1.0)
        new1, _ = golden_max(lambda a: obj(a, t2), lo, hi)
        new2, val = golden_max(lambda b: obj(new1, b), 0.0, 1.0)
        moved = max(abs(new1 - t1), abs(new2 - t2))
        if val >= best:
            t1, t2, best = new1, new2, val
        if moved < tol:
            break
    q1 = 1.0 - float(inst.dist.cdf(np.asarray(t1)))
    t1, t2 = float(t1), float(t2)
    return TwoSidedUniformSolution(t1, t2, t1 * q1 * inst.n1, t2 * q1 * inst.n1, best)


@dataclass(frozen=True)
class TwoSidedClosedForm:
    theta1_bar: float
    theta2_bar: float
    P1: float
    P2: float
    profit: float
    complete_profit: float

    @property
    def poi(self) -> float:
        return self.complete_profit / self.profit


def large_market_closed_form(n1: float, n2: float) -> TwoSidedClosedForm:
    """Large-market optimum for uniform valuations and negligible cost.

    For n1/n2 < 1/4 contributors get the service free (threshold 0) and the
    profit is n1*n2/4. Otherwise the contributor threshold is the interior
    stationary point, with R = sqrt(4 n1^2 + 3 n1 n2) and profit
    (8 n1^2 + 9 n1 n2 + (4 n1 + 3 n2) R) / 108, which is continuous at
    n1/n2 = 1/4. Complete-information profit is n1 (n1 + n2) / 2.
    """
    k = n1 / n2
    complete = n1 * (n1 + n2) / 2.0
    if k < CORNER_K:
        return TwoSidedClosedForm(0.0, 0.5, 0.0, n1 / 2.0, n1 * n2 / 4.0, complete)
    root = math.sqrt(4 * n1 * n1 + 3 * n1 * n2)
    t1 = 2.0 / 3.0 - math.sqrt(k * (4 * k + 3)) / (6 * k)
    p1 = (4 * n1 - 3 * n2 + 2 * root) / 36.0
    p2 = n1 * n2 / (4 * root - 8 * n1)
    profit = (8 * n1**2 + 9 * n1 * n2 + (4 * n1 + 3 * n2) * root) / 108.0
    return TwoSidedClosedForm(max(t1, 0.0), 0.5, p1, p2, profit, complete)


def alternate_profit_expression(n1: float, n2: float) -> float:
    """Alternative interior-branch profit expression.

    Matches the true optimum only when n1 == n2; reported next to the
    corrected value so the two can be compared.
    """
    root = math.sqrt(4 * n1 * n1 + 3 * n1 * n2)
    return (4 * n1**2 + 6 * n2**2 + 7 * n1 * n2 + (4 * n1 + 3 * n2) * root) / 108.0


def alternate_poi(n1: float, n2: float) -> float:
    """Price of information under the opposite branch convention: the long
    expression below n1/n2 = 1/4 and 2(n1+n2)/n2 above."""
    if n1 / n2 < CORNER_K:
        return 54 * (n1**2 + n1 * n2) / (108.0 * alternate_profit_expression(n1, n2))
    return 2.0 * (n1 + n2) / n2


def two_sided_poi(inst: TwoSidedInstance) -> float:
    """Closed-form price of information: 2(k+1) below k = 1/4, else
    54 k(k+1) / ((2k + s)(3 + 2k + s)) with s = sqrt(k(4k+3))."""
    return large_market_closed_form(inst.n1, inst.n2).poi


def best_two_sided(g1: np.ndarray, g2: np.ndarray, c: float) -> tuple[int, int, float]:
    """Maximise m1*(top-m1 sum of g1 + top-m2 sum of g2) - (m1+m2)*c.

    Both arrays sorted descending. For fixed m1 > 0 the best m2 counts the
    group-2 entries with m1*g >= c, found by binary search.
    """
    s1, s2 = _prefix(g1), _prefix(g2)
    m1 = np.arange(1, g1.size + 1)
    # g2 is descending; count of entries >= c/m1 via search on the negated array
    m2 = np.searchsorted(-g2, -(c / m1), side="right")
    profit = m1 * (s1[1:] + s2[m2]) - (m1 + m2) * c
    k = int(np.argmax(profit))
    if profit[k] > 0.0:
        return int(m1[k]), int(m2[k]), float(profit[k])
    return 0, 0, 0.0


class TwoSidedProfits:
    """Estimand: (complete-information profit, virtual-surplus profit) of one draw."""

    def __init__(self, inst: TwoSidedInstance) -> None:
        self.inst = inst

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        inst = self.inst
        t1 = sample_sorted(inst.dist, inst.n1, rng)
        t2 = sample_sorted(inst.dist, inst.n2, rng)
        complete = solve_two_sided_complete(t1, t2, inst.c).profit
        diff = best_two_sided(inst.dist.virtual(t1), inst.dist.virtual(t2), inst.c)[2]
        return np.array([complete, diff])


def two_sided_profits(inst: TwoSidedInstance, replicates: int, seed: int,
                      workers: int = 1) -> tuple[EstimateWithCI, EstimateWithCI]:
    """Expected complete-information and differentiated profits on shared draws."""
    complete, diff = run_estimators(ReplicatePlan(seed, replicates), TwoSidedProfits(inst), workers)
    return complete, diff


def two_sided_expected_diff_profit(inst: TwoSidedInstance, replicates: int, seed: int,
                                   workers: int = 1) -> EstimateWithCI:
    return two_sided_profits(inst, replicates, seed, workers)[1]


def two_sided_poi_estimate(inst: TwoSidedInstance, replicates: int, seed: int,
                           workers: int = 1) -> EstimateWithCI:
    """Monte-Carlo E[complete profit] / numerical uniform-price profit."""
    complete, _ = two_sided_profits(inst, replicates, seed, workers)
    return complete.scaled(1.0 / solve_two_sided_uniform(inst).expected_profit)
