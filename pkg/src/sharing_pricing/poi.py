"""Price of information: expected complete-information profit over uniform-price profit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .complete import best_prefix
from .mc import EstimateWithCI, ReplicatePlan, run_estimators
from .network import Kind, NetworkValueFn, validate_cost
from .uniform import asymptotic_oracle, solve_uniform
from .valuation import ValuationDistribution, sample_sorted

LOWER_BOUND = 2.0
UPPER_BOUND = 27.0 / 8.0


class ProfitPair:
    """Estimand on one shared draw.

    Returns (complete-information profit, virtual surplus, complete m*,
    optimal-mechanism m*).
    """

    def __init__(self, dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int) -> None:
        self.dist, self.c, self.n = dist, validate_cost(c, fn), n
        self.vtable = fn.table(n)

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        theta = sample_sorted(self.dist, self.n, rng)
        m_c, complete = best_prefix(theta, self.vtable, self.c)
        m_d, diff = best_prefix(self.dist.virtual(theta), self.vtable, self.c)
        return np.array([complete, diff, m_c, m_d])


def profit_estimates(dist, fn, c, n, replicates, seed, workers=1) -> list[EstimateWithCI]:
    """Estimates of every :class:`ProfitPair` component on shared draws."""
    return run_estimators(ReplicatePlan(seed, replicates), ProfitPair(dist, fn, c, n), workers)


def profit_pair(dist, fn, c, n, replicates, seed, workers=1) -> tuple[EstimateWithCI, EstimateWithCI]:
    complete, diff = profit_estimates(dist, fn, c, n, replicates, seed, workers)[:2]
    return complete, diff


@dataclass(frozen=True)
class PoIReport:
    poi_estimate: float
    poi_se: float
    complete_profit: EstimateWithCI
    uniform_profit: float
    closed_form: Optional[float]
    model: str
    n: int
    diff_profit: Optional[EstimateWithCI] = None

    @property
    def poi_vs_diff(self) -> Optional[float]:
        """The same ratio with the optimal-mechanism profit in the denominator."""
        if self.diff_profit is None or self.diff_profit.mean <= 0:
            return None
        return self.complete_profit.mean / self.diff_profit.mean


def _closed_form(fn: NetworkValueFn) -> Optional[float]:
    if fn.kind is Kind.GENERAL:
        return None
    return asymptotic_oracle(fn.kind, 0.0, 2.0).poi


def estimate_poi(dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int,
                 replicates: int, seed: int, workers: int = 1) -> PoIReport:
    """Finite-n price of information.

    The numerator is a Monte-Carlo mean of the complete-information optimum;
    the denominator is the deterministic uniform-price optimum. The
    optimal-mechanism profit is estimated on the same draws for comparison.
    """
    complete, diff = profit_pair(dist, fn, c, n, replicates, seed, workers)
    uniform = solve_uniform(dist, fn, c, n).expected_profit
    if uniform <= 0:
        raise ArithmeticError(f"uniform-price profit is {uniform}; the price of information is undefined")
    return PoIReport(
        poi_estimate=complete.mean / uniform,
        poi_se=complete.std_error / uniform,
        complete_profit=complete,
        uniform_profit=uniform,
        closed_form=_closed_form(fn),
        model=fn.name,
        n=n,
        diff_profit=diff,
    )


def poi_bounds_general(fn: NetworkValueFn, n_sequence: Sequence[int], dist: ValuationDistribution,
                       c: float = 0.0, replicates: int = 200, seed: int = 0,
                       workers: int = 1) -> tuple[float, float, list[PoIReport]]:
    """Universal bracket [2, 27/8] and finite-n estimates for a concave v.

    Rejects ``fn`` unless it is non-decreasing and concave over every count
    the estimates touch.
    """
    ns = list(n_sequence)
    if not ns:
        raise ValueError("n_sequence must not be empty")
    fn.check_concave(max(ns))
    if abs(float(fn(np.asarray(0)))) > 1e-12:
        raise ValueError("v(0) must be 0")
    reports = [estimate_poi(dist, fn, c, n, replicates, seed, workers) for n in ns]
    return LOWER_BOUND, UPPER_BOUND, reports
