"""Single posted price: every user sees the same price and self-selects.

A price P induces a valuation threshold; users at or above it join. The
participant count is treated as the real number n(1 - F(threshold)), so the
objective is a deterministic function of the threshold that is maximised
by a dense grid scan followed by golden-section refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import Kind, NetworkValueFn, validate_cost
from .valuation import ValuationDistribution

DEFAULT_GRID = 10_000
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class UniformSolution:
    theta_bar: float
    price: float
    expected_profit: float
    expected_participants: float


def uniform_objective(theta_bar, dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int):
    """n(1-F(t)) * (t * v(n(1-F(t))) - c); vectorised over ``theta_bar``."""
    t = np.asarray(theta_bar, dtype=float)
    mass = n * (1.0 - np.asarray(dist.cdf(t), dtype=float))
    return mass * (t * fn.fluid(mass) - c)


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
               max_iter: int = 200) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [lo, hi]; endpoints win ties.

    Returns (argmax, max).
    """
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 >= f2 else (x2, f2)
    for end in (lo, hi):
        fe = f(end)
        if fe >= fx:
            x, fx = end, fe
    return x, fx


def solve_uniform(dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int,
                  grid_size: int = DEFAULT_GRID) -> UniformSolution:
    """Globally optimal posted price for the fluid participation model."""
    c = validate_cost(c, fn)
    if n < 1:
        raise ValueError("n must be at least 1")
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    values = uniform_objective(grid, dist, fn, c, n)
    k = int(np.argmax(values))

    def f(t: float) -> float:
        return float(uniform_objective(t, dist, fn, c, n))

    t, best = golden_max(f, grid[max(k - 1, 0)], grid[min(k + 1, grid_size)])
    if values[k] > best:
        t, best = float(grid[k]), float(values[k])
    mass = float(n * (1.0 - dist.cdf(np.asarray(t))))
    price = float(t * fn.fluid(mass))
    # + 0.0 turns a shut-down market's -0.0 into 0.0
    return UniformSolution(float(t), price, float(best) + 0.0, mass)


@dataclass(frozen=True)
class AsymptoticOracle:
    """Large-n limits for the three named models at a given n and cost."""

    model: Kind
    price_limit: float
    theta_limit: float
    profit_scaling: Callable[[float], float]
    complete_scaling: Callable[[float], float]
    poi: float
    n: float

    @property
    def profit(self) -> float:
        return self.profit_scaling(self.n)

    @property
    def complete_profit(self) -> float:
        return self.complete_scaling(self.n)


def asymptotic_oracle(kind, c: float, n: float) -> AsymptoticOracle:
    """Closed-form large-n uniform price, threshold and profit.

    The uniform and differentiated profits share the same leading term, so
    ``profit_scaling`` serves as the limit of both. Costs are ignored for the
    unbounded models, where they are asymptotically negligible.
    """
    kind = Kind(kind.kind if isinstance(kind, NetworkValueFn) else kind)
    if kind is Kind.BOUNDED:
        margin = max(1.0 - c, 0.0)
        t = min((1.0 + c) / 2.0, 1.0)
        return AsymptoticOracle(kind, t, t, lambda m: (margin / 2.0) ** 2 * m,
                                lambda m: margin**2 / 2.0 * m, 2.0, n)
    if kind is Kind.ZIPF:
        return AsymptoticOracle(kind, 0.5 * math.log(n / 2.0), 0.5, lambda m: m / 4.0 * math.log(m / 2.0),
                                lambda m: m / 2.0 * math.log(m), 2.0, n)
    if kind is Kind.METCALFE:
        return AsymptoticOracle(kind, 2.0 * n / 9.0, 1.0 / 3.0, lambda m: 4.0 / 27.0 * m * m,
                                lambda m: m * m / 2.0, 27.0 / 8.0, n)
    raise ValueError(f"no closed-form asymptotics for model {kind.value!r}")
