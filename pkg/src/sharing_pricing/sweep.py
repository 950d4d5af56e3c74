"""Sweeps over market size comparing uniform, optimal and complete-information profits."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .network import NetworkValueFn
from .poi import profit_pair
from .uniform import solve_uniform
from .valuation import ValuationDistribution

COLUMNS = [
    "n", "model_params", "cost", "replicates",
    "uniform_profit", "diff_profit", "diff_se", "complete_profit", "complete_se",
    "ratio_U_over_D", "ratio_se", "poi", "poi_se", "poi_vs_diff",
]


def default_replicates(n: int) -> int:
    if n <= 1_000:
        return 100_000
    if n <= 100_000:
        return 10_000
    return 1_000


def run_ratio_sweep(dist: ValuationDistribution, fn: NetworkValueFn, c: float, n_grid: Sequence[int],
                    seed: int, samples: Optional[int] = None, workers: int = 1) -> list[dict]:
    """One row per n: uniform/optimal profit ratio and price of information.

    Complete-information and optimal-mechanism profits share draws at each n.
    Standard errors of the ratios come from the delta method (the uniform
    profit is deterministic).
    """
    rows = []
    for n in n_grid:
        reps = samples or default_replicates(n)
        complete, diff = profit_pair(dist, fn, c, n, reps, seed, workers)
        uniform = solve_uniform(dist, fn, c, n).expected_profit
        ratio = uniform / diff.mean if diff.mean > 0 else math.nan
        ratio_se = ratio * diff.std_error / diff.mean if diff.mean > 0 else math.nan
        poi = complete.mean / uniform if uniform > 0 else math.nan
        poi_se = complete.std_error / uniform if uniform > 0 else math.nan
        rows.append({
            "n": n,
            "model_params": fn.name,
            "cost": c,
            "replicates": reps,
            "uniform_profit": uniform,
            "diff_profit": diff.mean,
            "diff_se": diff.std_error,
            "complete_profit": complete.mean,
            "complete_se": complete.std_error,
            "ratio_U_over_D": ratio,
            "ratio_se": ratio_se,
            "poi": poi,
            "poi_se": poi_se,
            "poi_vs_diff": complete.mean / diff.mean if diff.mean > 0 else math.nan,
        })
    return rows
