"""Optimal pricing for a sharing platform whose value grows with participation."""

from .complete import CompleteInfoSolution, brute_force_complete, solve_complete
from .differentiated import (
    check_incentive_compatibility,
    estimate_payment_schedule,
    expected_diff_profit,
    virtual_surplus_realization,
)
from .mc import EstimateWithCI, NonFiniteEstimate, ReplicatePlan, run_estimator, run_estimators
from .network import NetworkValueFn, bounded, general_concave, metcalfe, zipf
from .poi import PoIReport, estimate_poi, poi_bounds_general
from .sweep import run_ratio_sweep
from .two_sided import (
    TwoSidedInstance,
    solve_two_sided_complete,
    solve_two_sided_uniform,
    large_market_closed_form,
    two_sided_expected_diff_profit,
    two_sided_poi,
)
from .uniform import asymptotic_oracle, solve_uniform, uniform_objective
from .valuation import UNIFORM, ValuationDistribution, ValuationProfile, order_stat_moments, sample_profile

__all__ = [
    "CompleteInfoSolution", "brute_force_complete", "solve_complete",
    "check_incentive_compatibility", "estimate_payment_schedule", "expected_diff_profit",
    "virtual_surplus_realization",
    "EstimateWithCI", "NonFiniteEstimate", "ReplicatePlan", "run_estimator", "run_estimators",
    "NetworkValueFn", "bounded", "general_concave", "metcalfe", "zipf",
    "PoIReport", "estimate_poi", "poi_bounds_general",
    "run_ratio_sweep",
    "TwoSidedInstance", "solve_two_sided_complete", "solve_two_sided_uniform", "large_market_closed_form",
    "two_sided_expected_diff_profit", "two_sided_poi",
    "asymptotic_oracle", "solve_uniform", "uniform_objective",
    "UNIFORM", "ValuationDistribution", "ValuationProfile", "order_stat_moments", "sample_profile",
]
