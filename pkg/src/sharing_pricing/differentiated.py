"""The revenue-optimal (differentiated) mechanism under private valuations.

The platform admits the users with the largest virtual valuations, choosing
how many by maximising virtual surplus. Expected profit equals expected
virtual surplus; the per-user payment rule is recovered from the interim
allocation value by the envelope formula and audited for incentive
compatibility and individual rationality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complete import best_prefix
from .mc import EstimateWithCI, ReplicatePlan, run_estimator
from .network import NetworkValueFn, validate_cost
from .valuation import ValuationDistribution, ValuationProfile, replicate_rng, sample_sorted

DEFAULT_GRID = 101
FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class VirtualProfile:
    g_values: np.ndarray
    source: ValuationProfile


@dataclass(frozen=True)
class DiffProfitRealization:
    m_star: int
    virtual_surplus: float


def virtual_profile(profile: ValuationProfile, dist: ValuationDistribution) -> VirtualProfile:
    return VirtualProfile(np.asarray(dist.virtual(profile.values), dtype=float), profile)


def virtual_surplus_realization(profile: ValuationProfile, dist: ValuationDistribution,
                                fn: NetworkValueFn, c: float) -> DiffProfitRealization:
    """Best v(m) * (sum of the m largest virtual values) - m*c for one profile."""
    c = validate_cost(c, fn)
    g = virtual_profile(profile, dist).g_values
    m, surplus = best_prefix(g, fn.table(g.size), c)
    return DiffProfitRealization(m, surplus)


class DiffProfit:
    """Estimand: virtual surplus of one sampled profile."""

    def __init__(self, dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int) -> None:
        self.dist, self.c, self.n = dist, validate_cost(c, fn), n
        self.vtable = fn.table(n)

    def __call__(self, rng: np.random.Generator) -> float:
        g = self.dist.virtual(sample_sorted(self.dist, self.n, rng))
        return best_prefix(g, self.vtable, self.c)[1]


def expected_diff_profit(dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int,
                         replicates: int, seed: int, workers: int = 1) -> EstimateWithCI:
    """Monte-Carlo estimate of the optimal mechanism's expected profit."""
    return run_estimator(ReplicatePlan(seed, replicates), DiffProfit(dist, fn, c, n), workers)


@dataclass(frozen=True)
class PaymentSchedule:
    """Interim allocation value and payment of one user on a grid of reports.

    ``P_quad`` bounds the trapezoidal error of the payment integral
    (exact for monotone V); ``P_se`` is the Monte-Carlo error alone.
    """

    grid: np.ndarray
    V_hat: np.ndarray
    P_hat: np.ndarray
    samples_per_point: int
    V_se: np.ndarray
    P_se: np.ndarray
    P_quad: np.ndarray
    expected_revenue: EstimateWithCI | None = field(default=None, compare=False)

    @property
    def P_uncertainty(self) -> np.ndarray:
        return np.hypot(self.P_se, self.P_quad)


def _cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Running trapezoid integral along the last axis, starting at 0."""
    out = np.zeros_like(y)
    steps = 0.5 * (y[..., 1:] + y[..., :-1]) * np.diff(x)
    np.cumsum(steps, axis=-1, out=out[..., 1:])
    return out


def allocation_values(theta: float, others_g: np.ndarray, g_theta: float,
                      vtable: np.ndarray, c: float) -> np.ndarray:
    """Allocation value v(m*) * [user admitted] for each row of opponents.

    ``others_g`` has shape (samples, n-1), rows sorted descending. The user
    ranks ahead of opponents with equal virtual value.
    """
    samples, k = others_g.shape
    rank = (others_g > g_theta).sum(axis=1)
    joint = np.empty((samples, k + 1))
    joint[:, :k] = others_g
    joint[:, k] = g_theta
    joint = -np.sort(-joint, axis=1)
    objective = np.zeros((samples, k + 2))
    np.cumsum(joint, axis=1, out=objective[:, 1:])
    objective *= vtable[: k + 2]
    objective -= c * np.arange(k + 2)
    m_star = objective.argmax(axis=1)
    return np.where(rank < m_star, vtable[m_star], 0.0)


def estimate_payment_schedule(dist: ValuationDistribution, fn: NetworkValueFn, c: float, n: int,
                              grid_size: int = DEFAULT_GRID, samples_per_point: int = 20_000,
                              seed: int = 0) -> PaymentSchedule:
    """Estimate V(theta) and P(theta) = theta V(theta) - int_0^theta V.

    The same pool of opponent profiles is reused at every grid point, so
    V is compared across reports on common random numbers.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    c = validate_cost(c, fn)
    grid = np.linspace(0.0, 1.0, grid_size)
    rng = replicate_rng(seed, 0)
    samples = samples_per_point if n > 1 else 1
    u = rng.random((samples, n - 1))
    others = dist.inverse_cdf(-np.sort(-u, axis=1)) if n > 1 else u
    others_g = np.asarray(dist.virtual(others), dtype=float).reshape(samples, n - 1)
    vtable = fn.table(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        grid_g = np.asarray(dist.virtual(grid), dtype=float)
    # g -> -inf where the density vanishes; keep it finite so 0 * g stays 0
    grid_g = np.where(np.isnan(grid_g), -1e12, np.maximum(grid_g, -1e12))

    alloc = np.column_stack([allocation_values(t, others_g, gt, vtable, c) for t, gt in zip(grid, grid_g)])
    pay = grid * alloc - _cumulative_trapezoid(alloc, grid)

    V_hat = alloc.mean(axis=0)
    P_hat = pay.mean(axis=0)
    root = np.sqrt(samples)
    V_se = alloc.std(axis=0, ddof=1) / root if samples > 1 else np.zeros(grid_size)
    P_se = pay.std(axis=0, ddof=1) / root if samples > 1 else np.zeros(grid_size)
    h = np.diff(grid)
    P_quad = np.concatenate([[0.0], np.cumsum(0.5 * h * np.abs(np.diff(V_hat)))])

    # n * E[P(theta)] per opponent row; rows are i.i.d. so this is an honest MC mean
    density = np.asarray(dist.pdf(grid), dtype=float)
    per_row = n * _cumulative_trapezoid(pay * density, grid)[:, -1]
    revenue = EstimateWithCI(
        float(per_row.mean()),
        float(per_row.std(ddof=1) / root) if samples > 1 else 0.0,
        samples,
        seed,
    )
    return PaymentSchedule(grid, V_hat, P_hat, samples, V_se, P_se, P_quad, revenue)


@dataclass(frozen=True)
class ICReport:
    worst_violation: float
    flagged: list[tuple[float, float, float]]
    pairs_checked: int
    ir_worst: float
    ir_flagged: list[float]
    monotone_flagged: list[float]

    @property
    def ok(self) -> bool:
        return not (self.flagged or self.ir_flagged or self.monotone_flagged)


def check_incentive_compatibility(schedule: PaymentSchedule, z: float = 3.0) -> ICReport:
    """Audit truthful reporting on every ordered pair of grid reports.

    A pair (theta, theta') is flagged when the misreport payoff
    theta*V(theta') - P(theta') beats the truthful payoff by more than
    ``z`` pooled standard errors. IR and monotonicity of V are audited the
    same way.
    """
    t = schedule.grid
    V, P = schedule.V_hat, schedule.P_hat
    se = np.hypot(schedule.V_se, schedule.P_se)

    truthful = t * V - P
    misreport = t[:, None] * V[None, :] - P[None, :]
    gain = misreport - truthful[:, None]
    np.fill_diagonal(gain, 0.0)
    slack = z * np.hypot(se[:, None], se[None, :]) + FLOAT_SLACK
    rows, cols = np.nonzero(gain > slack)
    flagged = [(float(t[i]), float(t[j]), float(gain[i, j])) for i, j in zip(rows, cols)]

    ir_bad = truthful < -z * se - FLOAT_SLACK
    dV = np.diff(V)
    mono_bad = dV < -z * np.hypot(schedule.V_se[1:], schedule.V_se[:-1]) - FLOAT_SLACK
    return ICReport(
        worst_violation=float(max(gain.max(), 0.0)),
        flagged=flagged,
        pairs_checked=t.size * (t.size - 1),
        ir_worst=float(min(truthful.min(), 0.0)),
        ir_flagged=[float(x) for x in t[ir_bad]],
        monotone_flagged=[float(x) for x in t[1:][mono_bad]],
    )
