"""Valuation distributions, sorted profile sampling and order-statistic moments."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

REGULARITY_GRID = 10_000
REGULARITY_TOL = -1e-9


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


class IrregularDistributionError(ValueError):
    """The virtual valuation of a distribution is not non-decreasing."""


ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ValuationDistribution:
    """A valuation distribution supported on [0, 1].

    ``cdf`` and ``pdf`` must accept numpy arrays. ``ppf`` is optional; when it
    is missing the CDF is inverted numerically by bisection.

    Construction checks that the virtual valuation is non-decreasing on a grid
    of 10^4 points (points where the density vanishes are skipped).
    """

    cdf: ArrayFn
    pdf: ArrayFn
    name: str = "custom"
    ppf: Optional[ArrayFn] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        ends = np.asarray(self.cdf(np.array([0.0, 1.0])), dtype=float)
        if abs(ends[0]) > 1e-12 or abs(ends[1] - 1.0) > 1e-12:
            raise ValueError(f"{self.name}: cdf must satisfy F(0)=0 and F(1)=1")
        grid = np.linspace(0.0, 1.0, REGULARITY_GRID)
        cdf = np.asarray(self.cdf(grid), dtype=float)
        if np.any(np.diff(cdf) < -1e-12):
            raise ValueError(f"{self.name}: cdf is not non-decreasing")
        dens = np.asarray(self.pdf(grid), dtype=float)
        if np.any(dens < 0):
            raise ValueError(f"{self.name}: pdf is negative somewhere on [0, 1]")
        keep = dens > 0
        g = grid[keep] - (1.0 - cdf[keep]) / dens[keep]
        steps = np.diff(g)
        if steps.size and steps.min() < REGULARITY_TOL:
            k = int(np.argmin(steps))
            raise IrregularDistributionError(
                f"{self.name}: virtual valuation decreases near theta={grid[keep][k + 1]:.6g}"
            )

    def inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        if self.ppf is not None:
            return np.asarray(self.ppf(u), dtype=float)
        lo = np.zeros_like(u, dtype=float)
        hi = np.ones_like(u, dtype=float)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.cdf(mid)) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def virtual(self, theta):
        """Vectorised virtual valuation; no domain checks."""
        theta = np.asarray(theta, dtype=float)
        return theta - (1.0 - self.cdf(theta)) / self.pdf(theta)


def _uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def _uniform_pdf(x):
    return np.ones_like(np.asarray(x, dtype=float))


class _UniformDistribution(ValuationDistribution):
    def virtual(self, theta):
        return 2.0 * np.asarray(theta, dtype=float) - 1.0


UNIFORM = _UniformDistribution(_uniform_cdf, _uniform_pdf, "uniform", _uniform_cdf)


def uniform() -> ValuationDistribution:
    return UNIFORM


def power_law(a: float) -> ValuationDistribution:
    """F(x) = x**a on [0, 1]; regular only for a >= 1."""
    if a <= 0:
        raise ValueError("power_law exponent must be positive")

    def pdf(x):
        with np.errstate(divide="ignore"):
            return a * np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** (a - 1.0)

    return ValuationDistribution(
        cdf=lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0) ** a,
        pdf=pdf,
        name=f"power({a:g})",
        ppf=lambda u: np.asarray(u, dtype=float) ** (1.0 / a),
    )


@dataclass(frozen=True)
class ValuationProfile:
    """Valuations sorted in descending order, tagged with the replicate seed."""

    values: np.ndarray
    seed_id: Optional[int] = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a profile needs at least one valuation")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("valuations must lie in [0, 1]")
        if np.any(np.diff(v) > 0):
            raise ValueError("profile must be sorted in descending order")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values, seed_id: Optional[int] = None) -> "ValuationProfile":
        """Sort arbitrary valuations (stable, descending) into a profile."""
        v = np.asarray(values, dtype=float)
        order = np.argsort(-v, kind="stable")
        return cls(v[order], seed_id)

    def __len__(self) -> int:
        return self.values.size


def replicate_rng(seed: int, replicate: int = 0) -> np.random.Generator:
    """Generator for one replicate, derived from (seed, replicate) only."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate),)))


def sample_sorted(dist: ValuationDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    u[::-1].sort()
    return dist.inverse_cdf(u)


def sample_profile(dist: ValuationDistribution, n: int, seed: int, replicate: int = 0) -> ValuationProfile:
    """Draw ``n`` i.i.d. valuations by inverse-CDF sampling, sorted descending.

    The result depends only on ``(dist, n, seed, replicate)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return ValuationProfile(sample_sorted(dist, n, replicate_rng(seed, replicate)), seed_id=replicate)


def virtual_valuation(dist: ValuationDistribution, theta: float) -> float:
    """g(theta) = theta - (1 - F(theta)) / f(theta)."""
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta={theta!r} outside [0, 1]")
    dens = float(dist.pdf(np.asarray(theta)))
    if dens <= 0.0:
        raise DomainError(f"density vanishes at theta={theta!r}; virtual valuation undefined")
    return float(theta - (1.0 - float(dist.cdf(np.asarray(theta)))) / dens)


@dataclass(frozen=True)
class OrderStatMoments:
    mean: float
    variance: float
    covariance: Optional[float] = None


def order_stat_moments(n: int, i: int, j: Optional[int] = None) -> OrderStatMoments:
    """Moments of the i-th largest of n i.i.d. U[0, 1] draws.

    With ``j`` given (i < j <= n) the covariance between the i-th and j-th
    largest is included. Evaluated in exact rational arithmetic.
    """
    if n < 1 or not 1 <= i <= n:
        raise IndexError(f"order statistic index i={i} out of range for n={n}")
    if j is not None and not i < j <= n:
        raise IndexError(f"second index j={j} must satisfy {i} < j <= {n}")
    denom = Fraction((n + 1) ** 2 * (n + 2))
    mean = 1 - Fraction(i, n + 1)
    var = Fraction(i * (n + 1 - i)) / denom
    cov = None if j is None else float(Fraction(i * (n + 1 - j)) / denom)
    return OrderStatMoments(float(mean), float(var), cov)
