"""Network value functions v(m): the service value of a platform with m participants."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class Kind(str, enum.Enum):
    BOUNDED = "bounded"
    ZIPF = "zipf"
    METCALFE = "metcalfe"
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class NetworkValueFn:
    """Service value as a function of the participant count.

    Use the constructors :func:`bounded`, :func:`zipf`, :func:`metcalfe` and
    :func:`general_concave` rather than building instances directly.
    """

    kind: Kind
    rho: Optional[float] = None
    func: Optional[Callable[[float], float]] = field(default=None, repr=False)
    label: str = ""
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def name(self) -> str:
        if self.kind is Kind.BOUNDED:
            return f"bounded(rho={self.rho:g})"
        if self.kind is Kind.GENERAL:
            return f"general({self.label or 'v'})"
        return self.kind.value

    def __call__(self, m):
        """Exact value at integer count(s) ``m``."""
        m = np.asarray(m)
        if np.any(m < 0):
            raise ValueError("participant count must be non-negative")
        if self.kind is Kind.GENERAL:
            return self._general(m.astype(float))
        return self.fluid(m.astype(float))

    def fluid(self, x):
        """Value at a real-valued participant mass ``x`` >= 0."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.BOUNDED:
            return 1.0 - np.power(self.rho, x)
        if self.kind is Kind.METCALFE:
            return x.copy() if x.ndim else x + 0.0
        if self.kind is Kind.ZIPF:
            # log x clipped at 0 so sub-unit (and empty) platforms are worth nothing
            return np.log(np.maximum(x, 1.0))
        lo = np.floor(x)
        frac = x - lo
        v_lo = self._general(lo)
        v_hi = self._general(lo + 1.0)
        return np.where(frac > 0, v_lo + frac * (v_hi - v_lo), v_lo)

    def _general(self, m: np.ndarray):
        try:
            out = np.asarray(self.func(m), dtype=float)
            if out.shape != m.shape:
                raise TypeError
        except (TypeError, ValueError):
            out = np.vectorize(lambda k: float(self.func(k)), otypes=[float])(m)
        return out

    def table(self, n: int) -> np.ndarray:
        """Read-only array of v(0), ..., v(n), cached per n."""
        t = self._tables.get(n)
        if t is None:
            t = np.asarray(self(np.arange(n + 1)), dtype=float)
            t.setflags(write=False)
            if len(self._tables) > 16:
                self._tables.clear()
            self._tables[n] = t
        return t

    def check_concave(self, upto: int, tol: float = 1e-12) -> None:
        """Raise ValueError unless v is non-decreasing and discretely concave on 1..upto."""
        v = self.table(max(upto, 2))
        steps = np.diff(v[1:])
        if np.any(steps < -tol):
            raise ValueError(f"{self.name} is not non-decreasing on [1, {upto}]")
        curv = np.diff(steps)
        scale = np.maximum(np.abs(steps[:-1]), 1.0)
        if np.any(curv > tol * scale):
            k = int(np.argmax(curv > tol * scale)) + 2
            raise ValueError(f"{self.name} violates discrete concavity at m={k}")

    def __reduce__(self):
        return (_rebuild, (self.kind, self.rho, self.func, self.label))


def _rebuild(kind, rho, func, label):
    return NetworkValueFn(kind, rho, func, label)


def bounded(rho: float) -> NetworkValueFn:
    """v(m) = 1 - rho**m, rho in (0, 1)."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return NetworkValueFn(Kind.BOUNDED, rho=float(rho))


def zipf() -> NetworkValueFn:
    """v(m) = log m (natural log), with v(0) = 0."""
    return NetworkValueFn(Kind.ZIPF)


def metcalfe() -> NetworkValueFn:
    """v(m) = m."""
    return NetworkValueFn(Kind.METCALFE)


def general_concave(v: Callable[[float], float], label: str = "") -> NetworkValueFn:
    """User-supplied increasing concave v with v(0) = 0.

    Real-valued arguments (used by the uniform-price objective) are handled
    by linear interpolation between integer counts.
    """
    fn = NetworkValueFn(Kind.GENERAL, func=v, label=label)
    if abs(float(fn(np.asarray(0)))) > 1e-12:
        raise ValueError("a general network value function must satisfy v(0) = 0")
    return fn


def evaluate(fn: NetworkValueFn, m: int) -> float:
    return float(fn(np.asarray(m)))


def from_name(model: str, rho: Optional[float] = None) -> NetworkValueFn:
    model = model.lower()
    if model == "bounded":
        if rho is None:
            raise ValueError("the bounded model requires rho")
        return bounded(rho)
    if rho is not None:
        raise ValueError(f"rho is only meaningful for the bounded model, not {model}")
    if model == "zipf":
        return zipf()
    if model == "metcalfe":
        return metcalfe()
    raise ValueError(f"unknown network model {model!r}")


def validate_cost(c: float, fn: NetworkValueFn) -> float:
    c = float(c)
    if not np.isfinite(c) or c < 0:
        raise ValueError(f"cost must be a non-negative number, got {c}")
    if fn.kind is Kind.BOUNDED and c >= 1.0:
        warnings.warn(f"cost {c} >= 1 under the bounded model: no user is worth admitting", stacklevel=3)
    return c
