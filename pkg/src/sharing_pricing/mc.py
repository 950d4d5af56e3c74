"""Deterministic Monte-Carlo engine.

Replicate ``i`` of a plan always sees the generator derived from
``(master_seed, i)``. Replicates are grouped into fixed-size chunks; each
chunk is summarised with a streaming (Welford) accumulator and the chunk
summaries are merged by a pairwise tree fixed by chunk index. Worker count
therefore only decides *where* a chunk runs, never the arithmetic, so
estimates are bitwise reproducible for any number of workers.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import time
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .valuation import replicate_rng

CHUNK = 64

Estimand = Callable[[np.random.Generator], Union[float, Sequence[float], np.ndarray]]


class NonFiniteEstimate(ArithmeticError):
    def __init__(self, replicate: int, value) -> None:
        super().__init__(f"estimand returned non-finite value {value!r} at replicate {replicate}")
        self.replicate = replicate


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    replicates: int
    seed: int
    elapsed: float = 0.0

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def scaled(self, factor: float) -> "EstimateWithCI":
        return EstimateWithCI(self.mean * factor, self.std_error * abs(factor), self.replicates, self.seed, self.elapsed)


@dataclass(frozen=True)
class ReplicatePlan:
    master_seed: int
    replicate_count: int

    def __post_init__(self) -> None:
        if self.replicate_count < 2:
            raise ValueError("a Monte-Carlo plan needs at least 2 replicates")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")

    def substream(self, i: int) -> np.random.Generator:
        return replicate_rng(self.master_seed, i)


class RunningStats:
    """Mean and M2 of fixed-width vectors: Welford updates, block summaries and Chan's merge."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self, width: int) -> None:
        self.count = 0
        self.mean = np.zeros(width)
        self.m2 = np.zeros(width)

    def push(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: "RunningStats") -> "RunningStats":
        out = RunningStats(self.mean.size)
        n = self.count + other.count
        if n == 0:
            return out
        delta = other.mean - self.mean
        out.count = n
        out.mean = self.mean + delta * (other.count / n)
        out.m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return out

    @classmethod
    def from_block(cls, block: np.ndarray) -> "RunningStats":
        """Summarise a (count, width) block with a two-pass mean and M2."""
        out = cls(block.shape[1])
        out.count = block.shape[0]
        out.mean = block.mean(axis=0)
        dev = block - out.mean
        out.m2 = (dev * dev).sum(axis=0)
        return out

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)


def _as_vector(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def _run_chunk(estimand: Estimand, plan: ReplicatePlan, chunk: int, indexed: bool) -> RunningStats:
    ids = range(chunk * CHUNK, min((chunk + 1) * CHUNK, plan.replicate_count))
    rows = [_as_vector(estimand(i if indexed else plan.substream(i))) for i in ids]
    try:
        block = np.vstack(rows)
    except ValueError as exc:
        raise ValueError("estimand must return the same number of components every replicate") from exc
    bad = ~np.isfinite(block).all(axis=1)
    if bad.any():
        k = int(np.argmax(bad))
        x = block[k]
        raise NonFiniteEstimate(ids[k], x.tolist() if x.size > 1 else float(x[0]))
    return RunningStats.from_block(block)


_FORKED_TASK = None


def _forked_chunk(chunk: int):
    estimand, plan, indexed = _FORKED_TASK
    return _run_chunk(estimand, plan, chunk, indexed)


def _tree_merge(parts: list[RunningStats]) -> RunningStats:
    while len(parts) > 1:
        merged = [parts[k].merge(parts[k + 1]) for k in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def run_chunks(plan: ReplicatePlan, estimand: Estimand, workers: int = 1, indexed: bool = False) -> RunningStats:
    """Run every replicate in fixed chunks and merge them in a tree fixed by chunk index.

    With ``indexed`` the estimand receives the replicate index instead of
    its generator.
    """
    global _FORKED_TASK
    n_chunks = math.ceil(plan.replicate_count / CHUNK)
    if workers > 1 and n_chunks > 1 and "fork" in mp.get_all_start_methods():
        # estimands may close over lambdas, so they reach the workers by fork, not pickle
        _FORKED_TASK = (estimand, plan, indexed)
        try:
            with mp.get_context("fork").Pool(min(workers, n_chunks)) as pool:
                parts = pool.map(_forked_chunk, range(n_chunks), chunksize=1)
        finally:
            _FORKED_TASK = None
    else:
        parts = [_run_chunk(estimand, plan, k, indexed) for k in range(n_chunks)]
    return _tree_merge(parts)


def run_estimators(plan: ReplicatePlan, estimand: Estimand, workers: int = 1,
                   indexed: bool = False) -> list[EstimateWithCI]:
    """Estimate every component of a vector-valued estimand on shared replicates."""
    t0 = time.perf_counter()
    stats = run_chunks(plan, estimand, workers, indexed)
    elapsed = time.perf_counter() - t0
    se = np.sqrt(stats.variance / stats.count)
    return [
        EstimateWithCI(float(m), float(s), stats.count, plan.master_seed, elapsed)
        for m, s in zip(stats.mean, se)
    ]


def run_estimator(plan: ReplicatePlan, estimand: Estimand, workers: int = 1,
                  indexed: bool = False) -> EstimateWithCI:
    """Mean and standard error of a scalar estimand over the plan's replicates."""
    return run_estimators(plan, estimand, workers, indexed)[0]
