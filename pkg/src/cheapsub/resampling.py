"""Seedable randomness, subsampling, resampling and the deterministic
parallel replication engine.

Randomness is counter-based: every random stream is a Philox generator
keyed by ``(master_seed, stream_id)``, so stream b is derivable without
generating streams 0..b-1 and the full output of a replication run is a
pure function of the data and the plan, independent of how many worker
processes execute it.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimatorFailure

_MASK64 = 0xFFFFFFFFFFFFFFFF

#: Default subsample proportion, m = floor(0.632 * n).
DEFAULT_ETA = 0.632

#: Retry r of replicate b draws from stream b + r * _RETRY_STRIDE, keeping
#: retry streams disjoint from every first-attempt stream.
_RETRY_STRIDE = 1 << 48


@dataclass(frozen=True)
class SeedSpec:
    """Key of one random stream: (master_seed, stream_id) -> generator state."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def with_stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)

    def submaster(self, index: int) -> int:
        """Derive an independent master seed, e.g. one per simulated dataset."""
        ss = np.random.SeedSequence(self.master_seed & _MASK64, spawn_key=(index,))
        return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class IndexSet:
    """Record positions selected by one draw."""

    indices: np.ndarray
    n: int
    m: int
    with_replacement: bool

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp)
        if self.indices.ndim != 1 or len(self.indices) != self.m:
            raise ValueError("index set must be one-dimensional with length m")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise ValueError("indices out of range [0, n)")
        if not self.with_replacement:
            if self.m > self.n:
                raise ValueError("without replacement requires m <= n")
            if len(np.unique(self.indices)) != self.m:
                raise ValueError("without-replacement draw produced duplicate indices")


def subsample(n: int, m: int, seed: SeedSpec) -> IndexSet:
    """Draw a uniformly distributed m-subset of [0, n) without replacement.

    Implemented as the head of a Fisher-Yates permutation; deterministic
    given the seed.
    """
    if not 1 <= m < n:
        raise ValueError(f"subsample requires 1 <= m < n, got m={m}, n={n}")
    idx = seed.generator().permutation(n)[:m]
    return IndexSet(indices=idx, n=n, m=m, with_replacement=False)


def resample_with_replacement(n: int, k: int, seed: SeedSpec) -> IndexSet:
    """Draw k i.i.d. uniform indices from [0, n); duplicates permitted."""
    if k < 1:
        raise ValueError(f"resample size must be >= 1, got k={k}")
    if n < 1:
        raise ValueError(f"source size must be >= 1, got n={n}")
    idx = seed.generator().integers(0, n, size=k)
    return IndexSet(indices=idx, n=n, m=k, with_replacement=True)


def take_rows(data, indices):
    """Subset a data handle by record positions.

    Understands ndarrays, objects exposing ``take_rows`` and tuples of
    arrays (e.g. a (X, y) design pair).
    """
    if hasattr(data, "take_rows"):
        return data.take_rows(indices)
    if isinstance(data, np.ndarray):
        return data[indices]
    if isinstance(data, tuple):
        return tuple(a[indices] for a in data)
    raise TypeError(f"cannot subset data of type {type(data).__name__}")


def n_rows(data) -> int:
    if isinstance(data, tuple):
        return len(data[0])
    return len(data)


@dataclass(frozen=True)
class ReplicationPlan:
    """Everything a replication run needs besides the data and estimator.

    ``m`` wins over ``eta`` when both are given; with neither, the default
    proportion rule m = floor(0.632 * n) applies.  ``with_replacement``
    switches to full-size resamples (the Cheap Bootstrap comparator).
    ``stream_offset`` shifts the replicate stream ids, letting callers run
    several independent replicate families under one master seed.
    """

    master_seed: int
    B: int
    m: int | None = None
    eta: float | None = None
    with_replacement: bool = False
    max_retries: int = 5
    workers: int | None = 1
    stream_offset: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.eta is not None and not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def resolve_size(self, n: int) -> int:
        """Number of records drawn per replicate for a source of size n."""
        if self.with_replacement:
            return n
        if self.m is not None:
            m = self.m
        else:
            m = int((self.eta if self.eta is not None else DEFAULT_ETA) * n)
        if not 1 <= m < n:
            raise ValueError(f"subsample size must satisfy 1 <= m < n, "
                             f"got m={m}, n={n}")
        return m

    def resolved_workers(self) -> int:
        if self.workers is None:
            return os.cpu_count() or 1
        return max(1, self.workers)


@dataclass
class ReplicationResult:
    """Replicate estimates plus retry diagnostics, ordered by replicate index."""

    estimates: np.ndarray
    B: int
    m: int
    n: int
    with_replacement: bool
    retries: dict[int, int] = field(default_factory=dict)

    @property
    def total_retries(self) -> int:
        return sum(self.retries.values())


def _fit_replicate(data, estimator, master_seed, stream_offset, b, size,
                   with_replacement, n, max_retries):
    """One replicate with the retry-then-fail policy; returns (estimate, retries)."""
    last_error = None
    for attempt in range(max_retries + 1):
        seed = SeedSpec(master_seed, stream_offset + b + attempt * _RETRY_STRIDE)
        if with_replacement:
            idx = resample_with_replacement(n, size, seed)
        else:
            idx = subsample(n, size, seed)
        try:
            result = estimator.fit(take_rows(data, idx.indices))
            return float(result.point), attempt
        except EstimatorFailure as exc:
            last_error = exc
    raise EstimatorFailure(
        f"replicate {b} failed after {max_retries + 1} attempts: {last_error}"
    ) from last_error


def _run_chunk(args):
    (data, estimator, master_seed, stream_offset, b_list, size,
     with_replacement, n, max_retries) = args
    out = []
    for b in b_list:
        est, retries = _fit_replicate(data, estimator, master_seed, stream_offset,
                                      b, size, with_replacement, n, max_retries)
        out.append((b, est, retries))
    return out


def run_replications(data, estimator, plan: ReplicationPlan) -> ReplicationResult:
    """Fit the estimator on B independent replicate draws of the data.

    Replicate b draws its subsample (or resample) from stream
    ``plan.stream_offset + b``; a failed fit is retried on a fresh derived
    stream up to ``plan.max_retries`` times and then raised.  For a fixed
    master seed the result is identical for any worker count: replicates
    are pure functions of their stream, and results are collected in
    replicate order.
    """
    n = n_rows(data)
    size = plan.resolve_size(n)
    workers = plan.resolved_workers()

    replicate_ids = list(range(plan.B))
    if workers == 1 or plan.B == 1:
        rows = _run_chunk((data, estimator, plan.master_seed, plan.stream_offset,
                           replicate_ids, size, plan.with_replacement, n,
                           plan.max_retries))
    else:
        n_chunks = min(plan.B, workers * 4)
        chunks = [replicate_ids[i::n_chunks] for i in range(n_chunks)]
        args = [(data, estimator, plan.master_seed, plan.stream_offset, chunk,
                 size, plan.with_replacement, n, plan.max_retries)
                for chunk in chunks if chunk]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk_rows in pool.map(_run_chunk, args):
                rows.extend(chunk_rows)

    rows.sort(key=lambda r: r[0])
    estimates = np.array([r[1] for r in rows], dtype=np.float64)
    retries = {b: r for b, _, r in rows if r > 0}
    return ReplicationResult(estimates=estimates, B=plan.B, m=size, n=n,
                             with_replacement=plan.with_replacement,
                             retries=retries)
