"""Replicated Monte Carlo experiments.

A run draws ``n_process`` cache fields (or client positions over fixed
stations) and, for each, ``n_alloc`` independent allocations.  Process
replications are grouped into blocks of ``block_size``; every block owns
Philox streams keyed by ``(seed, block index, purpose)``, so results do not
depend on how blocks are spread over worker processes.  Fields are keyed by
block only, hence all strategies and part counts in one sweep see the same
fields (paired sampling).
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .cost import CostSpec, MissSpec, miss_batch, w_cost_batch
from .finite_field import FieldSpec
from .geometry import CacheField, Disk, GeometryError, Rectangle
from .strategies import (
    CodedBatch,
    deliver_uncoded_batch,
    failure_params,
    fast_index_increments,
    nearest_batch,
)

STRATEGIES = ("uncoded", "coded", "coded-fast", "nearest")
_STRATEGY_TAG = {s: i + 1 for i, s in enumerate(STRATEGIES)}
_FIELD_TAG = 0


@dataclass(frozen=True)
class SimPlan:
    k: int = 1
    strategy: str = "coded"
    measure: CostSpec | MissSpec = field(default_factory=CostSpec)
    lam: float | None = 1.8324e-5
    stations: CacheField | None = None
    q: int = 256
    n_process: int = 500
    n_alloc: int = 100
    seed: int = 0
    block_size: int = 25
    client_fraction: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.n_process < 1 or self.n_alloc < 1 or self.block_size < 1:
            raise ValueError("n_process, n_alloc and block_size must be >= 1")
        if self.stations is None:
            if self.lam is None or not self.lam > 0:
                raise ValueError("a Poisson source needs lam > 0")
        elif self.stations.empty:
            raise GeometryError("station file contains no stations")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def source(self) -> str:
        return "hpp" if self.stations is None else "imported"

    @property
    def measure_name(self) -> str:
        return "cost" if isinstance(self.measure, CostSpec) else "miss"

    @property
    def radius(self) -> float:
        """Truncation disk radius around the client for Poisson sources."""
        m = self.measure
        return m.delta_max if isinstance(m, CostSpec) else m.r

    @property
    def n_blocks(self) -> int:
        return -(-self.n_process // self.block_size)


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    n: int
    k: int
    strategy: str
    measure: str
    source: str
    seed: int
    wall_seconds: float = field(default=0.0, compare=False)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _block_fields(plan: SimPlan, block: int, n_p: int):
    """Rank-ordered client distances, shape (n_p, L), padded with inf."""
    rng = _stream(plan.seed, block, _FIELD_TAG)
    if plan.stations is None:
        disk = Disk(0.0, 0.0, plan.radius)
        counts = rng.poisson(plan.lam * disk.area, size=n_p)
        pts = disk.uniform(int(counts.sum()), rng)
        d = np.hypot(pts[:, 0], pts[:, 1])
        L = max(int(counts.max()), 1)
        dist = np.full((n_p, L), np.inf)
        rows = np.repeat(np.arange(n_p), counts)
        cols = np.arange(len(d)) - np.repeat(np.cumsum(counts) - counts, counts)
        dist[rows, cols] = d
    else:
        region = plan.stations.region
        f = plan.client_fraction
        cx, cy = region.center
        sub = Rectangle(cx - region.width * f / 2, cy - region.height * f / 2,
                        region.width * f, region.height * f)
        clients = sub.uniform(n_p, rng)
        pos = plan.stations.positions
        dist = np.hypot(clients[:, None, 0] - pos[None, :, 0], clients[:, None, 1] - pos[None, :, 1])
    # stable: ties keep the lower cache index
    dist = np.sort(dist, axis=1, kind="stable")
    return dist


def _block_ranks(plan: SimPlan, strategy: str, k: int, block: int, valid: np.ndarray) -> np.ndarray:
    """0-based contacted ranks for every (process, allocation) sample, shape (B, k)."""
    B, L = valid.shape
    rng = _stream(plan.seed, block, _STRATEGY_TAG[strategy], k)
    if strategy == "nearest":
        return nearest_batch(valid, k)
    if strategy == "uncoded":
        labels = rng.integers(0, k, size=(B, L))
        return deliver_uncoded_batch(labels, valid, k)
    if strategy == "coded-fast":
        ranks = fast_index_increments("coded", k, plan.q, rng, size=B) - 1
        counts = valid.sum(axis=1)
        ranks[ranks >= counts[:, None]] = -1
        return ranks
    spec = FieldSpec(plan.q)
    state = CodedBatch(B, k, spec)
    for j in range(L):
        todo = valid[:, j] & ~state.done
        if not todo.any():
            break
        rows = np.flatnonzero(todo)
        state.offer(rows, rng.integers(0, spec.q, size=(len(rows), k), dtype=spec.dtype), j)
    return state.ranks


def _run_block(plan: SimPlan, block: int, ks, strategies):
    lo = block * plan.block_size
    n_p = min(plan.block_size, plan.n_process - lo)
    dist = np.repeat(_block_fields(plan, block, n_p), plan.n_alloc, axis=0)
    valid = np.isfinite(dist)
    out = {}
    for strategy in strategies:
        for k in ks:
            ranks = _block_ranks(plan, strategy, k, block, valid)
            if isinstance(plan.measure, CostSpec):
                vals = w_cost_batch(dist, ranks, plan.measure)
            else:
                vals = miss_batch(dist, ranks, plan.measure)
            out[strategy, k] = vals.reshape(n_p, plan.n_alloc)
    return block, out


def _run_block_args(args):
    return _run_block(*args)


def simulate_samples(plan: SimPlan, ks=None, strategies=None) -> dict:
    """Per-sample measure values, ``{(strategy, k): array (n_process, n_alloc)}``."""
    ks = tuple(ks) if ks is not None else (plan.k,)
    strategies = tuple(strategies) if strategies is not None else (plan.strategy,)
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    jobs = [(plan, b, ks, strategies) for b in range(plan.n_blocks)]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            results = list(pool.map(_run_block_args, jobs))
    else:
        results = [_run_block_args(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    return {key: np.concatenate([r[1][key] for r in results], axis=0)
            for key in results[0][1]}


def summarize(samples: np.ndarray) -> tuple[float, float]:
    """Mean and standard error, treating each process replication as one cluster."""
    n_p = samples.shape[0]
    mean = float(samples.mean())
    if n_p > 1:
        se = float(samples.mean(axis=1).std(ddof=1) / math.sqrt(n_p))
    else:
        se = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return mean, se


def run_sweep(plan: SimPlan, ks=None, strategies=None) -> list[Estimate]:
    t0 = time.perf_counter()
    samples = simulate_samples(plan, ks, strategies)
    wall = time.perf_counter() - t0
    out = []
    for (strategy, k), vals in samples.items():
        mean, se = summarize(vals)
        out.append(Estimate(mean, se, vals.size, k, strategy, plan.measure_name,
                            plan.source, plan.seed, wall))
    return out


def run_estimate(plan: SimPlan) -> Estimate:
    return run_sweep(plan)[0]


def run_miss_estimate(plan: SimPlan) -> Estimate:
    if not isinstance(plan.measure, MissSpec):
        raise ValueError("plan measure must be a MissSpec")
    return run_estimate(plan)


@dataclass(frozen=True)
class PairedDifference:
    k: int
    first: str
    second: str
    mean: float
    se: float


def run_paired(plan: SimPlan, ks, first: str = "coded", second: str = "uncoded"):
    """Mean of first - second over shared fields with independent allocations."""
    samples = simulate_samples(plan, ks, (first, second))
    out = []
    for k in ks:
        mean, se = summarize(samples[first, k] - samples[second, k])
        out.append(PairedDifference(k, first, second, mean, se))
    return out


# ---------------------------------------------------------------------------
# increment laws


@dataclass(frozen=True)
class IncrementStep:
    step: int
    failure: float
    values: np.ndarray
    counts: np.ndarray
    mean: float
    se: float
    chi2: float
    pvalue: float
    bins: tuple
    observed: np.ndarray
    expected: np.ndarray


def increment_field_size(k: int, q: int) -> int:
    return k + 50 * k * max(q, k)


def explicit_ranks(strategy: str, k: int, q: int | None, n: int, rng: np.random.Generator) -> np.ndarray:
    """0-based contacted ranks from explicit delivery over a long abstract field.

    Caches are drawn lazily, one rank at a time, for samples still short of k
    parts; the scan stops at :func:`increment_field_size` caches.
    """
    L = increment_field_size(k, q or 2)
    if strategy == "coded":
        spec = FieldSpec(q)
        state = CodedBatch(n, k, spec)
        for j in range(L):
            rows = np.flatnonzero(~state.done)
            if rows.size == 0:
                break
            state.offer(rows, rng.integers(0, q, size=(len(rows), k), dtype=spec.dtype), j)
        return state.ranks
    if strategy == "uncoded":
        first = np.full((n, k), -1, dtype=np.int64)
        have = np.zeros(n, dtype=np.int64)
        for j in range(L):
            rows = np.flatnonzero(have < k)
            if rows.size == 0:
                break
            t = rng.integers(0, k, size=len(rows))
            new = first[rows, t] < 0
            first[rows[new], t[new]] = j
            have[rows[new]] += 1
        first.sort(axis=1)
        return first
    raise ValueError(f"unknown strategy {strategy!r}")


def geometric_chisquare(gaps: np.ndarray, failure: float, min_expected: float = 5.0):
    """Chi-square of gap counts against P(G = m) = (1 - g) g**(m - 1), m >= 1.

    Bins are {1}, {2}, ... with the tail merged so each bin expects at least
    ``min_expected`` counts; at least two bins ({1} and {>= 2}) are kept.
    """
    n = len(gaps)
    m = 1
    edges = []
    while True:
        p_m = (1 - failure) * failure ** (m - 1)
        tail_after = failure**m
        if n * p_m < min_expected or n * tail_after < min_expected:
            break
        edges.append(m)
        m += 1
    if not edges:
        edges = [1]
    probs = [(1 - failure) * failure ** (e - 1) for e in edges]
    probs.append(failure ** edges[-1])
    observed = [int(np.sum(gaps == e)) for e in edges]
    observed.append(int(np.sum(gaps > edges[-1])))
    expected = n * np.array(probs)
    observed = np.array(observed)
    if failure == 0.0:
        ok = bool(np.all(gaps == 1))
        return 0.0 if ok else math.inf, 1.0 if ok else 0.0, tuple(edges), observed, expected
    chi2, pvalue = stats.chisquare(observed, expected)
    return float(chi2), float(pvalue), tuple(edges), observed, expected


def run_increment_histogram(strategy: str, k: int, q: int | None, n: int, seed: int) -> list[IncrementStep]:
    """Empirical gap laws I_i - I_(i-1), i = 2..k, from explicit delivery."""
    if k < 2:
        raise ValueError("increments need k >= 2")
    rng = _stream(seed, _STRATEGY_TAG[strategy], k, q or 0)
    ranks = explicit_ranks(strategy, k, q, n, rng)
    g = failure_params(strategy, k, q)
    out = []
    for i in range(1, k):
        gaps = ranks[:, i] - ranks[:, i - 1]
        values, counts = np.unique(gaps, return_counts=True)
        chi2, pvalue, bins, obs, exp = geometric_chisquare(gaps, float(g[i]))
        out.append(IncrementStep(
            step=i + 1, failure=float(g[i]), values=values, counts=counts,
            mean=float(gaps.mean()), se=float(gaps.std(ddof=1) / math.sqrt(n)),
            chi2=chi2, pvalue=pvalue, bins=bins, observed=obs, expected=exp,
        ))
    return out


def with_workers(plan: SimPlan, workers: int) -> SimPlan:
    return replace(plan, workers=workers)
