"""Uncoded and random-linear-coded allocation and delivery.

Ranks are 1-based in the public API (rank 1 is the nearest cache).  The
``*_batch`` kernels work on many independent (field, allocation) samples at
once and use 0-based ranks with ``-1`` marking parts that were not found.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .finite_field import EchelonBasis, FieldSpec, random_coef_vector
from .geometry import DistanceOrder


class StrategyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Allocation:
    """Per-cache content, indexed like the cache field.

    Uncoded: ``labels`` in {1..k}.  Coded: ``vectors`` of shape (n, k) over GF(q).
    """

    k: int
    labels: np.ndarray | None = None
    vectors: np.ndarray | None = None
    spec: FieldSpec | None = None

    @property
    def coded(self) -> bool:
        return self.vectors is not None

    def __len__(self) -> int:
        return len(self.vectors) if self.coded else len(self.labels)


@dataclass(frozen=True)
class DeliveryResult:
    indices: tuple[int, ...]
    distances: tuple[float, ...]
    complete: bool

    def __post_init__(self):
        idx = self.indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise StrategyError("delivery indices must be strictly increasing")
        if any(b < a for a, b in zip(self.distances, self.distances[1:])):
            raise StrategyError("delivery distances must be non-decreasing")


def allocate_uncoded(n_caches: int, k: int, rng: np.random.Generator) -> Allocation:
    if n_caches < 0 or k < 1:
        raise StrategyError("need n_caches >= 0 and k >= 1")
    return Allocation(k, labels=rng.integers(1, k + 1, size=n_caches))


def allocate_coded(n_caches: int, k: int, spec: FieldSpec, rng: np.random.Generator) -> Allocation:
    if n_caches < 0 or k < 1:
        raise StrategyError("need n_caches >= 0 and k >= 1")
    vecs = random_coef_vector(k, spec, rng, size=n_caches)
    return Allocation(k, vectors=vecs, spec=spec)


def _result(order: DistanceOrder, ranks0, k: int) -> DeliveryResult:
    ranks0 = sorted(ranks0)
    return DeliveryResult(
        indices=tuple(r + 1 for r in ranks0),
        distances=tuple(float(order.distances[r]) for r in ranks0),
        complete=len(ranks0) == k,
    )


def deliver_uncoded(alloc: Allocation, order: DistanceOrder) -> DeliveryResult:
    """Fetch every part from the nearest cache carrying its label."""
    if alloc.coded:
        raise StrategyError("expected an uncoded allocation")
    if len(alloc) != len(order):
        raise StrategyError("allocation and cache field differ in size")
    first: dict[int, int] = {}
    for rank, cache in enumerate(order.indices):
        first.setdefault(int(alloc.labels[cache]), rank)
        if len(first) == alloc.k:
            break
    return _result(order, first.values(), alloc.k)


def deliver_coded(alloc: Allocation, order: DistanceOrder) -> DeliveryResult:
    """Scan caches nearest first, keeping each one that raises the rank."""
    if not alloc.coded:
        raise StrategyError("expected a coded allocation")
    if len(alloc) != len(order):
        raise StrategyError("allocation and cache field differ in size")
    basis = EchelonBasis(alloc.k, alloc.spec)
    ranks = []
    for rank, cache in enumerate(order.indices):
        if basis.insert(alloc.vectors[cache]):
            ranks.append(rank)
            if basis.full:
                break
    return _result(order, ranks, alloc.k)


def deliver_nearest(order: DistanceOrder, k: int) -> DeliveryResult:
    """The k nearest caches: the lower bound any strategy can reach."""
    return _result(order, range(min(k, len(order))), k)


def failure_params(strategy: str, k: int, q: int | None = None) -> np.ndarray:
    """Per-step probability that the next cache is useless, for steps i = 1..k.

    Coded: q**(i-1) / q**k.  Uncoded: (i-1) / k.
    """
    i = np.arange(1, k + 1)
    if strategy == "coded":
        if q is None or q < 2:
            raise StrategyError("coded increments need q >= 2")
        return np.power(float(q), (i - 1 - k).astype(float))
    if strategy == "uncoded":
        return (i - 1) / k
    raise StrategyError(f"unknown strategy {strategy!r}")


def fast_index_increments(strategy: str, k: int, q: int | None, rng: np.random.Generator,
                          size: int | None = None) -> np.ndarray:
    """Contacted ranks drawn directly from the geometric gap law.

    The first rank is 1; each later gap is geometric on {1, 2, ...} with
    success probability 1 - g_i.  With ``size`` returns shape (size, k).
    """
    if k < 1:
        raise StrategyError("k must be >= 1")
    g = failure_params(strategy, k, q)
    n = 1 if size is None else size
    gaps = np.ones((n, k), dtype=np.int64)
    for i in range(1, k):
        gaps[:, i] = rng.geometric(1.0 - g[i], size=n)
    ranks = np.cumsum(gaps, axis=1)
    return ranks[0] if size is None else ranks


# ---------------------------------------------------------------------------
# batched kernels


def deliver_uncoded_batch(labels: np.ndarray, valid: np.ndarray, k: int) -> np.ndarray:
    """labels (B, L) in 0..k-1 ordered by rank; returns sorted 0-based ranks (B, k), -1 if absent."""
    B, L = labels.shape
    big = np.iinfo(np.int64).max
    out = np.full((B, k), big, dtype=np.int64)
    for t in range(k):
        hit = (labels == t) & valid
        found = hit.any(axis=1)
        out[found, t] = hit[found].argmax(axis=1)
    out.sort(axis=1)
    out[out == big] = -1
    return out


class CodedBatch:
    """Reduced row-echelon bases for B independent coded deliveries.

    ``basis[b, c]`` holds the row whose pivot is column c (when ``has_pivot``).
    Feed caches one rank at a time with :meth:`offer`.
    """

    def __init__(self, B: int, k: int, spec: FieldSpec):
        self.k = k
        self.spec = spec
        self.basis = np.zeros((B, k, k), dtype=spec.dtype)
        self.has_pivot = np.zeros((B, k), dtype=bool)
        self.rank = np.zeros(B, dtype=np.int64)
        self.ranks = np.full((B, k), -1, dtype=np.int64)

    @property
    def done(self) -> np.ndarray:
        return self.rank >= self.k

    def _combine(self, terms: np.ndarray) -> np.ndarray:
        if self.spec.is_binary:
            return np.bitwise_xor.reduce(terms, axis=1)
        return terms.sum(axis=1) % self.spec.q

    def offer(self, rows: np.ndarray, vecs: np.ndarray, position: int) -> np.ndarray:
        """Offer ``vecs[j]`` to sample ``rows[j]`` as the cache at 0-based ``position``.

        Returns the boolean acceptance mask.
        """
        if rows.size == 0:
            return np.zeros(0, dtype=bool)
        sp = self.spec
        basis = self.basis[rows]
        coef = np.where(self.has_pivot[rows], vecs, 0)
        v = sp.sub_array(vecs, self._combine(sp.mul_array(coef[:, :, None], basis)))
        nz = v != 0
        accepted = nz.any(axis=1)
        if accepted.any():
            acc_rows = rows[accepted]
            v = v[accepted]
            piv = nz[accepted].argmax(axis=1)
            n = len(acc_rows)
            lead = v[np.arange(n), piv]
            r = sp.mul_array(sp.inv_array(lead)[:, None], v)
            b = basis[accepted]
            col = b[np.arange(n), :, piv]  # (n, k) entries of existing rows at new pivot
            b = sp.sub_array(b, sp.mul_array(col[:, :, None], r[:, None, :]))
            b[np.arange(n), piv] = r
            self.basis[acc_rows] = b
            self.has_pivot[acc_rows, piv] = True
            self.ranks[acc_rows, self.rank[acc_rows]] = position
            self.rank[acc_rows] += 1
        return accepted


def deliver_coded_batch(vectors: np.ndarray, valid: np.ndarray, spec: FieldSpec) -> np.ndarray:
    """vectors (B, L, k) ordered by rank; returns 0-based contacted ranks (B, k), -1 if absent."""
    B, L, k = vectors.shape
    state = CodedBatch(B, k, spec)
    for j in range(L):
        rows = np.flatnonzero(valid[:, j] & ~state.done)
        if rows.size == 0:
            if not (valid[:, j:].any(axis=1) & ~state.done).any():
                break
            continue
        state.offer(rows, vectors[rows, j], j)
    return state.ranks


def nearest_batch(valid: np.ndarray, k: int) -> np.ndarray:
    B, L = valid.shape
    ranks = np.tile(np.arange(k, dtype=np.int64), (B, 1))
    counts = valid.sum(axis=1)
    ranks[ranks >= counts[:, None]] = -1
    return ranks
