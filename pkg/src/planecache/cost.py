"""Realized cost and miss measures of a delivery."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .strategies import DeliveryResult


@dataclass(frozen=True)
class CostSpec:
    """Capped power-law cost: each part costs min(distance**a, delta_max**a)."""

    a: float = 2.0
    delta_max: float = 700.0

    def __post_init__(self):
        if not (self.a > 0 and self.delta_max > 0):
            raise ValueError("need a > 0 and delta_max > 0")

    @property
    def cap(self) -> float:
        return self.delta_max**self.a

    def gmax(self, k: int) -> float:
        return k * self.cap


@dataclass(frozen=True)
class MissSpec:
    r: float = 700.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("need r > 0")


def w_cost(delivery: DeliveryResult, k: int, spec: CostSpec) -> float:
    """Sum of capped part costs; parts that were not recovered pay the cap."""
    d = np.asarray(delivery.distances, dtype=float)
    missing = k - len(d)
    return float(np.minimum(d**spec.a, spec.cap).sum() + missing * spec.cap)


def miss_indicator(delivery: DeliveryResult, k: int, spec: MissSpec) -> int:
    if not delivery.complete or len(delivery.distances) < k:
        return 1
    return int(max(delivery.distances, default=0.0) > spec.r)


def w_cost_batch(dist: np.ndarray, ranks: np.ndarray, spec: CostSpec) -> np.ndarray:
    """dist (B, L) rank-ordered distances, ranks (B, k) 0-based with -1 = missing."""
    found = ranks >= 0
    d = np.take_along_axis(dist, np.where(found, ranks, 0), axis=1)
    part = np.where(found, np.minimum(d**spec.a, spec.cap), spec.cap)
    return part.sum(axis=1)


def miss_batch(dist: np.ndarray, ranks: np.ndarray, spec: MissSpec) -> np.ndarray:
    found = ranks >= 0
    d = np.take_along_axis(dist, np.where(found, ranks, 0), axis=1)
    ok = found.all(axis=1) & (np.where(found, d, np.inf).max(axis=1) <= spec.r)
    return (~ok).astype(float)
