"""Closed-form expected costs, bounds and miss probabilities for Poisson caches.

Notation: ``b = a/2 + 1``, ``d = λπ δmax²`` (expected caches within the cap
radius) and ``mu = λπ r²`` (expected caches within range).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .special import gamma_lower, gamma_upper, reg_gamma_q, reg_lower, reg_upper

REFERENCE_LAMBDA = 1.8324e-5
MAX_PARTS_SCAN = 10_000


@dataclass(frozen=True)
class ModelParams:
    lam: float = REFERENCE_LAMBDA
    k: int = 1
    a: float = 2.0
    delta_max: float = 700.0
    r: float = 700.0
    q: float = 256
    gmax: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))
        if not (self.a > 0 and self.delta_max > 0 and self.r > 0):
            raise ValueError("a, delta_max and r must be positive")
        if not self.q >= 2:
            raise ValueError("q must be >= 2")

    @property
    def b(self) -> float:
        return self.a / 2 + 1

    @property
    def d(self) -> float:
        return self.lam * math.pi * self.delta_max**2

    @property
    def mu(self) -> float:
        return self.lam * math.pi * self.r**2

    @property
    def w_gmax(self) -> float:
        """Upper bound of the capped cost: k * delta_max**a unless overridden."""
        return self.k * self.delta_max**self.a if self.gmax is None else self.gmax

    def with_k(self, k: int) -> "ModelParams":
        return ModelParams(self.lam, k, self.a, self.delta_max, self.r, self.q, self.gmax)


def w_uncoded(p: ModelParams) -> float:
    """Expected capped cost of the uncoded strategy."""
    k, b, d, lp = p.k, p.b, p.d, p.lam * math.pi
    return (k * (k / lp) ** (b - 1) * gamma_lower(b, d / k)
            + k * (d / lp) ** (b - 1) * math.exp(-d / k))


def w_coded_min(p: ModelParams) -> float:
    """Expected capped cost of contacting the k nearest caches.

    Evaluated with regularized gammas so that Γ(k) never overflows.
    """
    k, b, d, lp = p.k, p.b, p.d, p.lam * math.pi
    lower = reg_lower(k + b, d) * math.exp(math.lgamma(k + b) - math.lgamma(k))
    tail = b * d ** (b - 1) * k * reg_gamma_q(k + 1, d) - (b - 1) * d**b * reg_gamma_q(k, d)
    return (lower + tail) / (lp ** (b - 1) * b)


def w_uncoded_limit(p: ModelParams) -> float:
    k, a = p.k, p.a
    return k * (k / (p.lam * math.pi)) ** (a / 2) * math.gamma(1 + a / 2)


def w_coded_min_limit(p: ModelParams) -> float:
    k, a = p.k, p.a
    log = math.lgamma(k + 1 + a / 2) - math.lgamma(k) - (a / 2) * math.log(p.lam * math.pi)
    return math.exp(log) / (1 + a / 2)


def benefit_ratio(k: int, a: float) -> float:
    """Limit-cost ratio uncoded / nearest-k: (1 + a/2) k**(1 + a/2) B(k, 1 + a/2)."""
    if k < 1 or not a > 0:
        raise ValueError("need k >= 1 and a > 0")
    if k == 1:
        return 1.0  # B(1, b) = 1/b
    b = 1 + a / 2
    log_beta = math.lgamma(k) + math.lgamma(b) - math.lgamma(k + b)
    return math.exp(math.log(b) + b * math.log(k) + log_beta)


def benefit_limit(a: float) -> float:
    b = a / 2 + 1
    return b * math.gamma(b)


def rank_deficiency_penalty(p: ModelParams, gmax: float | None = None) -> float:
    """Gmax * (1 - (1 - 1/q)**k)."""
    gmax = p.w_gmax if gmax is None else gmax
    return gmax * -math.expm1(p.k * math.log1p(-1.0 / p.q))


def coded_cost_upper(p: ModelParams) -> float:
    return w_coded_min(p) + rank_deficiency_penalty(p)


def miss_uncoded(p: ModelParams) -> float:
    """1 - (1 - exp(-mu/k))**k."""
    k = p.k
    absent = math.exp(-p.mu / k)
    if absent == 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-absent))


def miss_coded_min(p: ModelParams) -> float:
    """Probability that fewer than k caches lie within range: Q(k, mu)."""
    return reg_gamma_q(p.k, p.mu)


def miss_coded_upper(p: ModelParams) -> float:
    """Nearest-k miss probability plus the rank-deficiency penalty with Gmax = 1."""
    return min(1.0, miss_coded_min(p) + rank_deficiency_penalty(p, gmax=1.0))


def miss_asymptotic_uncoded(p: ModelParams) -> float:
    """Large-k approximation 1 - mu**k / k**k."""
    return 1.0 - (p.mu / p.k) ** p.k


def miss_asymptotic_coded(p: ModelParams) -> float:
    """Large-k approximation 1 - e**-mu mu**k / k!."""
    if p.mu == 0:
        return 1.0
    return 1.0 - math.exp(-p.mu + p.k * math.log(p.mu) - math.lgamma(p.k + 1))


def max_parts_for_miss(p: ModelParams, epsilon: float, strategy: str,
                       cap: int = MAX_PARTS_SCAN) -> int:
    """Largest k whose exact miss probability is <= epsilon.

    Scans k = 1, 2, ... and stops at the first violation; returns 0 if k = 1
    already violates and ``cap`` if no k up to ``cap`` does.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    miss = {"uncoded": miss_uncoded, "coded": miss_coded_min}[strategy]
    if epsilon >= 1:
        return cap
    for k in range(1, cap + 1):
        if miss(p.with_k(k)) > epsilon:
            return k - 1
    return cap


# identities used to derive the closed forms


def upper_gamma_moment(k: float, c: float, x: float) -> float:
    """∫_x^∞ z**c Γ(k, z) dz in closed form."""
    return (gamma_upper(k + c + 1, x) - x ** (1 + c) * gamma_upper(k, x)) / (c + 1)


def sum_gamma_ratio(k: int, c: float) -> float:
    """Σ_{i=1..k} Γ(i + c) / Γ(i)."""
    return math.exp(math.lgamma(k + c + 1) - math.lgamma(k)) / (c + 1)


def sum_upper_gamma_ratio(k: int, c: float, x: float) -> float:
    """Σ_{i=1..k} Γ(i + c, x) / Γ(i)."""
    return (gamma_upper(k + c + 1, x) - x ** (c + 1) * gamma_upper(k, x)) / ((c + 1) * math.gamma(k))


def sum_lower_gamma_ratio(k: int, c: float, x: float) -> float:
    """Σ_{i=1..k} γ(i + c, x) / Γ(i)."""
    return (gamma_lower(k + c + 1, x) + x ** (c + 1) * gamma_upper(k, x)) / ((c + 1) * math.gamma(k))


def truncated_moment(i: int, a: float, beta: float, u: float) -> float:
    """∫_0^u x**a dF(x) for F(x) = 1 - Q(i, beta x²): the i-th neighbour's a-moment below u."""
    return gamma_lower(a / 2 + i, beta * u * u) / (math.gamma(i) * beta ** (a / 2))


def kth_neighbour_cdf(n: int, lam: float, delta: float) -> float:
    """P(D(n) <= delta) for a Poisson field of intensity lam."""
    return 1.0 - reg_upper(n, lam * math.pi * delta * delta)
