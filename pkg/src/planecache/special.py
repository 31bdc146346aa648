"""Incomplete gamma functions.

``gamma_upper``/``gamma_lower`` are the unregularized Γ(s, x) and γ(s, x);
``reg_upper``/``reg_lower`` are the regularized Q(s, x) = Γ(s, x)/Γ(s) and
P(s, x) = 1 - Q(s, x).  Integer orders go through the finite Poisson sum,
real orders through the power series (x < s + 1) or Lentz's continued
fraction (x >= s + 1).
"""
from __future__ import annotations

import math

import numpy as np

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 10_000


def _check(s: float, x: float) -> None:
    if not s > 0:
        raise ValueError(f"order must be positive, got {s}")
    if not x >= 0:
        raise ValueError(f"argument must be nonnegative, got {x}")


def _log_prefactor(s: float, x: float) -> float:
    # log(x**s * e**-x / Γ(s))
    return s * math.log(x) - x - math.lgamma(s)


def _series_p(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(_log_prefactor(s, x))


def _contfrac_q(s: float, x: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(_log_prefactor(s, x)) * h


def reg_gamma_q(n: int, x: float) -> float:
    """Q(n, x) for integer n >= 1: P(Poisson(x) < n) = e**-x * sum_{i<n} x**i / i!."""
    if int(n) != n or n < 1:
        raise ValueError(f"order must be a positive integer, got {n}")
    if not x >= 0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    n = int(n)
    if x == 0:
        return 1.0
    logs = np.arange(n) * math.log(x) - x - _lgamma_int_table(n)
    top = logs.max()
    val = math.exp(top) * float(np.exp(logs - top).sum())
    return min(val, 1.0)


_LGAMMA_CACHE = np.zeros(0)


def _lgamma_int_table(n: int) -> np.ndarray:
    """lgamma(1), ..., lgamma(n), i.e. log(i!) for i < n."""
    global _LGAMMA_CACHE
    if len(_LGAMMA_CACHE) < n:
        m = max(n, 2 * len(_LGAMMA_CACHE))
        _LGAMMA_CACHE = np.array([math.lgamma(j + 1.0) for j in range(m)])
    return _LGAMMA_CACHE[:n]


def reg_upper(s: float, x: float) -> float:
    _check(s, x)
    if x == 0:
        return 1.0
    if float(s).is_integer() and s <= 10_000:
        return reg_gamma_q(int(s), x)
    if x < s + 1.0:
        return 1.0 - _series_p(s, x)
    return _contfrac_q(s, x)


def reg_lower(s: float, x: float) -> float:
    _check(s, x)
    if x == 0:
        return 0.0
    if x < s + 1.0:
        return _series_p(s, x)
    if float(s).is_integer() and s <= 10_000:
        return 1.0 - reg_gamma_q(int(s), x)
    return 1.0 - _contfrac_q(s, x)


def gamma_upper(s: float, x: float) -> float:
    """Γ(s, x) = ∫_x^∞ z**(s-1) e**-z dz."""
    return reg_upper(s, x) * math.gamma(s)


def gamma_lower(s: float, x: float) -> float:
    """γ(s, x) = Γ(s) - Γ(s, x)."""
    return reg_lower(s, x) * math.gamma(s)
