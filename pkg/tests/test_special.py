import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from planecache.special import gamma_lower, gamma_upper, reg_gamma_q, reg_lower, reg_upper

mp.mp.dps = 40


def quad_upper(s, x):
    return float(mp.quad(lambda z: z ** (s - 1) * mp.e**-z, [x, x + 10, x + 50, mp.inf]))


def test_reg_gamma_q_examples():
    for x in (0.0, 0.1, 3.0, 50.0):
        assert reg_gamma_q(1, x) == pytest.approx(math.exp(-x), rel=1e-14)
    assert reg_gamma_q(7, 0.0) == 1.0
    want = quad_upper(17, mp.mpf("28.2127")) / math.factorial(16)
    got = reg_gamma_q(17, 28.2127)
    assert 0 < got < 1
    assert got == pytest.approx(want, rel=1e-10)


def test_reg_gamma_q_large_arguments_stay_finite():
    # Poisson tail far beyond float factorial range
    assert reg_gamma_q(5000, 4000.0) == pytest.approx(float(mp.gammainc(5000, 4000, mp.inf, regularized=True)), rel=1e-9)
    assert reg_gamma_q(3, 1e4) == pytest.approx(float(mp.gammainc(3, 1e4, mp.inf, regularized=True)), rel=1e-9)
    assert reg_gamma_q(10_000, 10.0) == 1.0


def test_gamma_examples():
    assert gamma_upper(1.5, 0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-15)
    assert gamma_lower(2.3, 0) == 0
    assert gamma_upper(2.5, 3.7) == pytest.approx(quad_upper(2.5, mp.mpf("3.7")), rel=1e-10)


def test_domain_errors():
    for f in (gamma_upper, gamma_lower, reg_upper, reg_lower):
        with pytest.raises(ValueError):
            f(0, 1.0)
        with pytest.raises(ValueError):
            f(1.0, -0.1)
    with pytest.raises(ValueError):
        reg_gamma_q(0, 1.0)
    with pytest.raises(ValueError):
        reg_gamma_q(2.5, 1.0)
    with pytest.raises(ValueError):
        reg_gamma_q(2, -1.0)


@pytest.mark.parametrize("s", [0.3, 1.0, 1.5, 2.0, 2.5, 3.0, 7.5, 21.0, 60.25])
@pytest.mark.parametrize("x", [0.01, 0.5, 2.0, 7.0, 30.0, 120.0])
def test_against_mpmath(s, x):
    want_u = mp.gammainc(s, x, mp.inf)
    want_l = mp.gammainc(s, 0, x)
    for got, want in ((gamma_upper(s, x), want_u), (gamma_lower(s, x), want_l)):
        if want > 1e-290:
            assert got == pytest.approx(float(want), rel=1e-10, abs=1e-300)
    assert gamma_upper(s, x) + gamma_lower(s, x) == pytest.approx(math.gamma(s), rel=1e-10)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 80), st.floats(0, 200))
def test_regularized_against_scipy(s, x):
    assert reg_upper(s, x) == pytest.approx(sp.gammaincc(s, x), rel=1e-9, abs=1e-14)
    assert reg_lower(s, x) == pytest.approx(sp.gammainc(s, x), rel=1e-9, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 400), st.floats(0, 600))
def test_integer_order_in_unit_interval(n, x):
    v = reg_gamma_q(n, x)
    assert 0 <= v <= 1
    assert v == pytest.approx(sp.gammaincc(n, x), rel=1e-9, abs=1e-14)


def test_q_decreasing_in_x():
    xs = np.linspace(0, 60, 301)
    vals = [reg_gamma_q(17, x) for x in xs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
