"""Bessel primitives against independent high-precision oracles."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jn_zeros

from diskvort.specfun import (
    MAX_ORDER,
    bessel_j,
    bessel_j_zero,
    bessel_y,
    gauss_legendre,
)

mpmath.mp.dps = 30


# ---------------------------------------------------------------------------
# values


@pytest.mark.parametrize("order", [0, 1, 2, 5, 13, 40, 64])
@pytest.mark.parametrize("x", [0.1, 1.0, 3.8317, 17.5, 80.0, 200.0])
def test_bessel_j_matches_mpmath(order, x):
    want = float(mpmath.besselj(order, mpmath.mpf(x)))
    got = bessel_j(order, x)
    assert got == pytest.approx(want, abs=1e-12, rel=1e-12)


@pytest.mark.parametrize("order", [0, 1, 4, 11])
@pytest.mark.parametrize("x", [0.05, 0.9, 6.2, 55.0])
def test_bessel_y_matches_mpmath(order, x):
    want = float(mpmath.bessely(order, mpmath.mpf(x)))
    got = bessel_y(order, x)
    assert got == pytest.approx(want, abs=1e-12, rel=1e-12)


def test_bessel_j_vectorized():
    x = np.linspace(0.0, 12.0, 7)
    vals = bessel_j(3, x)
    assert vals.shape == x.shape
    for xi, vi in zip(x, vals):
        assert vi == pytest.approx(bessel_j(3, float(xi)), abs=1e-15)


def test_bessel_domain_validation():
    with pytest.raises(ValueError):
        bessel_j(-1, 1.0)
    with pytest.raises(ValueError):
        bessel_j(MAX_ORDER + 1, 1.0)
    with pytest.raises(TypeError):
        bessel_j(1.5, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, float("nan"))
    with pytest.raises(ValueError):
        bessel_y(0, 0.0)
    with pytest.raises(ValueError):
        bessel_y(0, -2.0)


# ---------------------------------------------------------------------------
# recurrences (property tests)


@settings(max_examples=200, deadline=None)
@given(
    order=st.integers(min_value=1, max_value=MAX_ORDER - 1),
    x=st.floats(min_value=0.05, max_value=150.0, allow_nan=False),
)
def test_three_term_recurrence(order, x):
    # J_{k-1}(x) + J_{k+1}(x) = (2k/x) J_k(x); scale-relative tolerance
    lhs = bessel_j(order - 1, x) + bessel_j(order + 1, x)
    rhs = 2.0 * order / x * bessel_j(order, x)
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) <= 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(
    order=st.integers(min_value=0, max_value=MAX_ORDER - 1),
    x=st.floats(min_value=0.05, max_value=150.0, allow_nan=False),
)
def test_derivative_identity(order, x):
    # J_k'(x) = (k/x) J_k(x) - J_{k+1}(x)
    lhs = bessel_j(order, x, derivative=True)
    rhs = order / x * bessel_j(order, x) - bessel_j(order + 1, x)
    assert abs(lhs - rhs) <= 1e-10


# ---------------------------------------------------------------------------
# zeros


@pytest.mark.parametrize("order", [0, 1, 2, 7, 23, 64])
def test_zeros_match_mpmath(order):
    for j in (1, 2, 5, 12):
        got = bessel_j_zero(order, j)
        want = float(mpmath.besseljzero(order, j))
        assert got == pytest.approx(want, rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("order", list(range(0, MAX_ORDER + 1, 8)))
def test_zeros_cross_check_scipy(order):
    got = np.array([bessel_j_zero(order, j) for j in range(1, 13)])
    want = jn_zeros(order, 12)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("order,j", [(0, 1), (1, 1), (5, 3), (40, 1), (64, 20)])
def test_zero_residual_and_simplicity(order, j):
    z = bessel_j_zero(order, j)
    assert abs(bessel_j(order, z)) < 1e-11
    # simple zero: sign change across a tiny window
    eps = 1e-6 * z
    assert bessel_j(order, z - eps) * bessel_j(order, z + eps) < 0.0


def test_zero_ordering_and_interlacing():
    for order in (0, 3, 17):
        zs = [bessel_j_zero(order, j) for j in range(1, 9)]
        assert all(a < b for a, b in zip(zs, zs[1:]))
        nxt = [bessel_j_zero(order + 1, j) for j in range(1, 8)]
        for j in range(7):
            assert zs[j] < nxt[j] < zs[j + 1]


def test_first_zero_pins():
    assert bessel_j_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-12)
    assert bessel_j_zero(1, 1) == pytest.approx(3.831705970207512, abs=1e-12)


def test_zero_index_validation():
    with pytest.raises(ValueError):
        bessel_j_zero(0, 0)
    with pytest.raises(ValueError):
        bessel_j_zero(0, -3)


# ---------------------------------------------------------------------------
# quadrature


def test_quadrature_basics():
    rule = gauss_legendre(12, 0.0, 1.0)
    assert rule.nodes.shape == (12,)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert rule.integrate(np.ones(12)) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 40])
def test_quadrature_polynomial_exactness(n):
    # exact through degree 2n-1 on (0, 2)
    rule = gauss_legendre(n, 0.0, 2.0)
    for deg in range(2 * n):
        got = rule.integrate(rule.nodes**deg)
        want = 2.0 ** (deg + 1) / (deg + 1)
        assert got == pytest.approx(want, rel=1e-12)


def test_quadrature_smooth_integrand():
    rule = gauss_legendre(30, 0.0, math.pi)
    got = rule.integrate(np.sin(rule.nodes))
    assert got == pytest.approx(2.0, abs=1e-14)


def test_quadrature_validation():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(4, 1.0, 1.0)
    with pytest.raises(ValueError):
        gauss_legendre(4, 2.0, 1.0)
