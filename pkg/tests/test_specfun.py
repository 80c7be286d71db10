"""Oracle tests for the scalar special functions.

Each function is checked against a value computed by an independent route
(exact recurrences from closed forms, rational partial sums, mpmath) rather
than against the implementation itself.
"""

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetakernel.specfun import (
    BernoulliTable,
    bernoulli_numbers,
    bessel_i,
    bessel_j,
    bessel_j1_over_z,
    digamma,
    gamma_real,
)

mpmath.mp.dps = 40


# ---------------------------------------------------------------- Bernoulli

EXACT_BERNOULLI = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
]


def test_bernoulli_exact_values():
    table = BernoulliTable(8)
    for k, want in enumerate(EXACT_BERNOULLI, start=1):
        assert table.even(k) == want
    assert bernoulli_numbers(8) == EXACT_BERNOULLI


def test_bernoulli_odd_vanish():
    table = BernoulliTable(6)
    for m in range(3, 13, 2):
        assert table.value(m) == 0
    assert table.value(1) == Fraction(-1, 2)


# ------------------------------------------------------------------- Gamma


def test_gamma_half_integers_exact_chain():
    # Gamma(1/2) = sqrt(pi) and Gamma(x+1) = x Gamma(x) give an exact oracle
    # for Gamma(n + 1/2) as a rational multiple of sqrt(pi).
    ratio = Fraction(1)
    x = Fraction(1, 2)
    for _ in range(7):
        ratio *= x
        x += 1
    want = float(ratio) * math.sqrt(math.pi)  # Gamma(7.5)
    assert gamma_real(7.5) == pytest.approx(want, rel=1e-14)


def test_gamma_integers():
    for n in range(1, 15):
        assert gamma_real(float(n)) == pytest.approx(math.factorial(n - 1), rel=1e-14)


def test_gamma_against_mpmath():
    # exp(log Gamma) amplifies rounding by log Gamma(x), so the attainable
    # relative error grows from ~1e-15 at x~10 to ~1e-13 at x~171.
    for x in [0.1, 0.37, 1.5, 2.25, 9.99, 10.01, 25.0, 80.5, 171.0]:
        want = float(mpmath.gamma(x))
        tol = 2e-15 * max(10.0, abs(float(mpmath.loggamma(x))))
        assert gamma_real(x) == pytest.approx(want, rel=tol)


def test_gamma_rejects_nonpositive_and_overflow():
    with pytest.raises(ValueError):
        gamma_real(0.0)
    with pytest.raises(ValueError):
        gamma_real(-1.5)
    with pytest.raises(ValueError):
        gamma_real(172.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.05, max_value=80.0, allow_nan=False))
def test_gamma_functional_equation(x):
    assert gamma_real(x + 1.0) == pytest.approx(x * gamma_real(x), rel=1e-12)


# ----------------------------------------------------------------- digamma


def test_digamma_known_values():
    euler = 0.5772156649015328606
    assert digamma(1.0) == pytest.approx(-euler, abs=1e-14)
    # psi(2) = 1 - gamma, psi(1/2) = -gamma - 2 log 2
    assert digamma(2.0) == pytest.approx(1.0 - euler, abs=1e-14)
    assert digamma(0.5) == pytest.approx(-euler - 2.0 * math.log(2.0), abs=1e-13)


def test_digamma_against_mpmath():
    for x in [0.07, 0.5, 1.0, 1.75, 3.2, 11.9, 12.1, 55.0, 400.0]:
        want = float(mpmath.digamma(x))
        assert digamma(x) == pytest.approx(want, rel=1e-13, abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.05, max_value=100.0, allow_nan=False))
def test_digamma_recurrence(x):
    assert digamma(x + 1.0) - digamma(x) == pytest.approx(1.0 / x, rel=1e-11, abs=1e-12)


# ---------------------------------------------------------------- Bessel I


def _bessel_i_fraction_oracle(nu_num, nu_den, z):
    # Partial sum with exact rationals except for the z^2/4 power; nu rational.
    # Returns sum_m (z/2)^(2m) / (m! prod_{j=1..m} (nu+j)) i.e. the series with
    # the (z/2)^nu / Gamma(nu+1) prefactor stripped.
    nu = Fraction(nu_num, nu_den)
    q = Fraction(z) ** 2 / 4
    term = Fraction(1)
    total = Fraction(0)
    for m in range(200):
        total += term
        term = term * q / ((m + 1) * (nu + m + 1))
    return total


def test_bessel_i_half_order_closed_form():
    # I_{1/2}(z) = sqrt(2/(pi z)) sinh z is an independent closed form.
    for z in [0.3, 1.0, 2.5, 7.0]:
        want = math.sqrt(2.0 / (math.pi * z)) * math.sinh(z)
        assert bessel_i(0.5, z) == pytest.approx(want, rel=1e-13)


def test_bessel_i_rational_partial_sum():
    z = 3.0
    stripped = float(_bessel_i_fraction_oracle(3, 2, z))
    want = (z / 2.0) ** 1.5 / gamma_real(2.5) * stripped
    assert bessel_i(1.5, z) == pytest.approx(want, rel=1e-13)


def test_bessel_i_against_mpmath():
    for nu in [0.0, 0.5, 1.0, 1.7, 4.25]:
        for z in [0.0, 0.01, 1.0, 10.0, 45.0, 60.0]:
            want = float(mpmath.besseli(nu, z))
            assert bessel_i(nu, z) == pytest.approx(want, rel=1e-12, abs=1e-300)


def test_bessel_i_domain():
    with pytest.raises(ValueError):
        bessel_i(1.0, -0.5)
    with pytest.raises(ValueError):
        bessel_i(1.0, 61.0)
    with pytest.raises(ValueError):
        bessel_i(-0.5, 1.0)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(min_value=1.0, max_value=6.0),
    st.floats(min_value=0.1, max_value=40.0),
)
def test_bessel_i_three_term_recurrence(nu, z):
    lhs = bessel_i(nu - 1.0, z) - bessel_i(nu + 1.0, z)
    rhs = (2.0 * nu / z) * bessel_i(nu, z)
    scale = abs(bessel_i(nu - 1.0, z)) + abs(rhs) + 1e-30
    assert abs(lhs - rhs) / scale < 1e-10


# ---------------------------------------------------------------- Bessel J


def test_bessel_j_zero_arguments():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j1_over_z(0.0) == 0.5


def test_bessel_j0_first_zero():
    z0 = 2.404825557695773
    assert abs(bessel_j(0, z0)) < 1e-13
    # sign change around the zero
    assert bessel_j(0, z0 - 1e-3) > 0.0 > bessel_j(0, z0 + 1e-3)


def test_bessel_j_against_mpmath_including_large():
    for z in [0.2, 1.0, 5.0, 11.9, 12.1, 30.0, 60.0]:
        want0 = float(mpmath.besselj(0, z))
        want1 = float(mpmath.besselj(1, z))
        assert bessel_j(0, z) == pytest.approx(want0, rel=1e-11, abs=1e-12)
        assert bessel_j(1, z) == pytest.approx(want1, rel=1e-11, abs=1e-12)
        assert bessel_j1_over_z(z) == pytest.approx(want1 / z, rel=1e-11, abs=1e-12)


def test_bessel_j_domain():
    with pytest.raises(ValueError):
        bessel_j(2, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        bessel_j(0, 61.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.01, max_value=11.0))
def test_bessel_j_derivative_identity(z):
    # J0'(z) = -J1(z) via a central difference of the series evaluation.
    # h balances O(h^2) truncation against series cancellation noise, which
    # reaches ~1e-12 per evaluation near z = 11.
    h = 1e-4
    deriv = (bessel_j(0, z + h) - bessel_j(0, max(z - h, 0.0))) / (h + min(z, h))
    assert deriv == pytest.approx(-bessel_j(1, z), abs=5e-8)
