"""Exactness tests for the power series layer.

The expansion coefficients are checked against hand-derived closed forms (low
orders) and against structural identities that hold at every order.
"""

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetakernel.fps import (
    FPSeries,
    RationalPoly,
    derive_a,
    derive_c_tilde,
    digamma_expansion,
    digamma_shifted_expansion,
    fps_exp,
    fps_log1p,
    gamma_quotient_expansion,
    local_factor_coefficients,
    rebase_shifted,
)

mpmath.mp.dps = 50


def poly(*coeffs):
    return RationalPoly([Fraction(c) for c in coeffs])


# ------------------------------------------------------------- RationalPoly


def test_rational_poly_arithmetic_exact():
    p = poly(1, 2)        # 1 + 2x
    q = poly(0, 0, 3)     # 3x^2
    assert (p * q).coeffs == (Fraction(0), Fraction(0), Fraction(3), Fraction(6))
    assert (p - p).is_zero()
    assert p(Fraction(1, 2)) == 2
    assert (Fraction(1, 3) * q).coeffs == (Fraction(0), Fraction(0), Fraction(1))


def test_rational_poly_trims_trailing_zeros():
    assert poly(1, 0, 0).degree == 0
    assert poly(0, 0).is_zero()


# ------------------------------------------------------------ series algebra


def _random_series(draw_coeffs, order, var="t"):
    cs = [RationalPoly()] + [poly(c) for c in draw_coeffs[:order]]
    return FPSeries.build(var, cs, order)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.fractions(min_value=-3, max_value=3), min_size=6, max_size=6))
def test_exp_log_roundtrip_exact(cs):
    a = _random_series(cs, 6)
    assert fps_log1p(fps_exp(a) - FPSeries.build("t", [poly(1)], 6)).coeffs == a.coeffs
    b = fps_exp(fps_log1p(a))
    one_plus_a = FPSeries.build("t", [poly(1)] + list(a.coeffs[1:]), 6)
    assert b.coeffs == one_plus_a.coeffs


def test_exp_matches_exponential_of_scalar():
    # exp(c*t) has coefficients c^n/n! exactly.
    c = Fraction(3, 7)
    a = FPSeries.build("t", [RationalPoly(), poly(c)], 8)
    e = fps_exp(a)
    for n in range(9):
        assert e.coeffs[n] == poly(c**n / math.factorial(n))


def test_rebase_shifted_geometric_identity():
    # v/(1-v) with v = u/(1+u) equals u exactly, order by order.
    order = 10
    geo = FPSeries.build("v", [RationalPoly()] + [poly(1)] * order, order)
    rb = rebase_shifted(geo)
    assert rb.coeffs[1] == poly(1)
    for n in range(2, order + 1):
        assert rb.coeffs[n].is_zero()


def test_variable_mismatch_rejected():
    a = FPSeries.build("u", [poly(0), poly(1)], 3)
    b = FPSeries.build("v", [poly(0), poly(1)], 3)
    with pytest.raises(ValueError):
        _ = a + b


# ------------------------------------------------- expansion coefficients


def test_shifted_expansion_first_coefficients():
    # In v = 1/(s+1):  -theta/2 * v + theta(3theta-10)/24 * v^2 + ...
    d = digamma_shifted_expansion(4)
    theta = RationalPoly.x()
    assert d.coeffs[1] == Fraction(-1, 2) * theta
    assert d.coeffs[2] == Fraction(1, 24) * (theta * poly(-10, 3))


def test_digamma_expansion_first_coefficients():
    # In u = 1/s:  c_0 = 1, c_1 = -theta/2, c_2 = theta(3theta+2)/24.
    cs = digamma_expansion(4)
    theta = RationalPoly.x()
    assert cs[0] == poly(1)
    assert cs[1] == Fraction(-1, 2) * theta
    assert cs[2] == Fraction(1, 24) * (theta * poly(2, 3))


def test_gamma_quotient_first_coefficients():
    # a_0 = 1, a_1 = -3 theta/2, a_2 = theta(27 theta - 34)/24.
    a = gamma_quotient_expansion(4)
    theta = RationalPoly.x()
    assert a[0] == poly(1)
    assert a[1] == Fraction(-3, 2) * theta
    assert a[2] == Fraction(1, 24) * (theta * poly(-34, 27))


def test_expansions_vanish_at_theta_zero():
    for cs in (digamma_expansion(8), gamma_quotient_expansion(8)):
        for c in cs[1:]:
            assert c(Fraction(0)) == 0


def test_derive_wrappers_pinned_values():
    theta = RationalPoly.x()
    ct = derive_c_tilde(14)
    assert ct[0] == Fraction(-1, 2) * theta
    assert ct[1] == Fraction(1, 24) * (theta * poly(2, 3))
    a = derive_a(14)
    assert a[0] == Fraction(-3, 2) * theta
    assert a[1] == Fraction(1, 24) * (theta * poly(-34, 27))
    assert len(ct) == 13 and len(a) == 13
    with pytest.raises(ValueError):
        derive_c_tilde(1)
    with pytest.raises(ValueError):
        derive_a(1)


def test_derive_wrappers_order_stable():
    assert derive_c_tilde(8) == derive_c_tilde(16)[:7]
    assert derive_a(8) == derive_a(16)[:7]


def test_a_times_gap_factor_recovers_c_tilde():
    # (1 + sum A_n w^-n) * exp(+2 theta/(2w-3)) == 1 + sum C_tilde_n w^-n:
    # both sides equal w^theta exp(-theta psi(w) - theta/w).  Exact identity.
    order = 10
    theta = RationalPoly.x()
    a_series = FPSeries.build("w", [poly(1)] + derive_a(order + 1), order)
    expo = [RationalPoly()] + [Fraction(3**k, 2**k) * theta for k in range(order)]
    gap = fps_exp(FPSeries("w", tuple(expo)))
    want = FPSeries.build("w", [poly(1)] + derive_c_tilde(order + 1), order)
    assert (a_series * gap).coeffs == want.coeffs


def test_expansion_order_stability():
    # Computing to a higher order must not change lower coefficients.
    lo = digamma_expansion(6)
    hi = digamma_expansion(12)
    assert lo == hi[:7]
    lo_a = gamma_quotient_expansion(6)
    hi_a = gamma_quotient_expansion(12)
    assert lo_a == hi_a[:7]


def test_digamma_expansion_numeric_vs_mpmath():
    # Partial sums must approach s^theta exp(-theta psi(s) - theta/s) for
    # large s; with s = 40 and 12 terms the tail is far below 1e-12.
    cs = digamma_expansion(12)
    for theta in (Fraction(3, 2), Fraction(2), Fraction(3)):
        s = mpmath.mpf(40)
        th = mpmath.mpf(theta.numerator) / theta.denominator
        want = s**th * mpmath.exp(-th * mpmath.digamma(s) - th / s)
        got = sum(mpmath.mpf(float(c(theta))) * s**-n for n, c in enumerate(cs))
        assert abs(got - want) / abs(want) < 1e-13


def test_gamma_quotient_numeric_vs_mpmath():
    a = gamma_quotient_expansion(12)
    for theta in (Fraction(3, 2), Fraction(2)):
        w = mpmath.mpf(50)
        th = mpmath.mpf(theta.numerator) / theta.denominator
        want = (
            w**th
            * mpmath.exp(-th * mpmath.digamma(w) - th / w)
            * mpmath.exp(-2 * th / (2 * w - 3))
        )
        got = sum(mpmath.mpf(float(c(theta))) * w**-n for n, c in enumerate(a))
        assert abs(got - want) / abs(want) < 1e-13


# ------------------------------------------------------------- local factor


def test_local_factor_coefficients_low_order():
    # exp(y x/(1-x)) = 1 + y x + (y + y^2/2) x^2 + ...
    ps = local_factor_coefficients(3)
    y = RationalPoly.x()
    assert ps[0] == poly(1)
    assert ps[1] == y
    assert ps[2] == y + Fraction(1, 2) * (y * y)
    # k=3: y + y^2 + ... from expanding exp; check against direct expansion
    # exp(y(x + x^2 + x^3)) coefficient of x^3: y + y*y + y^3/6.
    assert ps[3] == y + y * y + Fraction(1, 6) * (y * y * y)


def test_local_factor_numeric():
    ps = local_factor_coefficients(30)
    y = 0.4
    x = 0.3
    want = math.exp(y * x / (1.0 - x))
    got = sum(float(p(Fraction(2, 5))) * x**k for k, p in enumerate(ps))
    assert got == pytest.approx(want, rel=1e-12)
