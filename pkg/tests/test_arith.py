"""Tests for the arithmetic tables and the zeta-ratio evaluators."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetakernel.arith import (
    gamma_factor_log_deriv,
    lambda_prime_power,
    lambda_table,
    sieve_mangoldt,
    xi_log_deriv,
    zeta_em,
    zeta_log_deriv,
    zeta_log_deriv_precise,
    zeta_prime_em,
)
from zetakernel.fps import local_factor_coefficients

mpmath.mp.dps = 40


# ----------------------------------------------------------------- Mangoldt


def test_mangoldt_classification():
    mt = sieve_mangoldt(100)
    assert mt.log_p[8] == pytest.approx(math.log(2), abs=0)
    assert mt.prime[8] == 2 and mt.power[8] == 3
    assert mt.log_p[12] == 0.0 and mt.prime[12] == 0
    assert mt.log_p[1] == 0.0
    assert mt.log_p[97] == pytest.approx(math.log(97))


def test_chebyshev_psi_100():
    # direct enumeration of prime powers <= 100
    want = 0.0
    for p in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]:
        q = p
        while q <= 100:
            want += math.log(p)
            q *= p
    mt = sieve_mangoldt(100)
    assert mt.chebyshev_psi() == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(94.0453, abs=5e-4)


def test_sieve_bounds():
    with pytest.raises(ValueError):
        sieve_mangoldt(0)
    with pytest.raises(ValueError):
        sieve_mangoldt(10**7 + 1)


# ------------------------------------------------------------ lambda table


def test_lambda_low_values():
    th = 2.0
    t = lambda_table(th, 50)
    assert t.values[1] == 1.0
    assert t.values[2] == pytest.approx(2 * th * math.log(2), rel=1e-14)
    assert t.values[3] == pytest.approx(2 * th * math.log(3), rel=1e-14)
    # p^2: y + y^2/2 with y = 2 theta log p
    y = 2 * th * math.log(2)
    assert t.values[4] == pytest.approx(y + y * y / 2, rel=1e-13)
    # coprime product
    assert t.values[6] == pytest.approx(t.values[2] * t.values[3], rel=1e-13)


def test_lambda_prime_powers_match_exact_oracle():
    # independent oracle: coefficient of x^k in exp(2 theta log p x/(1-x)),
    # expanded exactly over Q[y] and evaluated at y = 2 theta log p
    ps = local_factor_coefficients(5)
    for theta in (1.5, 2.0, 3.0):
        t = lambda_table(theta, 13**5 + 1)
        for p in (2, 3, 5, 7, 11, 13):
            y = 2.0 * theta * math.log(p)
            for k in range(1, 6):
                want = float(np.polynomial.polynomial.polyval(y, [float(c) for c in ps[k].coeffs]))
                got = t.values[p**k]
                assert got == pytest.approx(want, rel=1e-12), (theta, p, k)
                assert lambda_prime_power(theta, p, k) == pytest.approx(want, rel=1e-12)


def test_lambda_multiplicative_all_coprime_pairs():
    t = lambda_table(2.0, 2000)
    v = t.values
    for m in range(2, 45):
        for n in range(2, 2000 // m + 1):
            if math.gcd(m, n) == 1:
                assert abs(v[m * n] - v[m] * v[n]) <= 1e-12 * max(v[m] * v[n], 1e-300)


def test_lambda_nonnegative_and_monotone_in_theta():
    tables = {th: lambda_table(th, 500) for th in (1.5, 2.0, 3.0)}
    for th, t in tables.items():
        assert np.all(t.values >= 0.0)
    for n in range(1, 501):
        assert tables[1.5].values[n] <= tables[2.0].values[n] + 1e-15
        assert tables[2.0].values[n] <= tables[3.0].values[n] + 1e-15


def test_lambda_dirichlet_identity_both_ways():
    # exp(-2 theta zeta'/zeta(sigma)) vs sum lambda(n) n^-sigma within tails
    for theta, sigma in [(2.0, 3.0), (1.5, 5.0)]:
        t = lambda_table(theta, 10**5)
        lhs = t.dirichlet_sum(sigma)
        rhs = math.exp(-2.0 * theta * zeta_log_deriv_precise(sigma))
        assert abs(lhs.value - rhs) <= lhs.tail_bound + 1e-12
        assert lhs.tail_bound < 1e-3


def test_lambda_cache_returns_same_object():
    a = lambda_table(2.0, 100)
    b = lambda_table(2.0, 100)
    assert a is b


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=2, max_value=40),
    st.integers(min_value=2, max_value=40),
)
def test_lambda_multiplicativity_property(m, n):
    if math.gcd(m, n) != 1:
        return
    t = lambda_table(1.5, 1600)
    assert t.values[m * n] == pytest.approx(t.values[m] * t.values[n], rel=1e-12)


# -------------------------------------------------------------- zeta ratios


def test_zeta_em_against_mpmath():
    for s in [1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 12.0, 30.0]:
        assert zeta_em(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-14)
        want_p = float(mpmath.zeta(s, derivative=1))
        assert zeta_prime_em(s) == pytest.approx(want_p, rel=1e-13)


def test_zeta_log_deriv_routes_agree():
    for sigma in [1.5, 2.0, 3.0, 4.0]:
        precise = zeta_log_deriv_precise(sigma)
        truncated = zeta_log_deriv(sigma, n_max=200000)
        assert abs(truncated.value - precise) <= truncated.tail_bound
        want = float(mpmath.zeta(sigma, derivative=1) / mpmath.zeta(sigma))
        assert precise == pytest.approx(want, rel=1e-13)


def test_zeta_log_deriv_sigma2_reference():
    r = zeta_log_deriv(2.0, n_max=10**6)
    assert r.value == pytest.approx(-0.5699, abs=2e-4)


def test_zeta_log_deriv_large_sigma_two_term():
    r = zeta_log_deriv(30.0, n_max=100)
    want = -math.log(2) * 2.0**-30.0
    assert r.value == pytest.approx(want, rel=1e-9)
    assert r.tail_bound < 1e-25


def test_zeta_log_deriv_guards():
    with pytest.raises(ValueError):
        zeta_log_deriv(1.1)
    with pytest.raises(ValueError):
        zeta_log_deriv(2.0, n_max=1000, tol=1e-12)


def test_gamma_factor_log_deriv():
    # gamma(s) = s(s-1) pi^(-s/2) Gamma(s/2) / 2; check against mpmath's
    # derivative of log gamma(s) by high-precision central difference.
    for sigma in [2.0, 2.5, 3.0, 4.0, 6.0]:
        h = mpmath.mpf(1) / 10**12

        def lg(s):
            return (
                mpmath.log(s)
                + mpmath.log(s - 1)
                - s * mpmath.log(mpmath.pi) / 2
                + mpmath.loggamma(s / 2)
                - mpmath.log(2)
            )

        want = float((lg(sigma + h) - lg(sigma - h)) / (2 * h))
        assert gamma_factor_log_deriv(sigma) == pytest.approx(want, rel=1e-10)


def test_xi_log_deriv_composition():
    sigma = 3.0
    assert xi_log_deriv(sigma) == pytest.approx(
        gamma_factor_log_deriv(sigma) + zeta_log_deriv_precise(sigma), abs=0
    )
