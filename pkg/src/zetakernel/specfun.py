"""Scalar special functions needed by the kernel construction.

Everything here is computed from scratch in double precision: exact rational
Bernoulli numbers, the real-argument gamma and digamma functions through
Stirling-type tail series, and modified/ordinary Bessel functions through
their ascending power series.  No asymptotic Bessel expansions are used; the
series are summed with compensated accumulation and ratio-based termination,
which keeps every value reproducible and easy to bound.
"""

from __future__ import annotations

import math
from fractions import Fraction

__all__ = [
    "BernoulliTable",
    "bernoulli_numbers",
    "gamma_real",
    "digamma",
    "bessel_i",
    "bessel_j",
    "bessel_j1_over_z",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Series cutoffs.  Stirling tails are evaluated at z >= _SHIFT_POINT where the
# Bernoulli terms decay far below double rounding before the table runs out.
_SHIFT_POINT = 10.0
_DIGAMMA_SHIFT = 12.0
_TERM_EPS = 1e-17


class BernoulliTable:
    """Exact Bernoulli numbers B_0, B_1, B_2, ... as fractions.

    Uses the defining recursion sum_{k=0}^{m} C(m+1, k) B_k = 0 with B_1 =
    -1/2, extending the cached list on demand.  Only even indices beyond 1
    are nonzero; `even(n)` returns B_{2n}.
    """

    def __init__(self, max_even_index: int = 30):
        self._values = [Fraction(1), Fraction(-1, 2)]
        self.extend(2 * max_even_index)

    def extend(self, n: int) -> None:
        while len(self._values) <= n:
            m = len(self._values)
            acc = Fraction(0)
            for k, bk in enumerate(self._values):
                acc += math.comb(m + 1, k) * bk
            self._values.append(-acc / (m + 1))

    def value(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError("Bernoulli index must be nonnegative")
        self.extend(n)
        return self._values[n]

    def even(self, n: int) -> Fraction:
        return self.value(2 * n)


_BERNOULLI = BernoulliTable(30)


def bernoulli_numbers(count: int) -> list[Fraction]:
    """Return [B_2, B_4, ..., B_{2*count}] as exact fractions."""
    return [_BERNOULLI.even(k) for k in range(1, count + 1)]


# Float coefficients B_{2n} / (2n (2n-1)) for the log-gamma tail and
# B_{2n} / (2n) for the digamma tail, precomputed once.
_STIRLING_K = 12
_STIRLING_COEF = [
    float(_BERNOULLI.even(k)) / (2 * k * (2 * k - 1)) for k in range(1, _STIRLING_K + 1)
]
_DIGAMMA_K = 11
_DIGAMMA_COEF = [float(_BERNOULLI.even(k)) / (2 * k) for k in range(1, _DIGAMMA_K + 1)]


def _log_gamma_stirling(z: float) -> float:
    # log Gamma(z) = (z - 1/2) log z - z + log sqrt(2 pi) + sum B_2n/(2n(2n-1) z^(2n-1))
    # valid (to ~1e-19 relative) for z >= _SHIFT_POINT with _STIRLING_K terms.
    base = (z - 0.5) * math.log(z) - z + _LOG_SQRT_2PI
    zinv2 = 1.0 / (z * z)
    tail = 0.0
    power = 1.0 / z
    for c in _STIRLING_COEF:
        tail += c * power
        power *= zinv2
    return base + tail


def gamma_real(x: float) -> float:
    """Gamma(x) for real 0 < x <= 171.

    Arguments below the Stirling zone are promoted with the recurrence
    Gamma(x) = Gamma(x + k) / (x (x+1) ... (x+k-1)).
    """
    if not x > 0.0:
        raise ValueError(f"gamma_real requires x > 0, got {x}")
    if x > 171.0:
        raise ValueError(f"gamma_real overflows for x > 171, got {x}")
    shift = 1.0
    z = x
    while z < _SHIFT_POINT:
        shift *= z
        z += 1.0
    return math.exp(_log_gamma_stirling(z)) / shift


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for real x > 0.

    Upward recurrence psi(x+1) = psi(x) + 1/x into the asymptotic zone, then
    psi(z) = log z - 1/(2z) - sum_{n>=1} B_2n / (2n z^2n).
    """
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    z = x
    while z < _DIGAMMA_SHIFT:
        acc -= 1.0 / z
        z += 1.0
    zinv2 = 1.0 / (z * z)
    tail = 0.0
    power = zinv2
    for c in _DIGAMMA_COEF:
        tail += c * power
        power *= zinv2
    return acc + math.log(z) - 0.5 / z - tail


def bessel_i(nu: float, z: float) -> float:
    """Modified Bessel I_nu(z), nu >= 0, 0 <= z <= 60, by the ascending series.

    I_nu(z) = sum_m (z/2)^(2m+nu) / (m! Gamma(nu+m+1)).  All terms are
    positive, so plain summation loses nothing; terms are generated by the
    ratio recursion and accumulation is compensated.  Terminates once
    term/partial < 1e-17.
    """
    if nu < 0.0:
        raise ValueError(f"bessel_i requires nu >= 0, got {nu}")
    if z < 0.0 or z > 60.0:
        raise ValueError(f"bessel_i requires 0 <= z <= 60, got {z}")
    if z == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    half = 0.5 * z
    q = half * half
    term = half**nu / gamma_real(nu + 1.0)
    total = term
    comp = 0.0  # Kahan carry
    m = 0
    while term > _TERM_EPS * total:
        term *= q / ((m + 1.0) * (nu + m + 1.0))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        m += 1
        if m > 600:  # unreachable for z <= 60; guards against NaN loops
            raise RuntimeError("bessel_i series failed to terminate")
    return total


def _bessel_j_fraction(kind: int, z: float) -> float:
    # Exact-rational alternating series.  (z/2)^2 converts to a Fraction with
    # no rounding, so the only float error is the final conversion; this is
    # what keeps large-z cancellation harmless.
    q = Fraction(0.5 * z) ** 2
    term = Fraction(1)
    total = Fraction(0)
    m = 0
    tiny = Fraction(1, 10**28)
    while True:
        total += term if m % 2 == 0 else -term
        m += 1
        denom = m * m if kind == 0 else m * (m + 1)
        term = term * q / denom
        if denom > 2 * q and term < tiny:
            break
        if m > 400:
            raise RuntimeError("bessel_j series failed to terminate")
    result = float(total)
    return result if kind == 0 else result * 0.5 * z


def bessel_j(kind: int, z: float) -> float:
    """Ordinary Bessel J_0 or J_1 on 0 <= z <= 60 by alternating power series.

    For z <= 12 the double-precision series keeps the alternating
    cancellation below ~1e-12 relative.  Beyond that the partial terms grow
    to ~1e23 and double precision cannot represent the cancellation, so the
    sum is carried out in exact rational arithmetic and rounded once.
    """
    if kind not in (0, 1):
        raise ValueError(f"bessel_j kind must be 0 or 1, got {kind}")
    if z < 0.0 or z > 60.0:
        raise ValueError(f"bessel_j requires 0 <= z <= 60, got {z}")
    if z == 0.0:
        return 1.0 if kind == 0 else 0.0
    if z > 12.0:
        return _bessel_j_fraction(kind, z)
    half = 0.5 * z
    q = half * half
    term = 1.0
    total = 0.0
    m = 0
    sign = 1.0
    while abs(term) > 1e-18 * (1.0 + abs(total)):
        total += sign * term
        denom = (m + 1.0) * (m + 1.0) if kind == 0 else (m + 1.0) * (m + 2.0)
        term *= q / denom
        sign = -sign
        m += 1
        if m > 200:
            raise RuntimeError("bessel_j series failed to terminate")
    return total if kind == 0 else total * half


def bessel_j1_over_z(z: float) -> float:
    """J_1(z)/z computed by series; tends to 1/2 as z -> 0.

    Never formed as a quotient, so the removable singularity at z = 0 costs
    no accuracy.
    """
    if z < 0.0 or z > 60.0:
        raise ValueError(f"bessel_j1_over_z requires 0 <= z <= 60, got {z}")
    if z > 12.0:
        return _bessel_j_fraction(1, z) / z
    q = (0.5 * z) ** 2
    term = 0.5
    total = 0.0
    m = 0
    sign = 1.0
    while abs(term) > 1e-18 * (1.0 + abs(total)):
        total += sign * term
        term *= q / ((m + 1.0) * (m + 2.0))
        sign = -sign
        m += 1
    return total
