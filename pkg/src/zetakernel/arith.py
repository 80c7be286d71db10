"""Arithmetic side of the kernel: von Mangoldt function, the multiplicative
coefficients of exp(-2 theta zeta'/zeta), and logarithmic derivatives of zeta
and of the completed-zeta gamma factor on the real axis.

Two independent routes to zeta'/zeta are kept deliberately: the truncated
Dirichlet sum over von Mangoldt values carries a certified monotone tail
bound, while the Euler-Maclaurin evaluator reaches double precision at small
sigma where the Dirichlet tail is hopeless.  They cross-check each other in
the tests and in the verify suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import BernoulliTable, digamma

__all__ = [
    "MangoldtTable",
    "LambdaTable",
    "sieve_mangoldt",
    "lambda_table",
    "lambda_prime_power",
    "TailSum",
    "zeta_log_deriv",
    "zeta_em",
    "zeta_prime_em",
    "zeta_log_deriv_precise",
    "gamma_factor_log_deriv",
    "xi_log_deriv",
]

_SIEVE_CAP = 10**7


@dataclass(frozen=True)
class MangoldtTable:
    """Prime-power classification of 1..n_max.

    prime[n] = p and power[n] = k when n = p^k, both 0 otherwise;
    log_p[n] = Lambda(n) (log p on prime powers, 0 elsewhere).
    Index 0 is padding so the arrays are indexable by n directly.
    """

    n_max: int
    prime: np.ndarray
    power: np.ndarray
    log_p: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.log_p

    def chebyshev_psi(self) -> float:
        return float(self.log_p.sum())


def _smallest_prime_factor(n_max: int) -> np.ndarray:
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(n_max)) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
    rest = np.arange(n_max + 1, dtype=np.int64)
    spf[spf == 0] = rest[spf == 0]
    spf[:2] = 0
    return spf


def sieve_mangoldt(n_max: int) -> MangoldtTable:
    if not 1 <= n_max <= _SIEVE_CAP:
        raise ValueError(f"n_max must be in [1, {_SIEVE_CAP}]")
    spf = _smallest_prime_factor(n_max)
    prime = np.zeros(n_max + 1, dtype=np.int64)
    power = np.zeros(n_max + 1, dtype=np.int64)
    log_p = np.zeros(n_max + 1, dtype=np.float64)
    primes = np.nonzero(spf == np.arange(n_max + 1))[0]
    primes = primes[primes >= 2]
    for p in primes:
        q = int(p)
        k = 1
        lp = math.log(p)
        while q <= n_max:
            prime[q] = p
            power[q] = k
            log_p[q] = lp
            if q > n_max // p:
                break
            q *= p
            k += 1
    return MangoldtTable(n_max=n_max, prime=prime, power=power, log_p=log_p)


def lambda_prime_power(theta: float, p: int, k: int) -> float:
    """lambda_theta(p^k) from the local Euler factor exp(2 theta log p x/(1-x)):
    the log-derivative recursion k a_k = 2 theta log p * sum_{m<=k} m a_{k-m}."""
    c = 2.0 * theta * math.log(p)
    a = [1.0]
    for j in range(1, k + 1):
        a.append(c * sum(m * a[j - m] for m in range(1, j + 1)) / j)
    return a[k]


@dataclass(frozen=True)
class LambdaTable:
    """Coefficients of exp(-2 theta zeta'/zeta(s)) as a Dirichlet series."""

    theta: float
    n_max: int
    values: np.ndarray
    mangoldt: MangoldtTable = field(repr=False)

    def dirichlet_sum(self, sigma: float) -> "TailSum":
        """sum lambda(n) n^-sigma over the table, with a certified tail bound.

        All lambda(n) are nonnegative, so for any 1 < s' < sigma
            sum_{n>X} lambda(n) n^-sigma <= X^(s'-sigma) sum_n lambda(n) n^-s'
                                          = X^(s'-sigma) exp(-2 theta zeta'/zeta(s')),
        and we minimize the rigorous right side over a small s' grid.
        """
        n = np.arange(1, self.n_max + 1, dtype=np.float64)
        value = float(np.sum(self.values[1:] * n ** (-sigma)))
        x = float(self.n_max)
        tail = math.inf
        for sp in (1.25, 1.5, 1.75, 2.0, 2.5, 3.0):
            if sp >= sigma:
                break
            bound = x ** (sp - sigma) * math.exp(-2.0 * self.theta * zeta_log_deriv_precise(sp))
            tail = min(tail, bound)
        return TailSum(value=value, tail_bound=tail)


_lambda_cache: dict = {}


def lambda_table(theta: float, n_max: int, mangoldt: MangoldtTable | None = None) -> LambdaTable:
    """Multiplicative table of lambda_theta(n), built on prime powers first and
    spread by complete multiplicativity over coprime parts."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    key = (float(theta), int(n_max))
    hit = _lambda_cache.get(key)
    if hit is not None:
        return hit
    mt = mangoldt if mangoldt is not None and mangoldt.n_max >= n_max else sieve_mangoldt(n_max)
    values = np.zeros(n_max + 1, dtype=np.float64)
    values[1] = 1.0
    # prime powers by the local-factor recursion, reusing partial sums per prime
    primes = np.nonzero(mt.power[: n_max + 1] == 1)[0]
    for p in primes:
        c = 2.0 * theta * mt.log_p[p]
        a = [1.0]
        q = int(p)
        while q <= n_max:
            j = len(a)
            a.append(c * sum(m * a[j - m] for m in range(1, j + 1)) / j)
            values[q] = a[j]
            if q > n_max // p:
                break
            q *= p
    # spread multiplicatively: n = (p^k) * cof with p the smallest prime of n
    spf = _smallest_prime_factor(n_max)
    for n in range(2, n_max + 1):
        if mt.power[n] > 0:
            continue
        m = n
        p = int(spf[n])
        q = 1
        while m % p == 0:
            m //= p
            q *= p
        values[n] = values[q] * values[m]
    table = LambdaTable(theta=float(theta), n_max=int(n_max), values=values, mangoldt=mt)
    _lambda_cache[key] = table
    return table


@dataclass(frozen=True)
class TailSum:
    """A truncated sum together with a certified bound on the dropped tail."""

    value: float
    tail_bound: float


def zeta_log_deriv(sigma: float, n_max: int = 10**6, tol: float | None = None) -> TailSum:
    """zeta'/zeta(sigma) = -sum Lambda(n) n^-sigma truncated at n_max.

    Tail certified by the monotone bound
        sum_{n>X} Lambda(n) n^-sigma <= int_X^inf log(u) u^-sigma du
                                      = (log X/(sigma-1) + 1/(sigma-1)^2) X^(1-sigma).
    """
    if sigma < 1.25:
        raise ValueError("sigma must be >= 1.25 for a usable tail bound")
    mt = sieve_mangoldt(n_max)
    n = np.arange(1, n_max + 1, dtype=np.float64)
    value = -float(np.sum(mt.log_p[1:] * n ** (-sigma)))
    x = float(n_max)
    tail = (math.log(x) / (sigma - 1.0) + 1.0 / (sigma - 1.0) ** 2) * x ** (1.0 - sigma)
    if tol is not None and tail > tol:
        raise ValueError(f"tail bound {tail:.3e} exceeds requested tolerance {tol:.3e}")
    return TailSum(value=value, tail_bound=tail)


_EM_M = 50
_EM_K = 12
_EM_BERNOULLI = BernoulliTable(_EM_K + 1)


def _em_correction_terms(s: float, m: float):
    """Yield the Euler-Maclaurin correction pairs (term for zeta, term for zeta')
    at summation cutoff m: B_2k/(2k)! * (s)_{2k-1} * m^(-s-2k+1) and its s-derivative."""
    lm = math.log(m)
    for k in range(1, _EM_K + 1):
        b = float(_EM_BERNOULLI.even(k)) / math.factorial(2 * k)
        poch = 1.0
        dlog = 0.0
        for j in range(2 * k - 1):
            poch *= s + j
            dlog += 1.0 / (s + j)
        base = b * poch * m ** (-s - 2 * k + 1)
        yield base, base * (dlog - lm)


def zeta_em(s: float) -> float:
    """zeta(s) for real s > 1 by Euler-Maclaurin with remainder far below 1e-15."""
    if s <= 1.0:
        raise ValueError("s must be > 1")
    m = float(_EM_M)
    total = sum(n ** (-s) for n in range(1, _EM_M))
    total += m ** (1.0 - s) / (s - 1.0) + 0.5 * m ** (-s)
    for term, _ in _em_correction_terms(s, m):
        total += term
    return total


def zeta_prime_em(s: float) -> float:
    """zeta'(s) for real s > 1, term-by-term derivative of the same expansion."""
    if s <= 1.0:
        raise ValueError("s must be > 1")
    m = float(_EM_M)
    lm = math.log(m)
    total = -sum(math.log(n) * n ** (-s) for n in range(2, _EM_M))
    total += -(m ** (1.0 - s)) * (lm / (s - 1.0) + 1.0 / (s - 1.0) ** 2)
    total += -0.5 * lm * m ** (-s)
    for _, dterm in _em_correction_terms(s, m):
        total += dterm
    return total


def zeta_log_deriv_precise(sigma: float) -> float:
    """zeta'/zeta(sigma) at full double precision (Euler-Maclaurin route)."""
    return zeta_prime_em(sigma) / zeta_em(sigma)


_LOG_PI = math.log(math.pi)


def gamma_factor_log_deriv(sigma: float) -> float:
    """gamma'/gamma(sigma) for gamma(s) = s(s-1) pi^(-s/2) Gamma(s/2) / 2:
    1/sigma + 1/(sigma-1) - log(pi)/2 + digamma(sigma/2)/2."""
    if sigma <= 1.0:
        raise ValueError("sigma must be > 1")
    return 1.0 / sigma + 1.0 / (sigma - 1.0) - 0.5 * _LOG_PI + 0.5 * digamma(0.5 * sigma)


def xi_log_deriv(sigma: float) -> float:
    """xi'/xi(sigma) = gamma'/gamma(sigma) + zeta'/zeta(sigma), precise route."""
    return gamma_factor_log_deriv(sigma) + zeta_log_deriv_precise(sigma)
