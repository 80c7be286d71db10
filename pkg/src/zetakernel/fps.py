"""Exact truncated power series over Q[theta].

The density constructions downstream need the coefficients of two asymptotic
expansions, kept as exact polynomials in the screening parameter theta:

* ``digamma_expansion``: coefficients c_n(theta) with
  s^theta * exp(-theta*psi(s) - theta/s) = 1 + sum_{n>=1} c_n(theta) s^-n,
  obtained by exponentiating the Stirling series of psi at s+1 and re-basing
  the 1/(s+1) expansion to 1/s.

* ``gamma_quotient_expansion``: coefficients a_n(theta) of the same object
  multiplied by exp(-2*theta/(2w-3)) in the variable 1/w; this is the
  expansion that drives the Gamma-factor density.

Everything is Fraction arithmetic: no rounding, so coefficient identities can
be asserted with zero tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .specfun import BernoulliTable

__all__ = [
    "RationalPoly",
    "FPSeries",
    "fps_exp",
    "fps_log1p",
    "rebase_shifted",
    "digamma_shifted_expansion",
    "digamma_expansion",
    "gamma_quotient_expansion",
    "derive_c_tilde",
    "derive_a",
    "local_factor_coefficients",
]

_QZERO = Fraction(0)


class RationalPoly:
    """Polynomial in one indeterminate with Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [c if isinstance(c, Fraction) else Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c) -> "RationalPoly":
        return cls([Fraction(c)])

    @classmethod
    def x(cls) -> "RationalPoly":
        """The indeterminate itself (theta in most uses)."""
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "RationalPoly") -> "RationalPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return RationalPoly(out)

    def __neg__(self) -> "RationalPoly":
        return RationalPoly([-c for c in self.coeffs])

    def __sub__(self, other: "RationalPoly") -> "RationalPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RationalPoly):
            if self.is_zero() or other.is_zero():
                return RationalPoly()
            out = [_QZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return RationalPoly(out)
        return RationalPoly([c * Fraction(other) for c in self.coeffs])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, value):
        """Horner evaluation; exact if value is a Fraction, float otherwise."""
        acc = Fraction(0) if isinstance(value, Fraction) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * value + (c if isinstance(value, Fraction) else float(c))
        return acc

    def __repr__(self):
        if self.is_zero():
            return "RationalPoly(0)"
        parts = [f"{c}*x^{i}" for i, c in enumerate(self.coeffs) if c != 0]
        return "RationalPoly(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class FPSeries:
    """Truncated power series sum_{n<=order} coeffs[n] * var^n.

    ``var`` is a plain label ("u" for 1/s, "v" for 1/(s+1), "w" for 1/w, ...);
    arithmetic refuses to mix labels, which catches re-expansion mistakes.
    """

    var: str
    coeffs: tuple

    @classmethod
    def build(cls, var: str, coeffs, order: int) -> "FPSeries":
        cs = list(coeffs)[: order + 1]
        cs += [RationalPoly()] * (order + 1 - len(cs))
        return cls(var, tuple(cs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _check(self, other: "FPSeries") -> None:
        if self.var != other.var:
            raise ValueError(f"variable mismatch: {self.var!r} vs {other.var!r}")
        if self.order != other.order:
            raise ValueError("truncation order mismatch")

    def __add__(self, other: "FPSeries") -> "FPSeries":
        self._check(other)
        return FPSeries(self.var, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "FPSeries") -> "FPSeries":
        self._check(other)
        return FPSeries(self.var, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, other: "FPSeries") -> "FPSeries":
        self._check(other)
        n = self.order
        out = [RationalPoly() for _ in range(n + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return FPSeries(self.var, tuple(out))


def fps_exp(a: FPSeries) -> FPSeries:
    """exp of a series with zero constant term.

    Uses the derivative recursion b_n = (1/n) sum_{k=1}^{n} k a_k b_{n-k},
    which is exact and avoids factorial blowup.
    """
    if not a.coeffs[0].is_zero():
        raise ValueError("fps_exp needs zero constant term")
    n = a.order
    out = [RationalPoly.const(1)]
    for m in range(1, n + 1):
        acc = RationalPoly()
        for k in range(1, m + 1):
            ak = a.coeffs[k]
            if ak.is_zero():
                continue
            acc = acc + (Fraction(k) * ak) * out[m - k]
        out.append(Fraction(1, m) * acc)
    return FPSeries(a.var, tuple(out))


def fps_log1p(a: FPSeries) -> FPSeries:
    """log(1 + a) for a series with zero constant term (exact inverse of fps_exp - 1)."""
    if not a.coeffs[0].is_zero():
        raise ValueError("fps_log1p needs zero constant term")
    n = a.order
    out = [RationalPoly()]
    for m in range(1, n + 1):
        acc = a.coeffs[m]
        for k in range(1, m):
            ck = out[k]
            if ck.is_zero():
                continue
            acc = acc - Fraction(k, m) * (ck * a.coeffs[m - k])
        out.append(acc)
    return FPSeries(a.var, tuple(out))


def rebase_shifted(series: FPSeries) -> FPSeries:
    """Re-expand a series in v = 1/(s+1) as a series in u = 1/s.

    Exact substitution v = u/(1+u):  v^n = sum_j (-1)^j C(n+j-1, j) u^(n+j),
    so the u^m coefficient collects (-1)^(m-n) C(m-1, m-n) from each v^n.
    Requires zero constant term (the constant is basis independent anyway).
    """
    if series.var != "v":
        raise ValueError("rebase_shifted expects a series in v = 1/(s+1)")
    if not series.coeffs[0].is_zero():
        raise ValueError("rebase_shifted needs zero constant term")
    n = series.order
    out = [RationalPoly() for _ in range(n + 1)]
    for m in range(1, n + 1):
        acc = RationalPoly()
        for k in range(1, m + 1):
            dk = series.coeffs[k]
            if dk.is_zero():
                continue
            sign = -1 if (m - k) % 2 else 1
            acc = acc + (sign * Fraction(math.comb(m - 1, m - k))) * dk
        out[m] = acc
    return FPSeries("u", tuple(out))


def digamma_shifted_expansion(order: int, table: BernoulliTable | None = None) -> FPSeries:
    """Expansion of s^theta exp(-theta psi(s) - theta/s) - 1 in v = 1/(s+1).

    psi(s) + 1/s = psi(s+1) and the Stirling series at s+1 give the exponent
        theta*log(s/(s+1)) + theta/(2(s+1)) + sum_k theta B_2k/(2k) v^(2k)
    with log(s/(s+1)) = log(1-v) = -sum v^n/n.  The exponent is exponentiated
    term by term; the result is exact through v^order.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    table = table or BernoulliTable(max(1, order // 2))
    theta = RationalPoly.x()
    expo = [RationalPoly()]
    for n in range(1, order + 1):
        c = Fraction(-1, n) * theta
        if n == 1:
            c = c + Fraction(1, 2) * theta
        if n % 2 == 0:
            c = c + (table.even(n // 2) / n) * theta
        expo.append(c)
    e = FPSeries("v", tuple(expo))
    result = fps_exp(e)
    # drop the constant 1
    return FPSeries("v", (RationalPoly(),) + result.coeffs[1:])


def digamma_expansion(order: int, table: BernoulliTable | None = None) -> list:
    """Coefficients [c_0 = 1, c_1, ..., c_order] of
    s^theta exp(-theta psi(s) - theta/s) = sum_n c_n(theta) s^-n."""
    shifted = digamma_shifted_expansion(order, table)
    inv_s = rebase_shifted(shifted)
    return [RationalPoly.const(1)] + list(inv_s.coeffs[1:])


def gamma_quotient_expansion(order: int, table: BernoulliTable | None = None) -> list:
    """Coefficients [a_0 = 1, a_1, ..., a_order] of
    w^theta exp(-theta psi(w) - theta/w) exp(-2 theta/(2w-3)) = sum_n a_n(theta) w^-n.

    The second factor expands exactly: 1/(2w-3) = sum_k 3^k 2^-(k+1) w^-(k+1),
    so the exponent coefficient at w^-(k+1) is -theta (3/2)^k.
    """
    cs = digamma_expansion(order, table)
    base = FPSeries.build("w", cs, order)
    theta = RationalPoly.x()
    expo = [RationalPoly()]
    for k in range(order):
        expo.append((-Fraction(3**k, 2**k)) * theta)
    factor = fps_exp(FPSeries("w", tuple(expo)))
    return list((base * factor).coeffs)


def derive_c_tilde(order: int) -> list:
    """[C_tilde_1 ... C_tilde_{order-1}]: s^theta exp(-theta psi(s) - theta/s) - 1
    = sum_{n>=1} C_tilde_n(theta) s^-n, exact polynomials in theta."""
    if order < 2:
        raise ValueError("order must be >= 2")
    return digamma_expansion(order - 1)[1:]


def derive_a(order: int) -> list:
    """[A_1 ... A_{order-1}]: the same object times exp(-2 theta/(2w-3)),
    expanded in 1/w; exact polynomials in theta."""
    if order < 2:
        raise ValueError("order must be >= 2")
    return gamma_quotient_expansion(order - 1)[1:]


def local_factor_coefficients(order: int) -> list:
    """Coefficients P_k(y) of exp(y * x/(1-x)) = sum_k P_k(y) x^k, exact in Q[y].

    Used as the independent oracle for multiplicative coefficient tables: at a
    prime p the local Euler factor of exp(-2 theta zeta'/zeta) is exactly this
    series with y = 2 theta log p and x = p^-s.
    """
    y = RationalPoly.x()
    expo = [RationalPoly()] + [y] * order
    return list(fps_exp(FPSeries.build("x", expo, order)).coeffs)
