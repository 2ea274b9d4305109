"""Exact arithmetic over Q(sqrt(d)) and its complexification, plus a float fallback.

Every complex value handled in exact mode is ``re + im*i`` with ``re`` and
``im`` in Q(sqrt(d)), where ``d = |disc|`` is fixed for a run.  The imaginary
quadratic field K = Q(sqrt(disc)) embeds here because sqrt(disc) = i*sqrt(d).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath

Rational = Fraction

DEFAULT_PRECISION = 128
DEFAULT_SAFETY_MARGIN = Fraction(1, 2**64)


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _sign(v) -> int:
    return (v > 0) - (v < 0)


@dataclass(frozen=True, slots=True)
class QuadReal:
    """The real number ``a + b*sqrt(d)`` with rational ``a``, ``b``."""

    d: int
    a: Fraction
    b: Fraction = Fraction(0)

    @classmethod
    def of(cls, d: int, a=0, b=0) -> "QuadReal":
        return cls(d, _frac(a), _frac(b))

    def _coerce(self, other) -> "QuadReal":
        if isinstance(other, QuadReal):
            if other.d != self.d:
                raise ValueError(f"radicand mismatch: {self.d} vs {other.d}")
            return other
        return QuadReal(self.d, _frac(other), Fraction(0))

    def __add__(self, other):
        o = self._coerce(other)
        return QuadReal(self.d, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QuadReal(self.d, -self.a, -self.b)

    def __sub__(self, other):
        o = self._coerce(other)
        return QuadReal(self.d, self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuadReal(self.d, self.a * other, self.b * other)
        o = self._coerce(other)
        return QuadReal(
            self.d,
            self.a * o.a + self.b * o.b * self.d,
            self.a * o.b + self.b * o.a,
        )

    __rmul__ = __mul__

    def conj(self) -> "QuadReal":
        return QuadReal(self.d, self.a, -self.b)

    def field_norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def inverse(self) -> "QuadReal":
        n = self.field_norm()
        if n == 0:
            raise ZeroDivisionError("QuadReal division by zero")
        return QuadReal(self.d, self.a / n, -self.b / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("QuadReal division by zero")
            return QuadReal(self.d, self.a / other, self.b / other)
        return self * self._coerce(other).inverse()

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def sign(self) -> int:
        return qr_sign(self)

    def compare(self, other) -> int:
        return qr_sign(self - other)

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def to_mpf(self, ctx=mpmath.mp):
        return ctx.mpf(self.a.numerator) / self.a.denominator + (
            ctx.mpf(self.b.numerator) / self.b.denominator
        ) * ctx.sqrt(self.d)

    def __float__(self):
        return qr_to_float(self)

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt({self.d})"
        op = "+" if self.b > 0 else "-"
        return f"{self.a}{op}{abs(self.b)}*sqrt({self.d})"


def qr_sign(x: QuadReal) -> int:
    """Exact sign of ``a + b*sqrt(d)``."""
    sa, sb = _sign(x.a), _sign(x.b)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: compare a^2 with b^2 d
    return sa * _sign(x.a * x.a - x.b * x.b * x.d)


def qr_to_float(x: QuadReal) -> float:
    """Correctly signed float of ``a + b*sqrt(d)``, raising precision until cancellation is resolved."""
    if x.b == 0:
        return float(x.a)
    if x.a == 0:
        return float(x.b) * math.sqrt(x.d)
    if qr_sign(x) == 0:  # only possible when d is a perfect square
        return 0.0
    scale = abs(x.a) + abs(x.b) * (x.d + 1)
    prec = 64 + max(scale.numerator.bit_length(), 1)
    while True:
        with mpmath.workprec(prec):
            v = x.to_mpf()
            size = mpmath.mpf(scale.numerator) / scale.denominator
            if v != 0 and abs(v) > size * mpmath.ldexp(1, 60 - prec):
                return float(v)
        prec *= 2


@dataclass(frozen=True, slots=True)
class QuadComplex:
    """Exact complex number ``re + im*i`` over Q(sqrt(d))."""

    re: QuadReal
    im: QuadReal

    @classmethod
    def zero(cls, d: int) -> "QuadComplex":
        z = QuadReal(d, Fraction(0), Fraction(0))
        return cls(z, z)

    @classmethod
    def of(cls, d: int, re_a=0, re_b=0, im_a=0, im_b=0) -> "QuadComplex":
        return cls(QuadReal.of(d, re_a, re_b), QuadReal.of(d, im_a, im_b))

    @property
    def d(self) -> int:
        return self.re.d

    def _coerce(self, other) -> "QuadComplex":
        if isinstance(other, QuadComplex):
            return other
        if isinstance(other, QuadReal):
            return QuadComplex(other, QuadReal(other.d, Fraction(0)))
        return QuadComplex(QuadReal(self.d, _frac(other)), QuadReal(self.d, Fraction(0)))

    def __add__(self, other):
        o = self._coerce(other)
        return QuadComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QuadComplex(-self.re, -self.im)

    def __sub__(self, other):
        o = self._coerce(other)
        return QuadComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, QuadReal)):
            return QuadComplex(self.re * other, self.im * other)
        o = self._coerce(other)
        return QuadComplex(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    __rmul__ = __mul__

    def conj(self) -> "QuadComplex":
        return QuadComplex(self.re, -self.im)

    def norm_sq(self) -> QuadReal:
        return qc_norm_sq(self)

    def __truediv__(self, other):
        return qc_div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return qc_div(self._coerce(other), self)

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def to_mpc(self, ctx=mpmath.mp):
        return ctx.mpc(self.re.to_mpf(ctx), self.im.to_mpf(ctx))

    def __complex__(self):
        with mpmath.workprec(80):
            return complex(self.to_mpc())

    def __str__(self):
        return f"({self.re})+({self.im})i"


def qc_norm_sq(w: QuadComplex) -> QuadReal:
    """``|w|^2 = re^2 + im^2``, exactly."""
    return w.re * w.re + w.im * w.im


def qc_div(u: QuadComplex, w: QuadComplex) -> QuadComplex:
    n = qc_norm_sq(w)
    if n.is_zero():
        raise ZeroDivisionError("division by zero complex value")
    inv = n.inverse()
    num = u * w.conj()
    return QuadComplex(num.re * inv, num.im * inv)


@dataclass(frozen=True)
class FloatComplex:
    """Complex value carried at a fixed binary precision (mpmath backend)."""

    value: mpmath.mpc
    prec: int = DEFAULT_PRECISION

    def ctx(self):
        c = mpmath.MPContext()
        c.prec = self.prec
        return c


ComplexValue = Union[QuadComplex, FloatComplex]


# ---------------------------------------------------------------- parsing

_NUM = r"-?\d+(?:\.\d+)?(?:/\d+)?"
_TERM = re.compile(rf"^(?P<num>{_NUM})(?:\*sqrt\((?P<g>\d+)\))?$")


def _split_terms(s: str) -> list[str]:
    terms, cur = [], ""
    for i, ch in enumerate(s):
        if ch in "+-" and i > 0 and s[i - 1] not in "/(*":
            terms.append(cur)
            cur = "" if ch == "+" else "-"
        else:
            cur += ch
    terms.append(cur)
    return [t for t in terms if t]


def _parse_rational(s: str) -> Fraction:
    if "/" in s:
        p, q = s.split("/")
        return Fraction(p) / Fraction(q)
    return Fraction(s)


def parse_complex(text: str, d: int) -> QuadComplex:
    """Parse ``R+Ri`` style input into an exact QuadComplex over radicand ``d``.

    Accepted real atoms: ``-1.26``, ``3/4``, ``1/2*sqrt(23)`` (the radicand must
    equal ``d``).  Terms may be chained with ``+``/``-``; a trailing ``i``
    marks an imaginary term.  A bare ``i`` means ``1i``.
    """
    s = "".join(text.split())
    if not s:
        raise ValueError("empty complex literal")
    re_part = QuadReal.of(d)
    im_part = QuadReal.of(d)
    for term in _split_terms(s):
        imag = term.endswith("i")
        body = term[:-1] if imag else term
        if body in ("", "-"):
            body += "1"
        if body.endswith("*"):
            body = body[:-1]
        m = _TERM.match(body)
        if not m:
            raise ValueError(f"cannot parse term {term!r} in {text!r}")
        val = _parse_rational(m.group("num"))
        g = m.group("g")
        if g is not None and int(g) != d:
            raise ValueError(f"radicand sqrt({g}) does not match |disc| = {d}")
        piece = QuadReal.of(d, 0, val) if g is not None else QuadReal.of(d, val)
        if imag:
            im_part = im_part + piece
        else:
            re_part = re_part + piece
    return QuadComplex(re_part, im_part)


def format_complex(w, digits: int = 17) -> str:
    """Render a complex value (exact or float) as ``a+bi`` with fixed significant digits."""
    if isinstance(w, QuadComplex):
        with mpmath.workprec(128):
            c = w.to_mpc()
    elif isinstance(w, FloatComplex):
        c = w.value
    else:
        c = mpmath.mpc(w)
    re_s = mpmath.nstr(c.real, digits)
    im = c.imag
    sign = "-" if im < 0 else "+"
    return f"{re_s}{sign}{mpmath.nstr(abs(im), digits)}i"
