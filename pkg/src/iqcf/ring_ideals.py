"""Imaginary quadratic orders Z[tau], their ideals as HNF lattices, and 2-D reduction.

Elements of K = Q(sqrt(disc)) are written ``x + y*tau`` and carried as
:class:`Elem` pairs; integral elements have integer coordinates.  A lattice
in K is stored in rational Hermite normal form ``Z*a0 + Z*(b0 + c0*tau)``
with ``a0, c0 > 0`` and ``0 <= b0 < a0``, which makes equality structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, NamedTuple, Optional

from .numerics import QuadComplex, QuadReal


class IdealError(ValueError):
    pass


class ZeroModuleError(IdealError):
    pass


class NonInvertibleIdealError(IdealError):
    pass


class Elem(NamedTuple):
    """``x + y*tau``; integer coordinates for ring elements, rationals for K."""

    x: object
    y: object

    def is_integral(self) -> bool:
        return Fraction(self.x).denominator == 1 and Fraction(self.y).denominator == 1

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def to_json(self) -> dict:
        return {"x": int(self.x), "y": int(self.y)}

    @classmethod
    def from_json(cls, obj) -> "Elem":
        return cls(int(obj["x"]), int(obj["y"]))

    def __neg__(self):
        return Elem(-self.x, -self.y)

    def __add__(self, other):
        return Elem(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Elem(self.x - other.x, self.y - other.y)

    def scale(self, k) -> "Elem":
        return Elem(self.x * k, self.y * k)


RingElement = Elem


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _squarefree_part(n: int) -> tuple[int, int]:
    """Return (f, m) with n = f^2 * m and m squarefree."""
    f, m, p = 1, n, 2
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            f *= p
        p += 1
    return f, m


def _fundamental(disc: int) -> tuple[int, int]:
    """Split disc = f^2 * disc_K with disc_K fundamental."""
    f, m = _squarefree_part(-disc)
    m = -m
    if m % 4 == 1:
        return f, m
    # m = 2,3 mod 4 so the fundamental discriminant is 4m
    if f % 2:
        raise IdealError(f"{disc} is not a discriminant")
    return f // 2, 4 * m


class Ring:
    """The order O = Z[tau] of a negative discriminant.

    ``tau = (1 + sqrt(disc))/2`` when disc = 1 (mod 4), else ``sqrt(disc/4)``;
    ``tau^2 = t*tau - n`` with trace ``t`` and norm ``n``.
    """

    def __init__(self, disc: int):
        if disc >= 0:
            raise IdealError(f"discriminant must be negative, got {disc}")
        if disc % 4 not in (0, 1):
            raise IdealError(f"discriminant {disc} is not 0 or 1 mod 4")
        self.disc = disc
        self.conductor, self.fundamental_disc = _fundamental(disc)
        if disc % 4 == 1:
            self.t, self.n = 1, (1 - disc) // 4
        else:
            self.t, self.n = 0, -disc // 4
        self.d = -disc  # radicand for the exact complex tower

    def __repr__(self):
        return f"Ring({self.disc})"

    def __eq__(self, other):
        return isinstance(other, Ring) and other.disc == self.disc

    def __hash__(self):
        return hash(("Ring", self.disc))

    @property
    def is_maximal(self) -> bool:
        return self.conductor == 1

    @cached_property
    def tau(self) -> QuadComplex:
        return self.to_qc(Elem(0, 1))

    @cached_property
    def one(self) -> Elem:
        return Elem(1, 0)

    @cached_property
    def units(self) -> list[Elem]:
        return [e for e in self.elements_of_norm_at_most(1) if not e.is_zero()]

    # -- element arithmetic
    def mul(self, u: Elem, v: Elem) -> Elem:
        return Elem(
            u.x * v.x - self.n * u.y * v.y,
            u.x * v.y + u.y * v.x + self.t * u.y * v.y,
        )

    def conj(self, u: Elem) -> Elem:
        return Elem(u.x + self.t * u.y, -u.y)

    def norm(self, u: Elem):
        return u.x * u.x + self.t * u.x * u.y + self.n * u.y * u.y

    def inner(self, u: Elem, v: Elem):
        """Real inner product Re(u * conj(v)) of the plane embedding."""
        return (
            u.x * v.x
            + Fraction(self.t, 2) * (u.x * v.y + u.y * v.x)
            + self.n * u.y * v.y
        )

    def div(self, u: Elem, v: Elem) -> Elem:
        nv = self.norm(v)
        if nv == 0:
            raise ZeroDivisionError("division by zero in K")
        w = self.mul(u, self.conj(v))
        return Elem(Fraction(w.x) / nv, Fraction(w.y) / nv)

    def divides(self, v: Elem, u: Elem) -> bool:
        """True iff ``u / v`` lies in O."""
        return self.div(u, v).is_integral()

    def exact_div(self, u: Elem, v: Elem) -> Elem:
        q = self.div(u, v)
        if not q.is_integral():
            raise IdealError(f"{u} is not divisible by {v}")
        return Elem(int(q.x), int(q.y))

    def to_qc(self, u: Elem) -> QuadComplex:
        x, y = Fraction(u.x), Fraction(u.y)
        return QuadComplex(
            QuadReal(self.d, x + y * self.t / 2, Fraction(0)),
            QuadReal(self.d, Fraction(0), y / 2),
        )

    def to_complex(self, u: Elem) -> complex:
        return complex(float(u.x) + float(u.y) * self.t / 2, float(u.y) * math.sqrt(self.d) / 2)

    def mul_qc(self, u: Elem, w: QuadComplex) -> QuadComplex:
        return self.to_qc(u) * w

    def elements_of_norm_at_most(self, bound) -> list[Elem]:
        """All ring elements with norm <= bound, sorted by (norm, |y|, y, |x|, x)."""
        # n y^2 - t^2 y^2/4 = d y^2 / 4 <= norm
        ymax = math.isqrt(int(4 * bound) // self.d) + 1
        out = []
        for y in range(-ymax, ymax + 1):
            cx = -Fraction(self.t * y, 2)
            rem = bound - Fraction(self.d * y * y, 4)
            if rem < 0:
                continue
            w = math.isqrt(int(rem)) + 2
            for x in range(math.floor(cx) - w, math.ceil(cx) + w + 1):
                e = Elem(x, y)
                if self.norm(e) <= bound:
                    out.append(e)
        out.sort(key=lambda e: (self.norm(e), abs(e.y), -e.y, abs(e.x), -e.x))
        return out

    def format_elem(self, u: Elem) -> str:
        x, y = u.x, u.y
        if y == 0:
            return str(x)
        ty = "τ" if y == 1 else ("-τ" if y == -1 else f"{y}τ")
        if x == 0:
            return ty
        return f"{x}{'+' if y > 0 else ''}{ty}"


def ring_from_discriminant(disc: int) -> Ring:
    return Ring(disc)


# ---------------------------------------------------------------- lattices


def _hnf_int(vecs: Iterable[tuple[int, int]]) -> tuple[int, int, int]:
    """Integer HNF (a0, b0, c0) of the Z-span of 2-vectors (must be full rank)."""
    pivot = None
    a = 0
    for x, y in vecs:
        if y == 0:
            a = math.gcd(a, x)
            continue
        if pivot is None:
            pivot = (x, y) if y > 0 else (-x, -y)
            continue
        px, py = pivot
        g, s, t = _xgcd(py, y)
        if g < 0:
            g, s, t = -g, -s, -t
        pivot = (s * px + t * x, g)
        a = math.gcd(a, (y // g) * px - (py // g) * x)
    if pivot is None or a == 0:
        raise ZeroModuleError("lattice is not of full rank")
    return a, pivot[0] % a, pivot[1]


def _hnf_rational(vecs) -> tuple[Fraction, Fraction, Fraction]:
    vecs = [(Fraction(x), Fraction(y)) for x, y in vecs]
    den = 1
    for x, y in vecs:
        den = math.lcm(den, x.denominator, y.denominator)
    a, b, c = _hnf_int((int(x * den), int(y * den)) for x, y in vecs)
    return Fraction(a, den), Fraction(b, den), Fraction(c, den)


@dataclass(frozen=True)
class IdealLattice:
    """Rank-2 lattice ``Z*a0 + Z*(b0 + c0*tau)`` in K (rational HNF)."""

    ring: Ring
    a0: Fraction
    b0: Fraction
    c0: Fraction

    @classmethod
    def from_zspan(cls, ring: Ring, vecs) -> "IdealLattice":
        vecs = [tuple(v) for v in vecs]
        if all(x == 0 and y == 0 for x, y in vecs):
            raise ZeroModuleError("all generators are zero")
        return cls(ring, *_hnf_rational(vecs))

    @property
    def basis(self) -> tuple[Elem, Elem]:
        return Elem(self.a0, Fraction(0)), Elem(self.b0, self.c0)

    @property
    def norm(self) -> Fraction:
        return self.a0 * self.c0

    def coords(self, e: Elem) -> tuple[Fraction, Fraction]:
        beta = Fraction(e.y) / self.c0
        alpha = (Fraction(e.x) - beta * self.b0) / self.a0
        return alpha, beta

    def __contains__(self, e: Elem) -> bool:
        a, b = self.coords(e)
        return a.denominator == 1 and b.denominator == 1

    def reduce(self, e: Elem) -> Elem:
        """Canonical representative of ``e`` modulo the lattice (HNF fundamental cell)."""
        alpha, beta = self.coords(e)
        fb, fa = math.floor(beta), math.floor(alpha)
        x = Fraction(e.x) - fb * self.b0 - fa * self.a0
        y = Fraction(e.y) - fb * self.c0
        if x.denominator == 1 and y.denominator == 1:
            return Elem(int(x), int(y))
        return Elem(x, y)

    def contains_lattice(self, other: "IdealLattice") -> bool:
        return all(g in self for g in other.basis)

    def is_integral(self) -> bool:
        return all(g.is_integral() for g in self.basis)

    def is_ideal(self) -> bool:
        tau = Elem(0, 1)
        return all(self.ring.mul(tau, g) in self for g in self.basis)

    def scale(self, k) -> "IdealLattice":
        """The lattice ``k * self`` for k in K (Elem) or Q."""
        if isinstance(k, Elem):
            return IdealLattice.from_zspan(self.ring, [self.ring.mul(k, g) for g in self.basis])
        return IdealLattice.from_zspan(self.ring, [g.scale(Fraction(k)) for g in self.basis])

    def __mul__(self, other: "IdealLattice") -> "IdealLattice":
        r = self.ring
        return IdealLattice.from_zspan(r, [r.mul(g, h) for g in self.basis for h in other.basis])

    def __add__(self, other: "IdealLattice") -> "IdealLattice":
        return IdealLattice.from_zspan(self.ring, list(self.basis) + list(other.basis))

    def conj(self) -> "IdealLattice":
        return IdealLattice.from_zspan(self.ring, [self.ring.conj(g) for g in self.basis])

    def is_unit_ideal(self) -> bool:
        return self.a0 == 1 and self.b0 == 0 and self.c0 == 1

    def is_invertible(self) -> bool:
        return self * self.conj() == unit_ideal(self.ring).scale(self.norm)

    def reduced_basis(self) -> tuple[Elem, Elem]:
        return gauss_reduce(self.ring, *self.basis)

    def index_in(self, other: "IdealLattice") -> Fraction:
        return self.norm / other.norm

    def to_json(self) -> dict:
        den = math.lcm(self.a0.denominator, self.b0.denominator, self.c0.denominator)
        return {
            "scale": str(Fraction(1, den)),
            "a0": int(self.a0 * den),
            "b0": int(self.b0 * den),
            "c0": int(self.c0 * den),
            "norm": str(self.norm),
        }

    @classmethod
    def from_json(cls, ring: Ring, obj) -> "IdealLattice":
        s = Fraction(obj["scale"])
        lat = cls.from_zspan(ring, [(s * obj["a0"], 0), (s * obj["b0"], s * obj["c0"])])
        if "norm" in obj and Fraction(obj["norm"]) != lat.norm:
            raise IdealError("serialized norm does not match basis")
        return lat

    def describe(self) -> str:
        return f"<{self.a0}, {self.b0}+{self.c0}τ> (norm {self.norm})"


def unit_ideal(ring: Ring) -> IdealLattice:
    return IdealLattice(ring, Fraction(1), Fraction(0), Fraction(1))


def ideal_from_generators(ring: Ring, gens) -> IdealLattice:
    """HNF of the O-module generated by ``gens`` (elements of K)."""
    tau = Elem(0, 1)
    vecs = []
    for g in gens:
        g = Elem(Fraction(g.x), Fraction(g.y))
        vecs.append(g)
        vecs.append(ring.mul(tau, g))
    return IdealLattice.from_zspan(ring, vecs)


def principal_ideal(ring: Ring, g: Elem) -> IdealLattice:
    return ideal_from_generators(ring, [g])


def gauss_reduce(ring: Ring, u: Elem, v: Elem) -> tuple[Elem, Elem]:
    """Lagrange-Gauss reduction under the norm form; returns (shortest, second)."""
    nu, nv = ring.norm(u), ring.norm(v)
    if nv < nu:
        u, v, nu, nv = v, u, nv, nu
    while True:
        m = round(Fraction(ring.inner(u, v)) / nu)
        if m:
            v = Elem(v.x - m * u.x, v.y - m * u.y)
            nv = ring.norm(v)
        if nv >= nu:
            return u, v
        u, v, nu, nv = v, u, nv, nu


def shortest_vector(lat: IdealLattice) -> Elem:
    return lat.reduced_basis()[0]


def _require_invertible(lat: IdealLattice) -> None:
    if not lat.is_invertible():
        raise NonInvertibleIdealError(f"ideal {lat.describe()} is not invertible")


def is_reduced(lat: IdealLattice) -> bool:
    """Integral ideal of minimal norm in its class: min |alpha|^2 equals norm^2."""
    if not lat.is_integral():
        return False
    _require_invertible(lat)
    sv = shortest_vector(lat)
    return lat.ring.norm(sv) == lat.norm * lat.norm


def is_reduced_or_false(lat: IdealLattice) -> bool:
    """:func:`is_reduced`, treating non-invertible ideals as not reduced."""
    try:
        return is_reduced(lat)
    except NonInvertibleIdealError:
        return False


def ideal_inverse(lat: IdealLattice) -> IdealLattice:
    _require_invertible(lat)
    inv = lat.conj().scale(1 / lat.norm)
    if not (lat * inv).is_unit_ideal():
        raise NonInvertibleIdealError(f"ideal {lat.describe()} is not invertible")
    return inv


def quotient_representatives(big: IdealLattice, small: IdealLattice) -> list[Elem]:
    """One element of ``big`` per coset of ``big / small`` (small must be a sublattice)."""
    coords = [big.coords(g) for g in small.basis]
    for a, b in coords:
        if a.denominator != 1 or b.denominator != 1:
            raise IdealError("not a sublattice")
    A, _, C = _hnf_int((int(a), int(b)) for a, b in coords)
    g1, g2 = big.basis
    return [
        Elem(i * g1.x + j * g2.x, i * g1.y + j * g2.y)
        for j in range(C)
        for i in range(A)
    ]


def integral_ideals_of_norm(ring: Ring, m: int) -> list[IdealLattice]:
    out = []
    for c0 in range(1, m + 1):
        if m % c0:
            continue
        a0 = m // c0
        if a0 % c0:
            continue
        for b0 in range(0, a0, c0):
            lat = IdealLattice(ring, Fraction(a0), Fraction(b0), Fraction(c0))
            if lat.is_ideal():
                out.append(lat)
    return out


def enumerate_reduced_ideals_meeting(ring: Ring, B) -> list[IdealLattice]:
    """Invertible reduced integral ideals containing at least one element of B."""
    B = [Elem(*b) for b in B]
    if not B:
        raise IdealError("B must be nonempty")
    if any(b.is_zero() for b in B):
        raise IdealError("0 may not belong to B")
    norms = {int(ring.norm(b)) for b in B}
    out = []
    for m in range(1, max(norms) + 1):
        if not any(nb % m == 0 for nb in norms):
            continue
        for lat in integral_ideals_of_norm(ring, m):
            if any(b in lat for b in B) and is_reduced_or_false(lat):
                out.append(lat)
    return out


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class IntMatrix2:
    """``[[p, pp], [q, qp]]``: left column is the current convergent (p, q)."""

    p: Elem
    pp: Elem
    q: Elem
    qp: Elem

    @classmethod
    def identity(cls) -> "IntMatrix2":
        return cls(Elem(1, 0), Elem(0, 0), Elem(0, 0), Elem(1, 0))

    def det(self, ring: Ring) -> Elem:
        return ring.mul(self.p, self.qp) - ring.mul(self.pp, self.q)

    def column(self, i: int) -> tuple[Elem, Elem]:
        if i == 1:
            return self.p, self.q
        if i == 2:
            return self.pp, self.qp
        raise ValueError("column index must be 1 or 2")

    def to_json(self) -> list:
        return [[self.p.to_json(), self.pp.to_json()], [self.q.to_json(), self.qp.to_json()]]


def column_ideal(ring: Ring, M: IntMatrix2, i: int) -> IdealLattice:
    a, b = M.column(i)
    if a.is_zero() and b.is_zero():
        raise ZeroModuleError(f"column {i} is zero")
    return ideal_from_generators(ring, [a, b])


def step_matrix(ring: Ring, M: IntMatrix2, a: Elem, b: Elem, b_prev: Elem) -> IntMatrix2:
    """``M * S(a/b', b/b')``; raises IdealError if the product is not integral."""
    np_ = ring.exact_div(ring.mul(a, M.p) + ring.mul(b, M.pp), b_prev)
    nq = ring.exact_div(ring.mul(a, M.q) + ring.mul(b, M.qp), b_prev)
    return IntMatrix2(np_, M.p, nq, M.q)


def step_is_integral(ring: Ring, M: IntMatrix2, a: Elem, b: Elem, b_prev: Elem) -> bool:
    return ring.divides(b_prev, ring.mul(a, M.p) + ring.mul(b, M.pp)) and ring.divides(
        b_prev, ring.mul(a, M.q) + ring.mul(b, M.qp)
    )


@dataclass(frozen=True)
class IntegralityCoset:
    shift: Elem
    lattice: IdealLattice


def solve_integrality_coset(
    ring: Ring, M: IntMatrix2, b_prev: Elem, b: Elem
) -> Optional[IntegralityCoset]:
    """All ``v`` in O with ``M * S(v/b', b/b')`` integral, as ``shift + b' * (O : col1)``.

    ``(O : col1)`` is the inverse of the left column ideal whenever that ideal
    is invertible.

    Returns None when ``b`` is outside the left column ideal, in which case no
    such ``v`` exists.
    """
    col = column_ideal(ring, M, 1)
    if ring.norm(M.det(ring)) != ring.norm(b_prev):
        raise IdealError("det M must equal +-b'")
    if b not in col:
        return None
    lat = colon_ideal(col).scale(b_prev)
    for r in quotient_representatives(unit_ideal(ring), lat):
        r = Elem(int(r.x), int(r.y))
        if step_is_integral(ring, M, r, b, b_prev):
            return IntegralityCoset(r, lat)
    raise IdealError("no integral shift found although b lies in the column ideal")


def lattice_points_near(
    ring: Ring, basis: tuple[Elem, Elem], offset: Elem, center: complex, radius: float
) -> list[Elem]:
    """Points ``offset + i*u + j*w`` within ``radius`` of ``center`` (float screen, generous)."""
    u, w = basis
    cu, cw = ring.to_complex(u), ring.to_complex(w)
    c = center - ring.to_complex(offset)
    uu = abs(cu)
    height = abs((cw * cu.conjugate()).imag) / uu
    det = (cu.conjugate() * cw).imag
    beta_c = (cu.conjugate() * c).imag / det
    slack = 1e-9 * (1 + radius)
    jr = (radius + slack) / height
    out = []
    for j in range(math.floor(beta_c - jr) - 1, math.ceil(beta_c + jr) + 2):
        rest = c - j * cw
        alpha = (rest * cu.conjugate()).real / (uu * uu)
        ir = (radius + slack) / uu
        for i in range(math.floor(alpha - ir) - 1, math.ceil(alpha + ir) + 2):
            if abs(rest - i * cu) <= radius + slack:
                out.append(Elem(offset.x + i * u.x + j * w.x, offset.y + i * u.y + j * w.y))
    return out


# ---------------------------------------------------------------- colon ideals


def _dual(lat: IdealLattice) -> list[tuple[Fraction, Fraction]]:
    """Dual basis under the coordinate pairing x1*x2 + y1*y2."""
    # basis rows [[a0, 0], [b0, c0]]; dual rows are columns of the inverse
    det = lat.a0 * lat.c0
    return [(1 / lat.a0, -lat.b0 / det), (Fraction(0), 1 / lat.c0)]


def lattice_intersection(l1: IdealLattice, l2: IdealLattice) -> IdealLattice:
    ring = l1.ring
    dual_sum = IdealLattice.from_zspan(ring, _dual(l1) + _dual(l2))
    return IdealLattice.from_zspan(ring, _dual(dual_sum))


def colon_ideal(lat: IdealLattice) -> IdealLattice:
    """``(O : I) = {g in K : g*I in O}``; equals I^-1 when I is invertible."""
    ring = lat.ring
    o = unit_ideal(ring)
    out = None
    for g in lat.basis:
        part = o.scale(ring.div(Elem(1, 0), g)) if not g.is_zero() else None
        out = part if out is None else lattice_intersection(out, part)
    return out


def is_reduced_colon(lat: IdealLattice) -> bool:
    """Minimal norm in its class, for any integral ideal (invertible or not).

    gamma*I is integral exactly when gamma lies in (O : I), and its norm is
    |gamma|^2 N(I); so I is reduced iff (O : I) has no nonzero element of
    norm below 1.
    """
    if not lat.is_integral():
        return False
    sv = shortest_vector(colon_ideal(lat))
    return lat.ring.norm(sv) >= 1
