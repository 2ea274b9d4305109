"""Continued fraction expansion over an imaginary quadratic order with denominators from B.

Each step picks ``(a, b)`` with ``b`` in B and ``a`` in O close to ``b * z_{n-1}``,
subject to the new matrix ``M * S(a/b', b/b')`` being integral with a reduced left
column.  Two backends share the code path: exact (``QuadComplex``) and
fixed-precision float (mpmath).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath

from .covering import AdmissibleParams
from .numerics import (
    DEFAULT_PRECISION,
    DEFAULT_SAFETY_MARGIN,
    ComplexValue,
    FloatComplex,
    QuadComplex,
    QuadReal,
    format_complex,
)
from .ring_ideals import (
    Elem,
    IntMatrix2,
    Ring,
    ideal_from_generators,
    is_reduced_colon,
    lattice_points_near,
    solve_integrality_coset,
    step_is_integral,
    step_matrix,
)


class ExpansionError(ValueError):
    pass


class InvalidScriptError(ExpansionError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"scripted coefficient #{index + 1} rejected: {reason}")
        self.index = index
        self.reason = reason


class PrecisionExhaustedError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Coefficient:
    a: Elem
    b: Elem

    def to_json(self) -> dict:
        return {"a": self.a.to_json(), "b": self.b.to_json()}

    @classmethod
    def from_json(cls, obj) -> "Coefficient":
        return cls(Elem.from_json(obj["a"]), Elem.from_json(obj["b"]))


# ---------------------------------------------------------------- policies


@dataclass(frozen=True)
class GreedyQuality:
    """Smallest ``|b z_{n-1} - a|``; ties by ``|b|^2`` then coordinates of ``a``."""

    name = "greedy"


@dataclass(frozen=True)
class FirstFound:
    """First validated candidate in enumeration order."""

    name = "first"


@dataclass(frozen=True)
class Scripted:
    coefficients: tuple[Coefficient, ...]
    name = "script"


Policy = Union[GreedyQuality, FirstFound, Scripted]


@dataclass(frozen=True)
class OpenDiscParams:
    """Strict test ``|b z_n - a| < |b'|`` with no fixed epsilon; for state exploration."""

    B: tuple[Elem, ...]
    strict = True

    def disc_bound(self) -> Fraction:
        return Fraction(1)


# ---------------------------------------------------------------- state


@dataclass(frozen=True)
class TrailEntry:
    n: int
    coefficient: Coefficient
    p: Elem
    q: Elem
    quality: float
    quality_sq: Optional[QuadReal]  # exact |q z - p|^2, None in float mode
    z_prev: ComplexValue
    z_n: Optional[ComplexValue]  # None once z = p/q exactly


@dataclass(frozen=True)
class ExpansionState:
    ring: Ring
    M: IntMatrix2
    b_prev: Elem
    n: int
    z: ComplexValue
    z_n: Optional[ComplexValue]
    trail: tuple[TrailEntry, ...] = ()
    safety_margin: Fraction = DEFAULT_SAFETY_MARGIN

    @property
    def exact(self) -> bool:
        return isinstance(self.z, QuadComplex)

    @property
    def p(self) -> Elem:
        return self.M.p

    @property
    def q(self) -> Elem:
        return self.M.q


def _to_value(ring: Ring, z) -> ComplexValue:
    if isinstance(z, (QuadComplex, FloatComplex)):
        if isinstance(z, QuadComplex) and z.d != ring.d:
            raise ExpansionError(f"radicand {z.d} does not match |disc| = {ring.d}")
        return z
    if isinstance(z, (complex, float, int)):
        return FloatComplex(mpmath.mpc(z), DEFAULT_PRECISION)
    raise TypeError(f"unsupported input type {type(z).__name__}")


def initial_state(
    ring: Ring, z, safety_margin: Fraction = DEFAULT_SAFETY_MARGIN
) -> ExpansionState:
    z = _to_value(ring, z)
    return ExpansionState(ring, IntMatrix2.identity(), Elem(1, 0), 0, z, z, (), safety_margin)


def _float_elem(ring: Ring, e: Elem, ctx) -> mpmath.mpc:
    return ctx.mpc(e.x + ctx.mpf(e.y * ring.t) / 2, e.y * ctx.sqrt(ring.d) / 2)


def _mobius_inverse(state: ExpansionState, M: IntMatrix2) -> Optional[ComplexValue]:
    """``M^-1(z) = (q' z - p') / (p - q z)``; None when the denominator vanishes."""
    ring, z = state.ring, state.z
    if isinstance(z, QuadComplex):
        den = ring.to_qc(M.p) - ring.mul_qc(M.q, z)
        if den.is_zero():
            return None
        return (ring.mul_qc(M.qp, z) - ring.to_qc(M.pp)) / den
    ctx = z.ctx()
    zv = ctx.mpc(z.value)
    den = _float_elem(ring, M.p, ctx) - _float_elem(ring, M.q, ctx) * zv
    if den == 0:
        return None
    num = _float_elem(ring, M.qp, ctx) * zv - _float_elem(ring, M.pp, ctx)
    return FloatComplex(num / den, z.prec)


def _quality(state: ExpansionState, p: Elem, q: Elem) -> tuple[float, Optional[QuadReal]]:
    ring, z = state.ring, state.z
    if isinstance(z, QuadComplex):
        sq = (ring.mul_qc(q, z) - ring.to_qc(p)).norm_sq()
        return math.sqrt(max(float(sq), 0.0)), sq
    ctx = z.ctx()
    w = _float_elem(ring, q, ctx) * ctx.mpc(z.value) - _float_elem(ring, p, ctx)
    return float(abs(w)), None


def _dist_sq(state: ExpansionState, a: Elem, b: Elem):
    """``|b z_n - a|^2``: QuadReal in exact mode, mpf otherwise."""
    ring, zn = state.ring, state.z_n
    if isinstance(zn, QuadComplex):
        return (ring.mul_qc(b, zn) - ring.to_qc(a)).norm_sq()
    ctx = zn.ctx()
    w = _float_elem(ring, b, ctx) * ctx.mpc(zn.value) - _float_elem(ring, a, ctx)
    return ctx.re(w) ** 2 + ctx.im(w) ** 2


def _as_complex(zn: ComplexValue) -> complex:
    if isinstance(zn, QuadComplex):
        return complex(zn)
    return complex(zn.value)


def _new_column_reduced(state: ExpansionState, a: Elem, b: Elem) -> bool:
    ring, M = state.ring, state.M
    new = step_matrix(ring, M, a, b, state.b_prev)
    return is_reduced_colon(ideal_from_generators(ring, [new.p, new.q]))


def _sorted_B(ring: Ring, params: AdmissibleParams) -> list[Elem]:
    return sorted(params.B, key=lambda b: ring.norm(b))


class _Membership:
    """Closed-disc test ``|b z_n - a|^2 <= eps^2 |b'|^2`` for one step."""

    def __init__(self, state: ExpansionState, params: AdmissibleParams):
        self.state = state
        self.bound = params.disc_bound() * state.ring.norm(state.b_prev)
        self.strict = getattr(params, "strict", False)
        self.borderline = 0
        if not state.exact:
            ctx = state.z_n.ctx()
            self.ctx = ctx
            self.hi = ctx.mpf(self.bound.numerator) / self.bound.denominator
            shrink = params.disc_bound() - state.safety_margin
            shrunk = shrink * state.ring.norm(state.b_prev)
            self.lo = ctx.mpf(shrunk.numerator) / shrunk.denominator

    @property
    def radius(self) -> float:
        return math.sqrt(float(self.bound))

    def __call__(self, a: Elem, b: Elem) -> bool:
        d2 = _dist_sq(self.state, a, b)
        if self.state.exact:
            return d2 < self.bound if self.strict else d2 <= self.bound
        if d2 <= self.lo:
            return True
        if d2 <= self.hi:
            self.borderline += 1
        return False

    def dist_key(self, a: Elem, b: Elem):
        return _dist_sq(self.state, a, b)


def _compare_dist(x, y) -> int:
    if isinstance(x, QuadReal):
        return x.compare(y)
    return (x > y) - (x < y)


def _order_candidates(cands: list[tuple]) -> list[Elem]:
    def cmp(u, v):
        c = _compare_dist(u[1], v[1])
        if c:
            return c
        ku, kv = (u[0].x, u[0].y), (v[0].x, v[0].y)
        return (ku > kv) - (ku < kv)

    return [a for a, _ in sorted(cands, key=functools.cmp_to_key(cmp))]


def _finish(state: ExpansionState, found: list[Coefficient], member: _Membership) -> list[Coefficient]:
    if not found and member.borderline:
        raise PrecisionExhaustedError(
            f"step {state.n + 1}: every candidate lies within the safety margin of its disc"
        )
    return found


def candidate_coefficients(state: ExpansionState, params: AdmissibleParams) -> list[Coefficient]:
    """All valid next coefficients, ordered by b's norm then by ``|b z_n - a|``.

    Uses the integrality coset ``shift + b' (O : col1)`` and only looks at the
    few coset points near ``b z_n``.
    """
    if state.z_n is None:
        return []
    ring = state.ring
    member = _Membership(state, params)
    out: list[Coefficient] = []
    zc = _as_complex(state.z_n)
    for b in _sorted_B(ring, params):
        coset = solve_integrality_coset(ring, state.M, state.b_prev, b)
        if coset is None:
            continue
        basis = coset.lattice.reduced_basis()
        basis = tuple(Elem(int(e.x), int(e.y)) for e in basis)
        center = zc * ring.to_complex(b)
        near = lattice_points_near(ring, basis, coset.shift, center, member.radius)
        ok = [
            (a, member.dist_key(a, b))
            for a in near
            if member(a, b) and _new_column_reduced(state, a, b)
        ]
        out.extend(Coefficient(a, b) for a in _order_candidates(ok))
    return _finish(state, out, member)


def candidate_coefficients_bruteforce(
    state: ExpansionState, params: AdmissibleParams
) -> list[Coefficient]:
    """Same set as :func:`candidate_coefficients`, by scanning every ring element in each disc."""
    if state.z_n is None:
        return []
    ring = state.ring
    member = _Membership(state, params)
    out: list[Coefficient] = []
    zc = _as_complex(state.z_n)
    r = member.radius * (1 + 1e-9) + 1e-9
    half_sqrt_d = math.sqrt(ring.d) / 2
    for b in _sorted_B(ring, params):
        c = zc * ring.to_complex(b)
        ok = []
        # a = x + y*tau has imaginary part y*sqrt(d)/2 and real part x + t*y/2
        for y in range(math.floor((c.imag - r) / half_sqrt_d), math.ceil((c.imag + r) / half_sqrt_d) + 1):
            re0 = c.real - ring.t * y / 2
            for x in range(math.floor(re0 - r), math.ceil(re0 + r) + 1):
                a = Elem(x, y)
                if not member(a, b):
                    continue
                if not step_is_integral(ring, state.M, a, b, state.b_prev):
                    continue
                if _new_column_reduced(state, a, b):
                    ok.append((a, member.dist_key(a, b)))
        out.extend(Coefficient(a, b) for a in _order_candidates(ok))
    return _finish(state, out, member)


def validate_coefficient(
    state: ExpansionState, params: AdmissibleParams, c: Coefficient
) -> Optional[str]:
    """Reason ``c`` fails the disc, integrality or reducedness test, or None if it passes."""
    ring = state.ring
    if c.b not in params.B:
        return f"b = {ring.format_elem(c.b)} is not in B"
    if state.z_n is None:
        return "expansion already terminated"
    if not _Membership(state, params)(c.a, c.b):
        return "a is outside the disc around b*z_n"
    if not step_is_integral(ring, state.M, c.a, c.b, state.b_prev):
        return "M*S(a/b', b/b') is not integral"
    if not _new_column_reduced(state, c.a, c.b):
        return "new left column ideal is not reduced"
    return None


def apply_coefficient(state: ExpansionState, c: Coefficient) -> ExpansionState:
    ring = state.ring
    M = step_matrix(ring, state.M, c.a, c.b, state.b_prev)
    z_next = _mobius_inverse(state, M)
    quality, quality_sq = _quality(state, M.p, M.q)
    entry = TrailEntry(state.n + 1, c, M.p, M.q, quality, quality_sq, state.z_n, z_next)
    return replace(state, M=M, b_prev=c.b, n=state.n + 1, z_n=z_next, trail=state.trail + (entry,))


def check_termination(state: ExpansionState) -> bool:
    """True iff ``z = p_n / q_n`` exactly; always False in float mode."""
    if not state.exact or state.n == 0:
        return False
    ring = state.ring
    return (ring.mul_qc(state.q, state.z) - ring.to_qc(state.p)).is_zero()


def _greedy_key(state: ExpansionState, c: Coefficient):
    return (_dist_sq(state, c.a, c.b), state.ring.norm(c.b), c.a.x, c.a.y)


def choose(state: ExpansionState, params: AdmissibleParams, policy: Policy) -> Coefficient:
    if isinstance(policy, Scripted):
        idx = state.n
        c = policy.coefficients[idx]
        reason = validate_coefficient(state, params, c)
        if reason is not None:
            raise InvalidScriptError(idx, reason)
        return c
    cands = candidate_coefficients(state, params)
    if not cands:
        raise ExpansionError(
            f"no admissible coefficient at step {state.n + 1}; is B admissible with this eps^2?"
        )
    if isinstance(policy, FirstFound):
        return cands[0]

    def cmp(u, v):
        ku, kv = _greedy_key(state, u), _greedy_key(state, v)
        c0 = _compare_dist(ku[0], kv[0])
        if c0:
            return c0
        return (ku[1:] > kv[1:]) - (ku[1:] < kv[1:])

    return min(cands, key=functools.cmp_to_key(cmp))


@dataclass(frozen=True)
class Expansion:
    ring: Ring
    z: ComplexValue
    params: AdmissibleParams
    policy: str
    final: ExpansionState
    terminated: bool

    @property
    def trail(self) -> tuple[TrailEntry, ...]:
        return self.final.trail

    @property
    def steps(self) -> int:
        return self.final.n

    @property
    def convergents(self) -> list[tuple[Elem, Elem]]:
        return [(e.p, e.q) for e in self.trail]

    @property
    def coefficients(self) -> list[Coefficient]:
        return [e.coefficient for e in self.trail]

    def records(self) -> list[dict]:
        out = []
        for e in self.trail:
            out.append(
                {
                    "n": e.n,
                    "a": e.coefficient.a.to_json(),
                    "b": e.coefficient.b.to_json(),
                    "p": e.p.to_json(),
                    "q": e.q.to_json(),
                    "quality": e.quality,
                    "z_prev": format_complex(e.z_prev),
                    "z_n": None if e.z_n is None else format_complex(e.z_n),
                }
            )
        return out


def expand(
    ring: Ring,
    z,
    N: int,
    params: AdmissibleParams,
    policy: Policy = GreedyQuality(),
    safety_margin: Fraction = DEFAULT_SAFETY_MARGIN,
) -> Expansion:
    """Run up to ``N`` steps, stopping early once ``z = p_n/q_n`` (exact mode)."""
    if N < 1:
        raise ExpansionError("N must be positive")
    state = initial_state(ring, z, safety_margin)
    if isinstance(policy, Scripted):
        N = min(N, len(policy.coefficients))
    terminated = False
    for _ in range(N):
        state = apply_coefficient(state, choose(state, params, policy))
        if check_termination(state):
            terminated = True
            break
        if state.z_n is None:
            # float mode hit p/q to working precision; no z_n to continue from
            break
    return Expansion(ring, state.z, params, policy.name, state, terminated)


# ---------------------------------------------------------------- rendering


def _paren(s: str) -> str:
    return s if s.lstrip("-").isalnum() else f"({s})"


def render_cf(expansion: Expansion) -> str:
    """``a1/b1 + (b0/b1)/(a2/b2 + (b1/b2)/(...))`` for the coefficients of a run."""
    coeffs = expansion.coefficients
    if not coeffs:
        raise ExpansionError("empty expansion")
    fmt = expansion.ring.format_elem
    bs = [Elem(1, 0)] + [c.b for c in coeffs]
    text = f"{_paren(fmt(coeffs[-1].a))}/{_paren(fmt(coeffs[-1].b))}"
    for k in range(len(coeffs) - 1, 0, -1):
        c = coeffs[k - 1]
        head = f"{_paren(fmt(c.a))}/{_paren(fmt(c.b))}"
        num = f"{_paren(fmt(bs[k - 1]))}/{_paren(fmt(bs[k]))}"
        text = f"{head} + ({num})/({text})"
    return text


def evaluate_cf(ring: Ring, coeffs: Sequence[Coefficient]) -> Elem:
    """Bottom-up value of the generalized continued fraction, an element of K."""
    bs = [Elem(1, 0)] + [c.b for c in coeffs]
    val = ring.div(coeffs[-1].a, coeffs[-1].b)
    for k in range(len(coeffs) - 1, 0, -1):
        c = coeffs[k - 1]
        tail = ring.div(ring.div(bs[k - 1], bs[k]), val)
        val = ring.div(c.a, c.b) + tail
    return Elem(Fraction(val.x), Fraction(val.y))
