"""Bound checks on finished expansions, a brute-force best-approximation oracle,
and exhaustive exploration of the expansion states of quadratic inputs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import mpmath
import numpy as np

from .cfrac import (
    Coefficient,
    Expansion,
    ExpansionState,
    OpenDiscParams,
    apply_coefficient,
    candidate_coefficients,
    check_termination,
    initial_state,
)
from .covering import AdmissibleParams
from .numerics import FloatComplex, QuadComplex
from .ring_ideals import Elem, IntMatrix2, Ring, column_ideal, is_reduced_colon, principal_ideal

_WORK_PREC = 160


class InsufficientOracleBound(ValueError):
    pass


class GraphNotClosedError(ValueError):
    pass


# ---------------------------------------------------------------- bound report


@dataclass(frozen=True)
class BoundCheck:
    name: str
    n: int
    lhs: float
    rhs: float
    slack: float  # rhs - lhs for upper bounds, lhs - rhs for lower bounds
    passed: bool


@dataclass
class BoundReport:
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.passed]

    def names(self) -> set[str]:
        return {c.name for c in self.checks}

    def summary(self) -> dict:
        by: dict[str, dict] = {}
        for c in self.checks:
            s = by.setdefault(c.name, {"checked": 0, "violations": 0, "min_slack": math.inf})
            s["checked"] += 1
            s["violations"] += 0 if c.passed else 1
            s["min_slack"] = min(s["min_slack"], c.slack)
        return by

    def add(self, name: str, n: int, lhs, rhs, upper: bool, strict: bool = True) -> None:
        lhs_f, rhs_f = float(lhs), float(rhs)
        if upper:
            ok = lhs < rhs if strict else lhs <= rhs
            slack = rhs_f - lhs_f
        else:
            ok = lhs > rhs if strict else lhs >= rhs
            slack = lhs_f - rhs_f
        self.checks.append(BoundCheck(name, n, lhs_f, rhs_f, slack, bool(ok)))

    def add_flag(self, name: str, n: int, ok: bool) -> None:
        self.checks.append(BoundCheck(name, n, float(ok), 1.0, 0.0, bool(ok)))


def _mpq(v) -> mpmath.mpf:
    v = Fraction(v)
    return mpmath.mpf(v.numerator) / v.denominator


def _mp_elem(ring: Ring, e: Elem) -> mpmath.mpc:
    y = _mpq(e.y)
    return mpmath.mpc(_mpq(e.x) + y * ring.t / 2, y * mpmath.sqrt(ring.d) / 2)


def _mp_value(z):
    if isinstance(z, QuadComplex):
        return z.to_mpc()
    if isinstance(z, FloatComplex):
        return mpmath.mpc(z.value)
    return mpmath.mpc(z)


def verify_expansion(expansion: Expansion, params: AdmissibleParams) -> BoundReport:
    """Check every per-step inequality of the expansion theory on one run.

    Exact identities (recurrences, determinant, contraction, ``|z_n| >= 1/eps``,
    column reducedness) are tested in exact arithmetic when the run is exact;
    the analytic sandwiches are evaluated with 160-bit floats.
    """
    ring = expansion.ring
    rep = BoundReport()
    trail = expansion.trail
    N = len(trail)
    eps_sq = params.disc_bound()
    exact = isinstance(expansion.z, QuadComplex)
    with mpmath.workprec(_WORK_PREC):
        eps = mpmath.sqrt(mpmath.mpf(eps_sq.numerator) / eps_sq.denominator)
        mu = mpmath.sqrt(params.mu_sq)
        one_m = 1 - eps**2
        z = _mp_value(expansion.z)
        # index 0 holds M_0 = Id: p_0 = 1, q_0 = 0, and p_{-1} = 0, q_{-1} = 1
        P = [Elem(0, 0), Elem(1, 0)] + [e.p for e in trail]
        Q = [Elem(1, 0), Elem(0, 0)] + [e.q for e in trail]
        Bn = [Elem(1, 0)] + [e.coefficient.b for e in trail]
        A = [None] + [e.coefficient.a for e in trail]
        Zs = [expansion.z] + [e.z_n for e in trail]

        def p(n):
            return P[n + 1]

        def q(n):
            return Q[n + 1]

        absq = [abs(_mp_elem(ring, q(n))) for n in range(N + 1)]
        err = [abs(_mp_elem(ring, q(n)) * z - _mp_elem(ring, p(n))) for n in range(N + 1)]
        zn = [None if Zs[n] is None else _mp_value(Zs[n]) for n in range(N + 1)]
        seen_values: list[tuple[Elem, Elem]] = []

        for n in range(1, N + 1):
            e = trail[n - 1]
            b_n, b_prev, a_n = Bn[n], Bn[n - 1], A[n]
            # recurrences and determinant
            pn = ring.div(ring.mul(a_n, p(n - 1)) + ring.mul(b_n, p(n - 2)), b_prev)
            qn = ring.div(ring.mul(a_n, q(n - 1)) + ring.mul(b_n, q(n - 2)), b_prev)
            rec_ok = pn == (Fraction(p(n).x), Fraction(p(n).y)) and qn == (Fraction(q(n).x), Fraction(q(n).y))
            rep.add_flag("recurrence", n, rec_ok)
            det = ring.mul(p(n), q(n - 1)) - ring.mul(p(n - 1), q(n))
            sign_b = b_n if n % 2 == 0 else -b_n
            rep.add_flag("determinant", n, det == sign_b)
            rep.add_flag("column_reduced", n, is_reduced_colon(column_ideal(ring, IntMatrix2(p(n), p(n - 1), q(n), q(n - 1)), 1)))
            # q_n != 0, a_{n+1} != 0, and each convergent is new
            rep.add_flag("q_nonzero", n, not q(n).is_zero())
            if n < N:
                rep.add_flag("a_next_nonzero", n, not A[n + 1].is_zero())
            repeat = any(
                ring.mul(p(n), qq) == ring.mul(pp, q(n)) for pp, qq in seen_values
            )
            rep.add_flag("no_repeat", n, not repeat)
            seen_values.append((p(n), q(n)))
            # contraction and |z_n| >= 1/eps
            prev_sq = trail[n - 2].quality_sq if n >= 2 else None
            if exact and e.quality_sq is not None:
                rhs_sq = eps_sq * (prev_sq if prev_sq is not None else 1)
                rep.add("contraction", n, e.quality_sq, rhs_sq, upper=True, strict=False)
            else:
                rep.add("contraction", n, err[n], eps * err[n - 1], upper=True, strict=False)
            rep.add("power_bound", n, err[n], eps**n, upper=True, strict=False)
            if Zs[n] is not None:
                if exact:
                    rep.add("zn_lower", n, Zs[n].norm_sq(), 1 / eps_sq, upper=False, strict=False)
                else:
                    rep.add("zn_lower", n, abs(zn[n]), 1 / eps, upper=False, strict=False)
            if Zs[n] is None:
                continue  # z = p_n/q_n exactly; the remaining bounds need z_n
            qq = _mp_elem(ring, q(n))
            quality = abs(qq) * err[n]
            # two-sided bound on |1 + q_{n-1}/(q_n z_n)|
            w = abs(1 + _mp_elem(ring, q(n - 1)) / (qq * zn[n]))
            rep.add("ratio_lower", n, w, one_m * math.sqrt(ring.norm(b_n)) / mu, upper=False)
            rep.add("ratio_upper", n, w, 4 * eps**2 * mu**2 / one_m**2, upper=True)
            # upper and lower sandwiches on |q_n (q_n z - p_n)|
            rep.add("quality_upper_zn", n, quality, mu / (one_m * abs(zn[n])), upper=True)
            rep.add("quality_lower_zn", n, quality, one_m**2 / (4 * eps**2 * mu**2 * abs(zn[n])), upper=False)
            if n < N:
                a_next = abs(_mp_elem(ring, A[n + 1]))
                b_next = abs(_mp_elem(ring, Bn[n + 1]))
                rep.add("quality_upper_next_a", n, quality, (1 + eps**2) * mu**2 / (one_m * a_next), upper=True)
                rep.add("quality_lower_next_a", n, quality, one_m**2 * b_next / (10 * eps**3 * mu**3 * a_next), upper=False)
                rep.add("quality_upper_q_ratio", n, quality, mu * absq[n] / (one_m * absq[n + 1]), upper=True)
                rep.add("quality_lower_q_ratio", n, quality, one_m**2 * absq[n] / (4 * eps**2 * mu**2 * absq[n + 1]), upper=False)
            # denominator growth against every earlier index, then the convergence rate
            for n2 in range(1, n):
                if zn[n2] is None:
                    continue
                rhs = one_m**2 * absq[n2] * abs(zn[n2]) / (4 * eps ** (n - n2) * mu**2)
                rep.add("growth_relative", n, absq[n], rhs, upper=False)
            rep.add("growth_absolute", n, absq[n], one_m**2 / (4 * eps**n * mu**2), upper=False)
            rep.add("convergence_rate", n, err[n] / abs(qq), 4 * eps ** (2 * n) * mu**2 / one_m**2, upper=True)
    return rep


# ---------------------------------------------------------------- best approximation


@dataclass(frozen=True)
class OracleRecord:
    p: Elem
    q: Elem
    quality: float  # |q (q z - p)|


def best_approx_oracle(z, ring: Ring, q_norm_bound: int) -> list[OracleRecord]:
    """For every ``q`` with ``0 < |q|^2 <= bound`` and the four ``p`` nearest ``q z``,
    the value ``|q (q z - p)|``; sorted ascending."""
    if q_norm_bound < 1:
        raise ValueError("q_norm_bound must be at least 1")
    zc = complex(_mp_value(z))
    qs = [e for e in ring.elements_of_norm_at_most(q_norm_bound) if not e.is_zero()]
    qx = np.array([float(e.x) for e in qs])
    qy = np.array([float(e.y) for e in qs])
    h = math.sqrt(ring.d) / 2
    qc = qx + qy * ring.t / 2 + 1j * qy * h
    w = qc * zc
    out = []
    y0 = np.floor(w.imag / h).astype(np.int64)
    for dy in (-1, 0, 1, 2):
        y = y0 + dy
        for dx in (-1, 0, 1):
            x = np.round(w.real - y * ring.t / 2).astype(np.int64) + dx
            pc = x + y * ring.t / 2 + 1j * y * h
            out.append((np.abs(w - pc), x, y))
    dist = np.stack([o[0] for o in out])
    xs = np.stack([o[1] for o in out])
    ys = np.stack([o[2] for o in out])
    order = np.argsort(dist, axis=0, kind="stable")[:4]
    recs = []
    for k in range(4):
        idx = order[k]
        cols = np.arange(len(qs))
        d = dist[idx, cols]
        px, py = xs[idx, cols], ys[idx, cols]
        for i, qe in enumerate(qs):
            recs.append(OracleRecord(Elem(int(px[i]), int(py[i])), qe, float(abs(qc[i]) * d[i])))
    recs.sort(key=lambda r: (r.quality, ring.norm(r.q), r.q.x, r.q.y, r.p.x, r.p.y))
    return recs


def _is_convergent(ring: Ring, p: Elem, q: Elem, convergents) -> bool:
    return any(ring.mul(p, qn) == ring.mul(pn, q) for pn, qn in convergents)


def convergent_threshold(params) -> float:
    eps_sq = float(params.disc_bound())
    return (1 - eps_sq) / (4 * params.mu)


def check_convergent_threshold(expansion: Expansion, oracle: list[OracleRecord], params) -> list[OracleRecord]:
    """Oracle pairs under ``(1 - eps^2)/(4 mu)`` that are not convergents (should be empty)."""
    thr = convergent_threshold(params)
    conv = expansion.convergents
    return [r for r in oracle if r.quality <= thr and not _is_convergent(expansion.ring, r.p, r.q, conv)]


def check_best_approx(
    expansion: Expansion, oracle: list[OracleRecord], params, q_norm_bound: Optional[int] = None
) -> bool:
    """``|q_n (q_n z - p_n)| < 4 mu^2 |q (q z - p)| / (1 - eps^2)^2`` for each n and
    every non-convergent oracle pair."""
    return not best_approx_violations(expansion, oracle, params, q_norm_bound)


def best_approx_violations(expansion, oracle, params, q_norm_bound=None) -> list[tuple]:
    ring = expansion.ring
    if q_norm_bound is not None:
        top = max((ring.norm(e.q) for e in expansion.trail), default=0)
        if top > q_norm_bound:
            raise InsufficientOracleBound(
                f"oracle bound {q_norm_bound} below max |q_n|^2 = {top}"
            )
    eps_sq = float(params.disc_bound())
    const = 4 * params.mu_sq / (1 - eps_sq) ** 2
    conv = expansion.convergents
    best_other = None
    for r in oracle:
        if not _is_convergent(ring, r.p, r.q, conv):
            best_other = r
            break
    if best_other is None:
        return []
    out = []
    for e in expansion.trail:
        qn = math.sqrt(ring.norm(e.q))
        lhs = qn * e.quality
        if not lhs < const * best_other.quality:
            out.append((e.n, lhs, const * best_other.quality, best_other))
    return out


# ---------------------------------------------------------------- state graph


OPEN = "open"


@dataclass
class StateGraph:
    ring: Ring
    root: int
    vertices: list  # exact z_n values (None marks exact termination)
    keys: list  # (z_n, b_n, M_n mod b_n) identity of each vertex
    edges: list[tuple[int, Coefficient, int]]
    closed: bool
    states: list = field(default_factory=list, repr=False)

    def successors(self, v: int) -> list[tuple[Coefficient, int]]:
        return [(c, t) for f, c, t in self.edges if f == v]

    @property
    def distinct_values(self) -> int:
        return len({k[0] for k in self.keys})

    def to_json(self) -> dict:
        from .numerics import format_complex

        return {
            "root": self.root,
            "closed": self.closed,
            "vertices": [
                {"z": None if z is None else format_complex(z), "b": k[1].to_json()}
                for z, k in zip(self.vertices, self.keys)
            ],
            "edges": [
                {"from": f, "a": c.a.to_json(), "b": c.b.to_json(), "to": t} for f, c, t in self.edges
            ],
        }

    def to_dot(self) -> str:
        fmt = self.ring.format_elem
        lines = ["digraph states {"]
        for i in range(len(self.vertices)):
            shape = "doublecircle" if i == self.root else "circle"
            lines.append(f'  v{i} [label="{i}", shape={shape}];')
        for f, c, t in self.edges:
            lines.append(f'  v{f} -> v{t} [label="{fmt(c.a)}/{fmt(c.b)}"];')
        lines.append("}")
        return "\n".join(lines)


def _state_key(state: ExpansionState):
    ring, b = state.ring, state.b_prev
    lat = principal_ideal(ring, b)
    M = state.M
    red = tuple(lat.reduce(e) for e in (M.p, M.pp, M.q, M.qp))
    return (state.z_n, b, red)


def explore_states(
    z: QuadComplex,
    ring: Ring,
    params: Union[AdmissibleParams, OpenDiscParams, str],
    budget: int = 10**6,
    B=None,
) -> StateGraph:
    """Breadth-first closure over every valid coefficient from every reachable state.

    ``params`` may be ``OPEN`` (together with ``B``) for the strict ``|b z_n - a| < |b'|``
    test without a fixed epsilon.
    """
    if not isinstance(z, QuadComplex):
        raise TypeError("state exploration requires an exact input")
    if params == OPEN:
        if B is None:
            raise ValueError("open mode needs B")
        params = OpenDiscParams(tuple(Elem(int(b[0]), int(b[1])) for b in B))
    start = initial_state(ring, z)
    index: dict = {}
    vertices, keys, states, edges = [], [], [], []

    def intern(st: ExpansionState) -> tuple[int, bool]:
        k = _state_key(st)
        if k in index:
            return index[k], False
        index[k] = len(vertices)
        vertices.append(st.z_n)
        keys.append(k)
        states.append(st)
        return index[k], True

    root, _ = intern(start)
    queue = deque([root])
    closed = True
    while queue:
        v = queue.popleft()
        st = states[v]
        if st.z_n is None or check_termination(st):
            continue
        for c in candidate_coefficients(st, params):
            nxt = apply_coefficient(st, c)
            nxt = ExpansionState(nxt.ring, nxt.M, nxt.b_prev, nxt.n, nxt.z, nxt.z_n, (), nxt.safety_margin)
            if len(vertices) >= budget and _state_key(nxt) not in index:
                closed = False
                continue
            t, new = intern(nxt)
            edges.append((v, c, t))
            if new:
                queue.append(t)
    return StateGraph(ring, root, vertices, keys, edges, closed, states)


def detect_periodicity(graph: StateGraph) -> Optional[tuple[int, int, list[Coefficient]]]:
    """First cycle reachable from the root in DFS order, as (preperiod, period, coefficients).

    The coefficient list is the preperiod followed by one period.
    """
    if not graph.closed:
        raise GraphNotClosedError("graph exploration hit its budget")
    adj: dict[int, list[tuple[Coefficient, int]]] = {}
    for f, c, t in graph.edges:
        adj.setdefault(f, []).append((c, t))
    color = {graph.root: 1}
    path_v = [graph.root]
    path_c: list[Coefficient] = []
    stack = [iter(adj.get(graph.root, []))]
    while stack:
        step = next(stack[-1], None)
        if step is None:
            stack.pop()
            color[path_v.pop()] = 2
            if path_c:
                path_c.pop()
            continue
        c, t = step
        if color.get(t) == 1:
            start = path_v.index(t)
            coeffs = path_c + [c]
            return start, len(coeffs) - start, coeffs
        if t in color:
            continue
        color[t] = 1
        path_v.append(t)
        path_c.append(c)
        stack.append(iter(adj.get(t, [])))
    return None
