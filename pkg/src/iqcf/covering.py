"""Disc coverings attached to reduced ideals, and the admissibility search.

For a reduced ideal ``bb`` the family is every closed disc ``D(a/b, 1/|b|)``
with ``b`` in ``bb`` and B, ``a`` in ``bb^-1`` and ``(a*bb, b/bb)`` reduced.
The family is periodic under translation by ``bb^-1``, so one period cell of
representatives plus a margin of translates describes it completely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .ring_ideals import (
    Elem,
    IdealError,
    IdealLattice,
    Ring,
    enumerate_reduced_ideals_meeting,
    ideal_inverse,
    is_reduced_colon,
    is_reduced_or_false,
    quotient_representatives,
    unit_ideal,
)

#: scale ceiling when tracking boundary intersections; anything at or above 1
#: already means "not admissible"
SCALE_CEILING = 1.5
PAIR_TOL = 1e-12
REPORT_TOL = 1e-10


class CoveringError(ValueError):
    pass


class SearchBoundExceeded(CoveringError):
    pass


@dataclass(frozen=True)
class Disc:
    center: Elem  # a/b in K coordinates
    b: Elem
    a: Elem
    radius_sq_weight: Fraction  # 1/|b|^2

    @property
    def radius_weight(self) -> float:
        return math.sqrt(self.radius_sq_weight)


@dataclass
class CoveringInstance:
    ring: Ring
    ideal: IdealLattice
    period: tuple[Elem, Elem]  # reduced basis of ideal^-1
    discs: list[Disc]  # one representative per translation class
    B: tuple[Elem, ...]
    # float views of the extended (margin) family, filled lazily
    _ext: Optional[tuple] = field(default=None, repr=False)

    @property
    def max_radius(self) -> float:
        return max(d.radius_weight for d in self.discs)

    @property
    def period_vectors(self) -> tuple[complex, complex]:
        return tuple(self.ring.to_complex(w) for w in self.period)

    def extended(self, margin_scale: float = SCALE_CEILING):
        """Translates of every disc meeting the period cell grown by ``margin_scale * rmax``.

        Returns (centers: complex array, radii: float array, base index array,
        translation array of (m, n)).
        """
        if self._ext is not None and self._ext[0] >= margin_scale:
            return self._ext[1]
        w1, w2 = self.period_vectors
        margin = margin_scale * 2 * self.max_radius
        det = abs((w1.conjugate() * w2).imag)
        # integer ranges large enough to cover margin in both lattice directions
        k1 = int(math.ceil(margin * abs(w2) / det)) + 1
        k2 = int(math.ceil(margin * abs(w1) / det)) + 1
        cs, rs, idx, tr = [], [], [], []
        for i, d in enumerate(self.discs):
            c0 = self.ring.to_complex(d.center)
            for m in range(-k1, k1 + 2):
                for n in range(-k2, k2 + 2):
                    cs.append(c0 + m * w1 + n * w2)
                    rs.append(d.radius_weight)
                    idx.append(i)
                    tr.append((m, n))
        out = (np.array(cs), np.array(rs), np.array(idx), np.array(tr))
        # keep only discs within margin of the cell
        keep = _near_cell(out[0], w1, w2, margin)
        out = tuple(a[keep] for a in out)
        self._ext = (margin_scale, out)
        return out


def _cell_coords(z, w1: complex, w2: complex):
    det = (w1.conjugate() * w2).imag
    beta = (np.conj(w1) * z).imag / det
    alpha = (z * np.conj(w2)).imag / (-det) if det else 0
    return alpha, beta


def _near_cell(z, w1, w2, margin):
    alpha, beta = _cell_coords(z, w1, w2)
    det = abs((w1.conjugate() * w2).imag)
    ma = margin * abs(w2) / det
    mb = margin * abs(w1) / det
    return (alpha >= -ma) & (alpha <= 1 + ma) & (beta >= -mb) & (beta <= 1 + mb)


def _reduce_mod(ring: Ring, lat_basis: tuple[Elem, Elem], e: Elem) -> Elem:
    """Translate ``e`` by the lattice into the half-open cell of ``lat_basis``."""
    u, w = lat_basis
    det = Fraction(u.x * w.y - u.y * w.x)
    alpha = (Fraction(e.x) * w.y - Fraction(e.y) * w.x) / det
    beta = (Fraction(u.x) * e.y - Fraction(u.y) * e.x) / det
    fa, fb = math.floor(alpha), math.floor(beta)
    return Elem(e.x - fa * u.x - fb * w.x, e.y - fa * u.y - fb * w.y)


def pair_ideal(ring: Ring, ideal: IdealLattice, inv: IdealLattice, a: Elem, b: Elem) -> IdealLattice:
    """The ideal ``(a*bb, b/bb)`` generated by ``a*bb`` and ``b*bb^-1``."""
    gens = [ring.mul(a, g) for g in ideal.basis] + [ring.mul(b, g) for g in inv.basis]
    return IdealLattice.from_zspan(ring, gens)


def _canonical_B(ring: Ring, B: Iterable) -> tuple[Elem, ...]:
    out = []
    for b in B:
        b = Elem(int(b[0]), int(b[1]))
        if b.is_zero():
            raise CoveringError("0 may not belong to B")
        if b not in out:
            out.append(b)
    if not out:
        raise CoveringError("B must be nonempty")
    return tuple(out)


def build_covering_instance(ring: Ring, B, ideal: IdealLattice) -> CoveringInstance:
    B = _canonical_B(ring, B)
    if not is_reduced_or_false(ideal):
        raise CoveringError(f"ideal {ideal.describe()} is not an invertible reduced ideal")
    members = [b for b in B if b in ideal]
    if not members:
        raise CoveringError("ideal does not meet B")
    inv = ideal_inverse(ideal)
    period = inv.reduced_basis()
    discs: list[Disc] = []
    seen = set()
    for b in members:
        nb = ring.norm(b)
        sub = inv.scale(b)
        for a in quotient_representatives(inv, sub):
            # pair ideals may be non-invertible when the order is not maximal;
            # class-minimality via the colon ideal still applies
            if not is_reduced_colon(pair_ideal(ring, ideal, inv, a, b)):
                continue
            center = _reduce_mod(ring, period, ring.div(a, b))
            key = (center, nb)
            if key in seen:
                continue
            seen.add(key)
            discs.append(Disc(center, b, a, Fraction(1, nb)))
    return CoveringInstance(ring, ideal, period, discs, B)


# ---------------------------------------------------------------- pair epsilon


def _apollonius(ci, ri2, cj, rj2):
    """Coefficients (A, Bv, C) of ``A|z|^2 - 2 Re(conj(Bv) z) + C = 0`` for
    ``|z - ci|/ri = |z - cj|/rj``."""
    A = rj2 - ri2
    Bv = rj2 * ci - ri2 * cj
    C = rj2 * abs(ci) ** 2 - ri2 * np.abs(cj) ** 2
    return A, Bv, C


def _line_circle(w, h, c0, R2):
    """Points z with Re(conj(w) z) = h on the circle |z - c0|^2 = R2 (vectorized)."""
    wn = np.abs(w)
    ok = wn > 1e-300
    wn = np.where(ok, wn, 1.0)
    z0 = w * h / wn**2
    dirv = 1j * w / wn
    rel = z0 - c0
    pb = (np.conj(dirv) * rel).real
    disc = pb * pb - (np.abs(rel) ** 2 - R2)
    ok = ok & (disc >= -1e-12)
    sq = np.sqrt(np.maximum(disc, 0.0))
    return z0 + (-pb + sq) * dirv, z0 + (-pb - sq) * dirv, ok


def _triple_points(ci, ri2, cj, rj2, ck, rk2):
    """Points weighted-equidistant to sites i, j and each k (arrays over k)."""
    A1, B1, C1 = _apollonius(ci, ri2, cj, rj2)
    A2, B2, C2 = _apollonius(ci, ri2, ck, rk2)
    pts, oks = [], []
    if A1 == 0:
        # line Re(conj(B1) z) = C1/2 against circle (or line) 2
        lw, lh = B1 * np.ones_like(ck), C1 / 2 * np.ones(len(ck))
        circ = A2 != 0
        A2s = np.where(circ, A2, 1.0)
        c0 = B2 / A2s
        R2 = np.abs(c0) ** 2 - C2 / A2s
        p1, p2, ok = _line_circle(lw, lh, c0, R2)
        # two parallel/crossing lines when A2 == 0
        det = (np.conj(B1) * B2).imag
        lin = (~circ) & (np.abs(det) > 1e-300)
        # solve Re(conj(B1) z) = C1/2, Re(conj(B2) z) = C2/2
        b1x, b1y = B1.real, B1.imag
        b2x, b2y = B2.real, B2.imag
        dd = b1x * b2y - b1y * b2x
        dd = np.where(np.abs(dd) > 1e-300, dd, 1.0)
        x = (C1 / 2 * b2y - C2 / 2 * b1y) / dd
        y = (b1x * C2 / 2 - b2x * C1 / 2) / dd
        pl = x + 1j * y
        p1 = np.where(lin, pl, p1)
        ok1 = np.where(lin, True, ok & circ)
        pts += [p1, p2]
        oks += [ok1, ok & circ]
    else:
        # eliminate |z|^2: A2*E1 - A1*E2 is a line
        w = A2 * B1 - A1 * B2
        h = (A2 * C1 - A1 * C2) / 2
        c0 = B1 / A1
        R2 = abs(c0) ** 2 - C1 / A1
        p1, p2, ok = _line_circle(w, h, c0 * np.ones_like(ck), R2 * np.ones(len(ck)))
        pts += [p1, p2]
        oks += [ok, ok]
    return np.concatenate(pts), np.concatenate(oks)


def _branch_points(ci, ri, cj, rj, t):
    d = abs(cj - ci)
    u = (cj - ci) / d
    x = (d * d + t * t * (ri * ri - rj * rj)) / (2 * d)
    y = np.sqrt(np.maximum(t * t * ri * ri - x * x, 0.0))
    return ci + u * (x + 1j * y), ci + u * (x - 1j * y)


def _pair_delta(ci, ri, cj, rj, kc, kr, ceiling=SCALE_CEILING) -> Optional[float]:
    """Sup of scales at which a boundary intersection point of the pair is uncovered."""
    d = abs(cj - ci)
    t_min = d / (ri + rj)
    if t_min > 1:
        return None
    t_hi = d / abs(ri - rj) if ri != rj else math.inf
    t_hi = min(t_hi, ceiling)
    if t_hi <= t_min:
        return 0.0
    ts = [t_min, t_hi]
    if len(kc):
        pts, ok = _triple_points(ci, ri * ri, cj, rj * rj, kc, kr * kr)
        tv = np.abs(pts[ok] - ci) / ri
        tv = tv[(tv > t_min) & (tv < t_hi)]
        ts.extend(tv.tolist())
    ts = np.unique(np.array(ts))
    lo, hi = ts[:-1], ts[1:]
    keep = hi - lo > 1e-13
    lo, hi = lo[keep], hi[keep]
    if not len(lo):
        return 0.0
    mid = (lo + hi) / 2
    best = 0.0
    for branch in _branch_points(ci, ri, cj, rj, mid):
        if len(kc):
            dist = np.abs(branch[:, None] - kc[None, :])
            covered = (dist < mid[:, None] * kr[None, :]).any(axis=1)
        else:
            covered = np.zeros(len(mid), dtype=bool)
        unc = ~covered
        if unc.any():
            best = max(best, float(hi[unc].max()))
    return best


def _instance_neighbors(inst: CoveringInstance, ceiling: float):
    cs, rs, idx, tr = inst.extended(ceiling)
    return cs, rs


def min_epsilon_pair(D1: Disc, D2: Disc, inst: CoveringInstance, shift=(0, 0)) -> Optional[float]:
    """Minimal delta beyond which both boundary intersections of the pair are covered.

    ``D2`` may be translated by ``shift = (m, n)`` period vectors.  Returns None
    if the two discs do not meet at scale 1.
    """
    r = inst.ring
    w1, w2 = inst.period_vectors
    ci = r.to_complex(D1.center)
    cj = r.to_complex(D2.center) + shift[0] * w1 + shift[1] * w2
    ri, rj = D1.radius_weight, D2.radius_weight
    if abs(ci - cj) < 1e-15 and ri == rj:
        raise CoveringError("discs must be distinct")
    cs, rs = _instance_neighbors(inst, SCALE_CEILING)
    # include translates further out if the pair sits off-cell
    sel = _third_disc_mask(cs, rs, ci, ri, cj, rj, SCALE_CEILING)
    return _pair_delta(ci, ri, cj, rj, cs[sel], rs[sel])


def _third_disc_mask(cs, rs, ci, ri, cj, rj, ceiling):
    di = np.abs(cs - ci)
    dj = np.abs(cs - cj)
    m = (di <= ceiling * (ri + rs) + 1e-9) & (dj <= ceiling * (rj + rs) + 1e-9)
    m &= ~((di < 1e-12) & (np.abs(rs - ri) < 1e-15))
    m &= ~((dj < 1e-12) & (np.abs(rs - rj) < 1e-15))
    return m


@dataclass
class IdealCoverResult:
    ideal: IdealLattice
    eps: float
    n_discs: int
    n_pairs: int
    witness: Optional[tuple] = None


def instance_epsilon(inst: CoveringInstance, stop_at: Optional[float] = None) -> IdealCoverResult:
    """Max over intersecting pairs (one disc in the base cell) of the pair delta."""
    cs, rs, idx, tr = inst.extended(SCALE_CEILING)
    base = np.nonzero((tr[:, 0] == 0) & (tr[:, 1] == 0))[0]
    eps, n_pairs, witness = 0.0, 0, None
    for bi in base:
        ci, ri = cs[bi], rs[bi]
        dist = np.abs(cs - ci)
        partners = np.nonzero((dist <= ri + rs + 1e-12) & (dist > 1e-12) | ((dist <= 1e-12) & (rs != ri)))[0]
        for bj in partners:
            cj, rj = cs[bj], rs[bj]
            sel = _third_disc_mask(cs, rs, ci, ri, cj, rj, SCALE_CEILING)
            sel[bi] = sel[bj] = False
            delta = _pair_delta(ci, ri, cj, rj, cs[sel], rs[sel])
            if delta is None:
                continue
            n_pairs += 1
            if delta > eps:
                eps, witness = delta, (int(idx[bi]), int(idx[bj]), tuple(int(v) for v in tr[bj]))
            if stop_at is not None and eps >= stop_at:
                return IdealCoverResult(inst.ideal, eps, len(inst.discs), n_pairs, witness)
    return IdealCoverResult(inst.ideal, eps, len(inst.discs), n_pairs, witness)


@dataclass
class AdmissibilityResult:
    admissible: bool
    eps: float
    eps_sq: float
    eps_sq_lo: float
    eps_sq_hi: float
    B: tuple[Elem, ...]
    per_ideal: list[IdealCoverResult]

    @property
    def mu(self) -> float:
        return self.mu_sq**0.5

    mu_sq: int = 0

    def to_json(self) -> dict:
        return {
            "admissible": self.admissible,
            "eps_sq": self.eps_sq,
            "eps_sq_lo": self.eps_sq_lo,
            "eps_sq_hi": self.eps_sq_hi,
        }


def check_admissible(
    ring: Ring, B, stop_at: Optional[float] = None, tol: float = REPORT_TOL
) -> AdmissibilityResult:
    """Minimal epsilon with which B is admissible (admissible iff it lies in (0, 1)).

    ``eps_sq_lo``/``eps_sq_hi`` widen the float result by ``tol`` on each side.
    """
    B = _canonical_B(ring, B)
    eps = 0.0
    per = []
    for ideal in enumerate_reduced_ideals_meeting(ring, B):
        inst = build_covering_instance(ring, B, ideal)
        res = instance_epsilon(inst, stop_at=stop_at)
        per.append(res)
        eps = max(eps, res.eps)
        if stop_at is not None and eps >= stop_at:
            break
    e2 = eps * eps
    admissible = 0 < eps < 1 and (stop_at is None or eps < stop_at)
    mu_sq = max(int(ring.norm(b)) for b in B)
    return AdmissibilityResult(admissible, eps, e2, max(e2 - tol, 0.0), e2 + tol, B, per, mu_sq)


def certify_admissible(ring: Ring, B, eps: float) -> bool:
    """True iff the check-admissible epsilon of B is at most ``eps``, shown cheaply.

    Per reduced ideal, the pair computation runs on growing norm-prefixes of
    ``B ∩ ideal``.  A subfamily that covers at scale ``eps`` proves the full
    family does, so large sets are settled by their short elements.
    """
    B = _canonical_B(ring, B)
    for ideal in enumerate_reduced_ideals_meeting(ring, B):
        members = sorted((b for b in B if b in ideal), key=ring.norm)
        cuts = sorted({i + 1 for i in range(len(members)) if i + 1 == len(members) or ring.norm(members[i + 1]) != ring.norm(members[i])})
        for k in cuts:
            inst = build_covering_instance(ring, members[:k], ideal)
            if instance_epsilon(inst, stop_at=eps).eps <= eps:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------- branch and bound oracle


def covering_radius_bb(
    inst: CoveringInstance,
    tol: float = 1e-11,
    target: Optional[float] = None,
    max_levels: int = 60,
) -> tuple[float, float]:
    """Enclosure ``(lo, hi)`` of max over the plane of min_k |z - c_k| / r_k.

    Independent of the pair route: plain branch and bound over the period
    cell with a Lipschitz upper bound.  With ``target`` set, stops as soon as
    the maximum is shown to be below (hi <= target) or above (lo > target) it.
    """
    cap = SCALE_CEILING if target is None else max(target, 0) * 1.05 + 0.05
    cs, rs, _, _ = inst.extended(max(cap, 1.0))
    w1, w2 = inst.period_vectors
    rho_unit = max(abs(w1 + w2), abs(w1 - w2))
    n0 = 32
    g = (np.arange(n0) + 0.5) / n0
    A, Bt = np.meshgrid(g, g)
    alpha, beta = A.ravel(), Bt.ravel()
    h = 0.5 / n0
    lo = 0.0
    hi = math.inf
    for _ in range(max_levels):
        z = alpha * w1 + beta * w2
        rho = h * rho_unit
        best_lo = np.full(len(z), np.inf)
        best_hi = np.full(len(z), np.inf)
        for s in range(0, len(cs), 512):
            dist = np.abs(z[:, None] - cs[None, s : s + 512])
            w = rs[None, s : s + 512]
            best_lo = np.minimum(best_lo, (dist / w).min(axis=1))
            best_hi = np.minimum(best_hi, ((dist + rho) / w).min(axis=1))
        lo = max(lo, float(best_lo.max()))
        hi = float(best_hi.max())
        if target is not None and (hi <= target or lo > target):
            return lo, hi
        if hi - lo < tol:
            return lo, hi
        keep = best_hi > lo
        alpha, beta = alpha[keep], beta[keep]
        h /= 2
        alpha = np.concatenate([alpha - h, alpha + h, alpha - h, alpha + h])
        beta = np.concatenate([beta - h, beta - h, beta + h, beta + h])
    return lo, hi


def covers_at(ring: Ring, B, eps: float, incremental: bool = True) -> bool:
    """True iff every reduced ideal's family covers the plane at scale ``eps``.

    With ``incremental`` the discs for each ideal are built from growing
    prefixes of ``B ∩ ideal`` (ordered by norm): a covering by a subfamily is a
    covering by the whole family, and small prefixes usually suffice.
    """
    B = _canonical_B(ring, B)
    for ideal in enumerate_reduced_ideals_meeting(ring, B):
        members = sorted((b for b in B if b in ideal), key=ring.norm)
        sizes = range(1, len(members) + 1) if incremental else [len(members)]
        ok = False
        for k in sizes:
            inst = build_covering_instance(ring, members[:k], ideal)
            lo, hi = covering_radius_bb(inst, target=eps)
            if hi <= eps:
                ok = True
                break
        if not ok:
            return False
    return True


# ---------------------------------------------------------------- canned families


def generic_admissible_set(ring: Ring, eps) -> list[Elem]:
    """Nonzero integers in the disc of radius ceil(r0^(1-delta) r1^delta)."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise CoveringError("eps must lie in (0, 1)")
    D = ring.d
    e = float(eps)
    delta = 1 / math.floor(Fraction(4, 3) / eps)
    r0 = math.sqrt(2 * D / (math.sqrt(3) * math.pi)) / e
    r1 = math.sqrt(D / 3) / (e * e)
    radius = math.ceil(r0 ** (1 - delta) * r1**delta)
    return [b for b in ring.elements_of_norm_at_most(radius * radius) if not b.is_zero()]


def generic_radius(ring: Ring, eps) -> int:
    eps = Fraction(eps)
    e = float(eps)
    delta = 1 / math.floor(Fraction(4, 3) / eps)
    r0 = math.sqrt(2 * ring.d / (math.sqrt(3) * math.pi)) / e
    r1 = math.sqrt(ring.d / 3) / (e * e)
    return math.ceil(r0 ** (1 - delta) * r1**delta)


def associate_classes(ring: Ring, elems: Sequence[Elem]) -> list[Elem]:
    """First representative (in the given order) of each class modulo units."""
    out, seen = [], set()
    for e in elems:
        if e in seen:
            continue
        out.append(e)
        for u in ring.units:
            seen.add(ring.mul(u, e))
    return out


@dataclass
class AdmissibleParams:
    B: tuple[Elem, ...]
    eps_sq: float
    eps_sq_lo: float
    eps_sq_hi: float
    mu_sq: int
    # exact value supplied by the caller (e.g. 8/9); disc tests use it verbatim
    eps_sq_exact: Optional[Fraction] = None

    @classmethod
    def exact(cls, ring: Ring, B, eps_sq) -> "AdmissibleParams":
        """Parameters with a caller-chosen rational eps^2 (not re-verified here)."""
        B = _canonical_B(ring, B)
        e = Fraction(eps_sq)
        if not 0 < e < 1:
            raise CoveringError("eps^2 must lie in (0, 1)")
        mu_sq = max(int(ring.norm(b)) for b in B)
        return cls(B, float(e), float(e), float(e), mu_sq, e)

    @property
    def mu(self) -> float:
        return math.sqrt(self.mu_sq)

    def disc_bound(self) -> Fraction:
        """Rational eps^2 used for closed-disc membership tests."""
        return self.eps_sq_exact if self.eps_sq_exact is not None else self.eps_sq_upper()

    def eps_sq_upper(self) -> Fraction:
        """A rational upper rounding of eps^2 (still below 1)."""
        if self.eps_sq_exact is not None:
            return self.eps_sq_exact
        den = 10**12
        up = Fraction(math.ceil((self.eps_sq_hi + 1e-12) * den), den)
        if up >= 1:
            raise CoveringError("eps^2 rounds up to 1")
        return up

    def to_json(self) -> dict:
        return {
            "B": [b.to_json() for b in self.B],
            "eps_sq": self.eps_sq,
            "eps_sq_lo": self.eps_sq_lo,
            "eps_sq_hi": self.eps_sq_hi,
            "mu_sq": self.mu_sq,
            "eps_sq_exact": None if self.eps_sq_exact is None else str(self.eps_sq_exact),
        }

    @classmethod
    def from_json(cls, obj) -> "AdmissibleParams":
        ex = obj.get("eps_sq_exact")
        return cls(
            tuple(Elem.from_json(b) for b in obj["B"]),
            obj["eps_sq"],
            obj["eps_sq_lo"],
            obj["eps_sq_hi"],
            obj["mu_sq"],
            None if ex is None else Fraction(ex),
        )


def _subset_order_key(ring: Ring, subset: Sequence[Elem], order: dict):
    return (len(subset), tuple(sorted(int(ring.norm(b)) for b in subset)), tuple(sorted(order[b] for b in subset)))


def o_family_epsilon(ring: Ring, B) -> float:
    inst = build_covering_instance(ring, B, unit_ideal(ring))
    return instance_epsilon(inst, stop_at=1.0).eps


def find_minimal_admissible_set(
    ring: Ring,
    max_mu_sq: int = 64,
    candidate_rule: Optional[Callable[[Ring, int], Iterable[Sequence[Elem]]]] = None,
    max_subsets_per_level: int = 4096,
) -> AdmissibleParams:
    """First admissible B in order of (mu, |B|, sorted norms, element order).

    Levels of ``mu^2`` below ``floor(sqrt|disc|/2)^2`` are skipped (no admissible
    set can live there).  A level is also skipped when the union of discs from
    *every* element of that level fails to cover for the unit ideal, since the
    unit ideal's family only grows with B.
    """
    lower = math.floor(math.sqrt(ring.d) / 2) ** 2
    elems = associate_classes(
        ring, [e for e in ring.elements_of_norm_at_most(max_mu_sq) if not e.is_zero()]
    )
    order = {e: i for i, e in enumerate(elems)}
    levels = sorted({int(ring.norm(e)) for e in elems})
    for level in levels:
        if level < lower:
            continue
        if candidate_rule is not None:
            subsets = list(candidate_rule(ring, level))
        else:
            pool = [e for e in elems if ring.norm(e) <= level]
            if o_family_epsilon(ring, pool) >= 1:
                continue
            top = [e for e in pool if ring.norm(e) == level]
            rest = [e for e in pool if ring.norm(e) < level]
            subsets = []
            for k in range(1, len(pool) + 1):
                for nt in range(1, min(k, len(top)) + 1):
                    for tops in itertools.combinations(top, nt):
                        for others in itertools.combinations(rest, k - nt):
                            subsets.append(tuple(others) + tuple(tops))
                if len(subsets) > max_subsets_per_level:
                    break
            subsets.sort(key=lambda s: _subset_order_key(ring, s, order))
        for subset in subsets:
            res = check_admissible(ring, subset, stop_at=1.0)
            if res.admissible:
                return AdmissibleParams(
                    tuple(subset), res.eps_sq, res.eps_sq_lo, res.eps_sq_hi, res.mu_sq
                )
    raise SearchBoundExceeded(f"no admissible set with mu^2 <= {max_mu_sq}")


def params_from_check(res: AdmissibilityResult) -> AdmissibleParams:
    if not res.admissible:
        raise CoveringError("B is not admissible")
    return AdmissibleParams(res.B, res.eps_sq, res.eps_sq_lo, res.eps_sq_hi, res.mu_sq)


# ---------------------------------------------------------------- svg


def covering_svg(
    inst: CoveringInstance,
    scale: float,
    points: Sequence[complex] = (),
    view: float = 1.0,
    px: int = 480,
) -> str:
    """SVG drawing of the family at radius scale ``scale`` around the origin."""
    if not 0 < scale <= 1:
        raise CoveringError("scale must lie in (0, 1]")
    w1, w2 = inst.period_vectors
    half = view * max(abs(w1), abs(w2), 1.0) * 1.5
    cs, rs, idx, tr = inst.extended(SCALE_CEILING)
    # enough translates to fill the view window
    k = int(math.ceil(2 * half / min(abs(w1), abs(w2)))) + 1
    items = []
    for d in inst.discs:
        c0 = inst.ring.to_complex(d.center)
        for m in range(-k, k + 1):
            for n in range(-k, k + 1):
                c = c0 + m * w1 + n * w2
                r = d.radius_weight * scale
                if abs(c.real) - r > half or abs(c.imag) - r > half:
                    continue
                items.append((d.radius_weight, round(c.real, 12), round(c.imag, 12), r))
    items.sort(key=lambda t: (-t[0], t[1], t[2]))
    k_px = px / (2 * half)

    def X(x):
        return (x + half) * k_px

    def Y(y):
        return (half - y) * k_px

    radii = sorted({t[0] for t in items}, reverse=True)
    palette = ["#f4c430", "#3b7dd8", "#5fb35f", "#d8573b", "#8e5fb3", "#999999"]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" viewBox="0 0 {px} {px}">',
        f'<rect width="{px}" height="{px}" fill="white"/>',
    ]
    for rw, x, y, r in items:
        col = palette[radii.index(rw) % len(palette)]
        lines.append(
            f'<circle cx="{X(x):.4f}" cy="{Y(y):.4f}" r="{r * k_px:.4f}" '
            f'fill="{col}" fill-opacity="0.35" stroke="black" stroke-width="0.5"/>'
        )
    cell = [0, w1, w1 + w2, w2]
    pts = " ".join(f"{X(c.real):.4f},{Y(c.imag):.4f}" for c in cell)
    lines.append(f'<polygon points="{pts}" fill="none" stroke="red" stroke-width="1"/>')
    for p in points:
        lines.append(f'<circle cx="{X(p.real):.4f}" cy="{Y(p.imag):.4f}" r="2.5" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
