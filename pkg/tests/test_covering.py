import math
from fractions import Fraction

import numpy as np
import pytest

from iqcf.covering import (
    AdmissibleParams,
    CoveringError,
    SearchBoundExceeded,
    build_covering_instance,
    certify_admissible,
    check_admissible,
    covering_radius_bb,
    covering_svg,
    find_minimal_admissible_set,
    generic_admissible_set,
    generic_radius,
    instance_epsilon,
    min_epsilon_pair,
)
from iqcf.ring_ideals import Elem, Ring, ideal_from_generators, unit_ideal

ONE, TWO, TAU = Elem(1, 0), Elem(2, 0), Elem(0, 1)


def _ints(*bs):
    return [Elem(b, 0) for b in bs]


def test_instance_half_integers(r23):
    inst = build_covering_instance(r23, _ints(1, 2), unit_ideal(r23))
    by_radius = {}
    for d in inst.discs:
        by_radius.setdefault(d.radius_weight, []).append(d.center)
    assert set(by_radius) == {1.0, 0.5}
    assert by_radius[1.0] == [Elem(0, 0)]
    halves = by_radius[0.5]
    # a/2 with (a, 2) reduced: the three half-lattice points other than 0
    assert len(halves) == 3
    for c in halves:
        assert Fraction(c.x).denominator <= 2 and Fraction(c.y).denominator <= 2
        assert not c.is_integral()


def test_instance_gaussian_unit_discs():
    r = Ring(-4)
    inst = build_covering_instance(r, [ONE], unit_ideal(r))
    assert [(d.center, d.radius_weight) for d in inst.discs] == [(Elem(0, 0), 1.0)]


def test_instance_nonprincipal_ideal(r23):
    bb = ideal_from_generators(r23, [TWO, r23.conj(TAU)])
    inst = build_covering_instance(r23, _ints(1, 2), bb)
    assert {d.b for d in inst.discs} == {TWO}
    assert all(d.radius_weight == 0.5 for d in inst.discs)
    assert instance_epsilon(inst).eps < 1


def test_instance_rejects_bad_ideal(r23):
    with pytest.raises(CoveringError):
        build_covering_instance(r23, _ints(1), ideal_from_generators(r23, [TWO, TAU]))
    with pytest.raises(CoveringError):
        build_covering_instance(r23, _ints(1), ideal_from_generators(r23, [TWO]))


def test_pair_gaussian_deep_hole():
    r = Ring(-4)
    inst = build_covering_instance(r, [ONE], unit_ideal(r))
    d0 = inst.discs[0]
    assert min_epsilon_pair(d0, d0, inst, shift=(1, 0)) == pytest.approx(math.sqrt(0.5), abs=1e-10)


def test_pair_eisenstein():
    r = Ring(-3)
    inst = build_covering_instance(r, [ONE], unit_ideal(r))
    d0 = inst.discs[0]
    delta = min_epsilon_pair(d0, d0, inst, shift=(1, 0))
    assert delta**2 == pytest.approx(1 / 3, abs=1e-10)


def test_pair_far_apart_is_none():
    r = Ring(-4)
    inst = build_covering_instance(r, [ONE], unit_ideal(r))
    d0 = inst.discs[0]
    assert min_epsilon_pair(d0, d0, inst, shift=(3, 0)) is None


@pytest.mark.parametrize(
    "disc,B,eps_sq",
    [
        (-23, (1, 2), 8 / 9),
        (-12, (1, 2), (6 - 2 * math.sqrt(5)) / 3),
        (-3, (1,), 1 / 3),
        (-4, (1,), 1 / 2),
    ],
)
def test_check_admissible_values(disc, B, eps_sq):
    res = check_admissible(Ring(disc), _ints(*B))
    assert res.admissible
    assert abs(res.eps_sq - eps_sq) < 1e-9
    assert res.eps_sq_lo <= eps_sq + 1e-12 and eps_sq - 1e-12 <= res.eps_sq_hi
    assert res.eps_sq_hi - res.eps_sq_lo <= 1e-9


def test_not_admissible(r23):
    res = check_admissible(r23, _ints(1))
    assert not res.admissible and res.eps >= 1


def test_empty_B_rejected(r23):
    with pytest.raises(CoveringError):
        check_admissible(r23, [])


def _grid_max(inst, n=1000, chunk=20000):
    """max over an n x n grid of the cell of min_k |z - c_k| / r_k."""
    cs, rs, _, _ = inst.extended(1.5)
    w1, w2 = inst.period_vectors
    g = (np.arange(n) + 0.5) / n
    A, B = np.meshgrid(g, g)
    z = (A * w1 + B * w2).ravel()
    best = 0.0
    for s in range(0, len(z), chunk):
        zz = z[s : s + chunk, None]
        best = max(best, float((np.abs(zz - cs[None, :]) / rs[None, :]).min(axis=1).max()))
    return best


@pytest.mark.parametrize("disc,B", [(-23, (1, 2)), (-4, (1,)), (-3, (1,)), (-12, (1, 2)), (-7, (1,))])
def test_epsilon_against_grid_sampling(disc, B):
    r = Ring(disc)
    inst = build_covering_instance(r, _ints(*B), unit_ideal(r))
    eps = instance_epsilon(inst).eps
    gm = _grid_max(inst)
    assert gm <= eps + 1e-9
    assert gm > eps - 1e-3


@pytest.mark.parametrize("disc,B", [(-23, (1, 2)), (-20, (1, 2)), (-15, (1, 2)), (-24, (1, 2))])
def test_epsilon_against_branch_and_bound(disc, B):
    r = Ring(disc)
    for bb in [unit_ideal(r)] + [i for i in _reduced_meeting(r, B) if not i.is_unit_ideal()]:
        inst = build_covering_instance(r, _ints(*B), bb)
        lo, hi = covering_radius_bb(inst)
        eps = instance_epsilon(inst).eps
        assert lo - 1e-9 <= eps <= hi + 1e-9


def _reduced_meeting(r, B):
    from iqcf.ring_ideals import enumerate_reduced_ideals_meeting

    return enumerate_reduced_ideals_meeting(r, _ints(*B))


def test_superset_monotone(r23):
    e1 = check_admissible(r23, _ints(1, 2)).eps
    e2 = check_admissible(r23, _ints(1, 2) + [TAU]).eps
    e3 = check_admissible(r23, _ints(1, 2, 3)).eps
    assert e2 <= e1 + 1e-9 and e3 <= e1 + 1e-9


def test_generic_set_radius(r23):
    assert generic_radius(r23, Fraction(2, 3)) == 6
    B = generic_admissible_set(r23, Fraction(2, 3))
    assert max(r23.norm(b) for b in B) <= 36
    assert len(B) == len([e for e in r23.elements_of_norm_at_most(36) if not e.is_zero()])


def test_generic_large_eps_case():
    r = Ring(-23)
    eps = Fraction(99, 100)
    assert math.floor(Fraction(4, 3) / eps) == 1
    r1 = math.sqrt(23 / 3) / float(eps) ** 2
    assert generic_radius(r, eps) == math.ceil(r1)


def test_generic_rejects_eps():
    with pytest.raises(CoveringError):
        generic_admissible_set(Ring(-23), 1)


def test_fallback_set_minus19():
    r = Ring(-19)
    res = check_admissible(r, [ONE, TAU, Elem(1, -1)])
    assert res.admissible
    # the quoted closed form is the squared radius
    assert res.eps_sq == pytest.approx((13 - math.sqrt(57)) / 8, abs=1e-9)


@pytest.mark.parametrize(
    "disc,B,eps_sq",
    [(-3, (1,), 1 / 3), (-27, (1, 2, 3), (171 - 9 * math.sqrt(105)) / 128), (-4, (1,), 0.5)],
)
def test_find_minimal(disc, B, eps_sq):
    r = Ring(disc)
    p = find_minimal_admissible_set(r)
    assert sorted(int(r.norm(b)) for b in p.B) == sorted(b * b for b in B)
    assert abs(p.eps_sq - eps_sq) < 1e-9


def test_find_minimal_bound_exceeded():
    with pytest.raises(SearchBoundExceeded):
        find_minimal_admissible_set(Ring(-47), max_mu_sq=4)


def test_params_roundtrip(r23):
    p = AdmissibleParams.exact(r23, _ints(1, 2), Fraction(8, 9))
    q = AdmissibleParams.from_json(p.to_json())
    assert q == p and q.disc_bound() == Fraction(8, 9) and q.mu == 2.0
    with pytest.raises(CoveringError):
        AdmissibleParams.exact(r23, _ints(1, 2), 1)


def test_params_upper_rounding(r23):
    p = find_minimal_admissible_set(r23)
    ub = p.eps_sq_upper()
    assert p.eps_sq <= float(ub) < 1


def test_svg_deterministic_and_valid(r23):
    import xml.etree.ElementTree as ET

    inst = build_covering_instance(r23, _ints(1, 2), unit_ideal(r23))
    full = covering_svg(inst, 1.0)
    assert full == covering_svg(build_covering_instance(r23, _ints(1, 2), unit_ideal(r23)), 1.0)
    root = ET.fromstring(full)
    circles = [e for e in root.iter() if e.tag.endswith("circle")]
    assert circles
    scaled = covering_svg(inst, math.sqrt(8 / 9), points=[0.5 + 0.5j])
    ET.fromstring(scaled)
    assert scaled != full
    with pytest.raises(CoveringError):
        covering_svg(inst, 0)


@pytest.mark.parametrize("disc,B", [(-15, (1, 2)), (-20, (1, 2)), (-23, (1, 2)), (-24, (1, 2, 3))])
def test_certify_agrees_with_check(disc, B):
    ring = Ring(disc)
    eps = check_admissible(ring, _ints(*B)).eps
    assert certify_admissible(ring, _ints(*B), eps + 1e-6)
    assert not certify_admissible(ring, _ints(*B), eps - 1e-3)
