import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqcf.cfrac import (
    Coefficient,
    ExpansionError,
    FirstFound,
    GreedyQuality,
    InvalidScriptError,
    OpenDiscParams,
    PrecisionExhaustedError,
    Scripted,
    apply_coefficient,
    candidate_coefficients,
    candidate_coefficients_bruteforce,
    check_termination,
    choose,
    evaluate_cf,
    expand,
    initial_state,
    render_cf,
    validate_coefficient,
)
from iqcf.covering import AdmissibleParams, find_minimal_admissible_set
from iqcf.numerics import FloatComplex, QuadComplex, QuadReal, parse_complex
from iqcf.ring_ideals import Elem, Ring, column_ideal, is_reduced_colon

ONE, TWO, TAU = Elem(1, 0), Elem(2, 0), Elem(0, 1)


def _pairs(ring, cs):
    return [(ring.format_elem(c.a), ring.format_elem(c.b)) for c in cs]


def _state_after(ring, z, script, k):
    st_ = initial_state(ring, z)
    for c in script.coefficients[:k]:
        st_ = apply_coefficient(st_, c)
    return st_


def test_candidates_after_third_step(r23, p23, z_table1, script1):
    st_ = _state_after(r23, z_table1, script1, 3)
    cands = candidate_coefficients(st_, p23)
    assert Coefficient(TAU, TWO) in cands
    assert set(cands) == set(candidate_coefficients_bruteforce(st_, p23))


def test_candidates_zero_input(r23, p23):
    st_ = initial_state(r23, parse_complex("0", 23))
    assert Coefficient(Elem(0, 0), ONE) in candidate_coefficients(st_, p23)


def test_candidates_open_mode_quadratic_input():
    r = Ring(-11)
    st_ = initial_state(r, parse_complex("3/4+5/4i", 11))
    cands = candidate_coefficients(st_, OpenDiscParams((ONE,)))
    assert {c.a for c in cands} == {Elem(0, 1), Elem(1, 1)}
    assert all(c.b == ONE for c in cands)


def test_apply_examples(r23, z_table1, script1):
    st1 = _state_after(r23, z_table1, script1, 1)
    assert (st1.p, st1.q) == (Elem(-2, 0), ONE)
    st4 = _state_after(r23, z_table1, script1, 4)
    assert (st4.M.p, st4.M.q) == (Elem(4, -2), Elem(-4, 1))
    assert (st4.M.pp, st4.M.qp) == (Elem(-1, -1), TAU)
    st5 = _state_after(r23, z_table1, script1, 5)
    assert st5.p == Elem(7, -1) and st5.q == Elem(-5, 0)
    a5, b5 = script1.coefficients[4].a, script1.coefficients[4].b
    rec = r23.div(r23.mul(a5, st4.p) + r23.mul(b5, st4.M.pp), st4.b_prev)
    assert rec == (7, -1)


def test_final_state_invariants(r23, run1):
    st_ = run1.final
    det = st_.M.det(r23)
    assert det in (st_.b_prev, -st_.b_prev)
    assert is_reduced_colon(column_ideal(r23, st_.M, 1))


def test_termination_examples(r23, p23):
    z0 = parse_complex("0", 23)
    st_ = apply_coefficient(initial_state(r23, z0), Coefficient(Elem(0, 0), ONE))
    assert check_termination(st_)
    half = expand(r23, parse_complex("1/2", 23), 40, p23)
    eps = math.sqrt(8 / 9)
    assert half.terminated and half.steps <= math.floor(1 - math.log(2) / math.log(eps))
    r11 = Ring(-11)
    p11 = find_minimal_admissible_set(r11)
    irr = expand(r11, parse_complex("3/4+5/4i", 11), 30, p11)
    assert not irr.terminated and irr.steps == 30


def test_float_mode_never_terminates(r23, p23):
    z = FloatComplex(mpmath.mpc(0.5, 0), 128)
    ex = expand(r23, z, 5, p23)
    assert not ex.terminated
    assert not check_termination(ex.final)
    # the float run stops once z_n is undefined
    assert ex.final.z_n is None and ex.steps <= 5


def test_table1_replay(r23, run1):
    expect = [
        ("-2", "1"), ("-1", "1"), ("-1-τ", "τ"), ("4-2τ", "-4+τ"), ("7-τ", "-5"),
        ("11-3τ", "-9+τ"), ("9-8τ", "-11+5τ"), ("34-5τ", "-25"), ("1+60τ", "39-45τ"), ("35+55τ", "14-45τ"),
    ]
    assert [(r23.format_elem(p), r23.format_elem(q)) for p, q in run1.convergents] == expect
    assert run1.trail[-1].quality == pytest.approx(0.0061, abs=1e-4)
    assert r23.norm(run1.trail[8].q) == 11916 and r23.norm(run1.trail[9].q) == 11716


def test_ring_element_terminates_in_one_step(r23, p23):
    for text in ["3", "-2", "1/2+1/2*sqrt(23)i"]:
        z = parse_complex(text, 23)
        ex = expand(r23, z, 10, p23)
        assert ex.terminated and ex.steps == 1
        assert ex.trail[0].q == ONE


def test_greedy_contracts(r23, p23, z_table1):
    ex = expand(r23, z_table1, 20, p23, GreedyQuality())
    eps = math.sqrt(8 / 9)
    for e in ex.trail:
        assert e.quality <= eps**e.n + 1e-15


def test_first_found_differs_or_matches_ordering(r23, p23, z_table1):
    st_ = initial_state(r23, z_table1)
    cands = candidate_coefficients(st_, p23)
    assert choose(st_, p23, FirstFound()) == cands[0]
    norms = [r23.norm(c.b) for c in cands]
    assert norms == sorted(norms)


def test_invalid_script_index(r23, p23, z_table1, script1):
    bad = list(script1.coefficients)
    bad[6] = Coefficient(-bad[6].a, bad[6].b)
    with pytest.raises(InvalidScriptError) as info:
        expand(r23, z_table1, 10, p23, Scripted(tuple(bad)))
    assert info.value.index == 6
    foreign = Coefficient(ONE, Elem(3, 0))
    assert "not in B" in validate_coefficient(initial_state(r23, z_table1), p23, foreign)


def test_expand_rejects_nonpositive_steps(r23, p23, z_table1):
    with pytest.raises(ExpansionError):
        expand(r23, z_table1, 0, p23)


def test_inadmissible_eps_has_no_candidate(r23, z_table1):
    tight = AdmissibleParams.exact(r23, [ONE, TWO], Fraction(1, 100))
    with pytest.raises(ExpansionError):
        expand(r23, z_table1, 10, tight)


def test_float_margin_exhaustion(r23, p23, z_table1):
    z = FloatComplex(z_table1.to_mpc(), 128)
    with pytest.raises(PrecisionExhaustedError):
        expand(r23, z, 3, p23, safety_margin=Fraction(8, 9))


def test_float_agrees_with_exact(r23, p23, z_table1):
    with mpmath.workprec(200):
        zf = FloatComplex(z_table1.to_mpc(), 128)
    ex = expand(r23, z_table1, 25, p23)
    fl = expand(r23, zf, 25, p23)
    assert ex.coefficients == fl.coefficients
    for a, b in zip(ex.trail, fl.trail):
        assert a.quality == pytest.approx(b.quality, rel=1e-12, abs=1e-30)


def test_render_examples(r23, p23, z_table1, script1):
    two = expand(r23, z_table1, 2, p23, Scripted(script1.coefficients[:2]))
    assert render_cf(two) == "-2/1 + (1/1)/(1/1)"
    assert evaluate_cf(r23, two.coefficients) == (-1, 0)
    one = expand(r23, z_table1, 1, p23, Scripted(script1.coefficients[:1]))
    assert render_cf(one) == "-2/1"


def test_records_schema(run1):
    rec = run1.records()[0]
    assert set(rec) >= {"n", "a", "b", "p", "q", "quality", "z_n"}
    assert rec["a"] == {"x": -2, "y": 0}


DISCS = [-15, -20, -23, -24, -47]
_PARAMS: dict = {}


def _params(disc):
    if disc not in _PARAMS:
        _PARAMS[disc] = find_minimal_admissible_set(Ring(disc))
    return _PARAMS[disc]


def _random_point(ring, rnd):
    def coord():
        return QuadReal.of(ring.d, Fraction(rnd.randint(-2000, 2000), 1000), Fraction(rnd.randint(-1000, 1000), 10**6))

    return QuadComplex(coord(), coord())


@settings(max_examples=60)
@given(st.sampled_from(DISCS), st.integers(0, 2**32), st.integers(0, 8), st.booleans())
def test_oracle_equivalence(disc, seed, steps, greedy):
    ring = Ring(disc)
    params = _params(disc)
    rnd = random.Random(seed)
    state = initial_state(ring, _random_point(ring, rnd))
    policy = GreedyQuality() if greedy else FirstFound()
    for _ in range(steps):
        if state.z_n is None:
            break
        state = apply_coefficient(state, choose(state, params, policy))
    fast = candidate_coefficients(state, params)
    slow = candidate_coefficients_bruteforce(state, params)
    assert fast == slow
    for b in params.B:
        assert sum(1 for c in fast if c.b == b) <= 4
    if state.z_n is not None:
        assert fast


@settings(max_examples=25)
@given(st.sampled_from(DISCS), st.integers(0, 2**32))
def test_render_evaluates_to_convergent(disc, seed):
    ring = Ring(disc)
    params = _params(disc)
    ex = expand(ring, _random_point(ring, random.Random(seed)), 8, params)
    p, q = ex.convergents[-1]
    assert evaluate_cf(ring, ex.coefficients) == tuple(ring.div(p, q))
