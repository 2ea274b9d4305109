"""End-to-end acceptance gates, one test per criterion.

Each test records a single PASS/FAIL line (collected in the terminal summary)
before asserting, so a failing criterion is still reported with its detail.
"""

import dataclasses
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from conftest import record_acceptance

from iqcf.analysis import (
    OPEN,
    best_approx_oracle,
    best_approx_violations,
    check_convergent_threshold,
    convergent_threshold,
    detect_periodicity,
    explore_states,
)
from iqcf.cfrac import (
    FirstFound,
    GreedyQuality,
    OpenDiscParams,
    Scripted,
    apply_coefficient,
    candidate_coefficients,
    candidate_coefficients_bruteforce,
    choose,
    expand,
    initial_state,
)
from iqcf.cli import random_input, run_bench, run_table1, run_table2, slope_fit, verify_runs
from iqcf.covering import AdmissibleParams, certify_admissible, find_minimal_admissible_set, generic_admissible_set
from iqcf.numerics import parse_complex
from iqcf.ring_ideals import Elem, Ring

PROPERTY_DISCS = [-15, -20, -23, -24, -47]
ONE = Elem(1, 0)


@pytest.fixture(scope="module")
def table2_report():
    t0 = time.perf_counter()
    rep = run_table2([-m for m in range(3, 50) if (-m) % 4 in (0, 1) and _in_reference(-m)])
    rep["elapsed"] = time.perf_counter() - t0
    return rep


def _in_reference(disc):
    from iqcf.cli import load_reference

    return any(r["disc"] == disc for r in load_reference("table2.json")["rows"])


@pytest.fixture(scope="module")
def params_by_disc():
    return {d: find_minimal_admissible_set(Ring(d)) for d in PROPERTY_DISCS}


def test_criterion_1_table2(table2_report):
    rep = table2_report
    bad = [r for r in rep["rows"] if r["status"] != "match"]
    detail = f"{rep['matched']}/{rep['compared']} rows match within 1e-9 in {rep['elapsed']:.1f}s"
    if bad:
        detail += "; mismatches: " + ", ".join(
            f"disc {r['disc']} (B {'ok' if r['set_match'] else 'differs'}, eps^2 error {r['eps_sq_error']:.3e})"
            for r in bad
        )
    ok = rep["compared"] == 24 and not bad and rep["elapsed"] < 600
    record_acceptance(1, "minimal admissible sets for |disc| < 50", ok, detail)
    assert ok, detail


def test_criterion_2_table1_replay(r23):
    rep = run_table1()
    rows = rep["rows"]
    norms_ok = len(rows) == 10 and rows[8]["q_norm"] == 11916 and rows[9]["q_norm"] == 11716
    conv = sum(r["convergent_match"] for r in rows)
    qual = sum(r["quality_match"] for r in rows)
    ok = rep["passed"] and norms_ok and conv == 10 and qual == 10
    detail = (
        f"{len(rows)} coefficients validated, {conv}/10 convergents exact, {qual}/10 qualities within "
        f"one printed unit, |q10 z - p10| = {rows[-1]['quality']:.5f}"
    )
    record_acceptance(2, "scripted replay over disc -23", ok, detail)
    assert ok, detail


def test_criterion_3_property_suite():
    t0 = time.perf_counter()
    rep = verify_runs(PROPERTY_DISCS, runs=200, steps=25, seed=20240601)
    elapsed = time.perf_counter() - t0
    checks = sum(v["checks"] for v in rep["per_disc"].values())
    ok = rep["passed"] and rep["runs"] >= 200 and elapsed < 300
    detail = f"{rep['runs']} runs x {rep['steps']} steps, {checks} checks, {len(rep['violations'])} violations, {elapsed:.1f}s"
    record_acceptance(3, "bound checks on random exact runs", ok, detail)
    assert ok, rep["violations"][:5]


def test_criterion_4_oracle_equivalence(params_by_disc):
    rnd = random.Random(4)
    states = mismatches = over = 0
    worst = 0
    while states < 520:
        disc = PROPERTY_DISCS[states % len(PROPERTY_DISCS)]
        ring, params = Ring(disc), params_by_disc[disc]
        st = initial_state(ring, random_input(ring, rnd))
        policy = GreedyQuality() if rnd.random() < 0.5 else FirstFound()
        for _ in range(rnd.randint(1, 12)):
            fast = candidate_coefficients(st, params)
            slow = candidate_coefficients_bruteforce(st, params)
            states += 1
            mismatches += set(fast) != set(slow)
            for b in params.B:
                k = sum(1 for c in fast if c.b == b)
                worst = max(worst, k)
                over += k > 4
            if not fast:
                break
            st = apply_coefficient(st, choose(st, params, policy))
            if st.z_n is None:
                break
    ok = states >= 500 and mismatches == 0 and over == 0
    detail = f"{states} states, {mismatches} set mismatches, max {worst} candidates per b"
    record_acceptance(4, "fast candidate search equals brute force", ok, detail)
    assert ok, detail


def _as_integer(ring, w):
    """``w`` as an element of the ring, or None when it is not integral."""
    if w.re.b != 0 or w.im.a != 0:
        return None
    y = 2 * w.im.b
    x = w.re.a - y * ring.t / 2
    if x.denominator != 1 or y.denominator != 1:
        return None
    return Elem(int(x), int(y))


def _min_denominator_norm(ring, z):
    bound = 1
    while True:
        qs = [q for q in ring.elements_of_norm_at_most(bound) if not q.is_zero()]
        hits = [ring.norm(q) for q in qs if _as_integer(ring, ring.mul_qc(q, z)) is not None]
        if hits:
            return min(hits)
        bound *= 4


def _truncate(expansion, bound):
    keep = 0
    for i, e in enumerate(expansion.trail):
        if expansion.ring.norm(e.q) <= bound:
            keep = i + 1
        else:
            break
    final = dataclasses.replace(expansion.final, trail=expansion.trail[:keep])
    return dataclasses.replace(expansion, final=final)


def test_criterion_5_best_approximation(params_by_disc):
    bound = 10**4
    rnd = random.Random(5)
    inputs = unlisted = beaten = under = 0
    for k in range(60):
        disc = PROPERTY_DISCS[k % len(PROPERTY_DISCS)]
        ring, params = Ring(disc), params_by_disc[disc]
        z = random_input(ring, rnd)
        if k % 2:
            # a random point very close to a random rational, so the threshold is actually hit
            p = Elem(rnd.randint(-40, 40), rnd.randint(-40, 40))
            q = Elem(rnd.randint(1, 15), rnd.randint(-15, 15))
            z = ring.to_qc(p) / ring.to_qc(q) + random_input(ring, rnd, den=10**7, span=1) * Fraction(1, 10**5)
        exp = expand(ring, z, 60, params)
        # run past the oracle range so every convergent with |q|^2 <= bound is present
        while not exp.terminated and ring.norm(exp.trail[-1].q) <= 16 * bound:
            exp = expand(ring, z, exp.steps + 20, params)
        oracle = best_approx_oracle(z, ring, bound)
        under += sum(1 for r in oracle if r.quality <= convergent_threshold(params))
        unlisted += len(check_convergent_threshold(exp, oracle, params))
        beaten += len(best_approx_violations(_truncate(exp, bound), oracle, params, q_norm_bound=bound))
        inputs += 1
    ok = inputs >= 50 and unlisted == 0 and beaten == 0
    detail = (
        f"{inputs} inputs, {under} oracle pairs under the threshold, {unlisted} not convergents, "
        f"{beaten} best-approximation violations"
    )
    record_acceptance(5, "threshold pairs are convergents, best approximation up to constants", ok, detail)
    assert ok, detail


def test_criterion_6_state_graph():
    r11 = Ring(-11)
    z5 = parse_complex("3/4+5/4i", 11)
    g = explore_states(z5, r11, OPEN, B=[(1, 0)])
    root_as = sorted(r11.format_elem(c.a) for c, _ in g.successors(g.root))
    cyc = detect_periodicity(g)
    replay_ok = False
    if cyc is not None:
        pre, per, coeffs = cyc
        script = tuple(coeffs[:pre] + coeffs[pre:] * 3)
        replay_ok = expand(r11, z5, len(script), OpenDiscParams((ONE,)), Scripted(script)).steps == len(script)
    r23 = Ring(-23)
    p23 = AdmissibleParams.exact(r23, [ONE, Elem(2, 0)], Fraction(8, 9))
    eps = math.sqrt(8 / 9)
    half = expand(r23, parse_complex("1/2", 23), 40, p23)
    rational_ok = half.terminated and half.steps <= 12
    # the same step bound for other rationals p/q over the same ring
    rnd = random.Random(6)
    extra = []
    for _ in range(12):
        p = Elem(rnd.randint(-30, 30), rnd.randint(-30, 30))
        q = Elem(rnd.randint(-12, 12), rnd.randint(-12, 12))
        if q.is_zero():
            continue
        z = r23.to_qc(p) / r23.to_qc(q)
        qn = _min_denominator_norm(r23, z)
        limit = math.floor(1 - math.log(math.sqrt(qn)) / math.log(eps))
        for pol in (GreedyQuality(), FirstFound()):
            ex = expand(r23, z, 200, p23, pol)
            extra.append(ex.terminated and ex.steps <= limit)
    ok = (
        g.closed
        and root_as == ["1+τ", "τ"]
        and cyc is not None
        and replay_ok
        and rational_ok
        and all(extra)
    )
    detail = (
        f"closed graph with {len(g.vertices)} states, root coefficients {root_as}, "
        f"cycle {'pre %d period %d' % cyc[:2] if cyc else 'none'}, 3-period replay {'ok' if replay_ok else 'failed'}, "
        f"z=1/2 terminates in {half.steps} steps, {sum(extra)}/{len(extra)} other rational runs within bound"
    )
    record_acceptance(6, "state graph of a quadratic input and finite rational expansions", ok, detail)
    assert ok, detail


def test_criterion_7_sanity_bounds(table2_report):
    problems = []
    for row in table2_report["rows"]:
        d = abs(row["disc"])
        mu = math.sqrt(row["mu_sq"])
        eps = math.sqrt(row["eps_sq"])
        if mu != 1 and d != 3 and eps * mu < 2 / 3:
            problems.append(f"eps*mu < 2/3 at {row['disc']}")
        if mu < math.floor(math.sqrt(d) / 2):
            problems.append(f"mu below floor(sqrt|disc|/2) at {row['disc']}")
        # some admissible parameters exist with mu < sqrt(4|disc|/3); the minimal set is one witness
        if not mu < math.sqrt(4 * d / 3):
            problems.append(f"minimal mu not below sqrt(4|disc|/3) at {row['disc']}")
    t0 = time.perf_counter()
    generic = 0
    for m in range(23, 101):
        if (-m) % 4 not in (0, 1):
            continue
        ring = Ring(-m)
        B = generic_admissible_set(ring, Fraction(2, 3))
        if not certify_admissible(ring, B, 2 / 3):
            problems.append(f"generic set not admissible with eps=2/3 at {-m}")
        generic += 1
    ok = not problems
    detail = (
        f"{len(table2_report['rows'])} minimal sets checked, {generic} generic sets "
        f"(23 <= |disc| <= 100) admissible at eps=2/3 in {time.perf_counter() - t0:.0f}s"
    )
    if problems:
        detail += "; " + "; ".join(problems)
    record_acceptance(7, "lower bounds on mu and eps*mu, generic sets", ok, detail)
    assert ok, detail


def test_criterion_8_step_complexity():
    rows_all = {}
    problems = []
    for disc in (-23, -47):
        ring = Ring(disc)
        params = find_minimal_admissible_set(ring)
        z = parse_complex(f"1/10*sqrt({-disc})+1/3i", -disc)
        rows = run_bench(ring, z, params, [2.0**k for k in range(1, 21)])
        rows_all[disc] = rows
        if not all(r["within_bound"] for r in rows):
            problems.append(f"step bound exceeded at {disc}")
        eps = math.sqrt(float(params.disc_bound()))
        target = 1 / math.log(1 / eps)
        slope = slope_fit(rows)
        if abs(slope - target) > 0.2 * target:
            problems.append(f"disc {disc}: slope {slope:.3f} vs 1/log(1/eps) = {target:.3f}")
        resid = np.array([r["steps"] for r in rows]) - np.polyval(
            np.polyfit(np.log([r["delta"] for r in rows]), [r["steps"] for r in rows], 1),
            np.log([r["delta"] for r in rows]),
        )
        if np.max(np.abs(resid)) > 3:
            problems.append(f"disc {disc}: steps not affine in log delta")
    ok = not problems
    detail = "steps <= ceil(log_{1/eps} delta) for delta up to 2^20 at discs -23, -47"
    if problems:
        detail += "; " + "; ".join(problems)
    record_acceptance(8, "step counts against the contraction bound", ok, detail)
    assert ok, detail
