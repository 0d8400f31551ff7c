"""Acceptance criteria, one test per criterion.

Each test prints a single ``[ACCEPT n] PASS|FAIL ...`` line; the same lines
are repeated in the pytest terminal summary. Run standalone with
``python tests/test_acceptance.py`` to print only those lines.
"""

import random
import time

import pytest

from conslaw_kit.conslaw import (
    ConservedVector,
    GaugeTriple,
    conserved_vector,
    divergence,
    gauge_transform,
    kp_closed_form,
    reduce_vector,
    simplify_density,
    verify_divergence,
)
from conslaw_kit.corpus import CORPUS_DIR, load_system, load_vector
from conslaw_kit.diffalg import DiffPoly, SubstitutionRule, euler, substitute, total_derivative
from conslaw_kit.numeric import (
    Grid,
    SolverConfig,
    conservation_drift,
    random_initial_field,
    random_point_check,
    solve_kp,
    specialize,
)
from conslaw_kit.parser import parse_expression, parse_labelled, render_plain, system_context
from conslaw_kit.selfadjoint import adjoint_system, check_selfadjointness, formal_lagrangian
from conslaw_kit.symmetry import KP_CONVENTION, Generator, builtin_kp_generator, characteristic, check_symmetry

from helpers import random_poly

GOLDEN = CORPUS_DIR / "golden"
KP = load_system(CORPUS_DIR / "kp.pde")
LAG = formal_lagrangian(KP)
CTX = system_context(KP, LAG.adjoint_names)
RULE = SubstitutionRule({"v": parse_expression("u"), "z": parse_expression("w")})

RESULTS: dict = {}


def E(text):
    return parse_expression(text, CTX)


def labelled(name):
    return parse_labelled((GOLDEN / name).read_text(), CTX)


def report(n: int, title: str, ok: bool, elapsed: float, limit: float, detail: str = ""):
    ok = ok and elapsed < limit
    line = f"[ACCEPT {n:2d}] {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s, limit {limit:g}s){'  ' + detail if detail else ''}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_01_adjoint():
    t0 = time.perf_counter()
    adj = adjoint_system(formal_lagrangian(KP))
    want = labelled("adjoint.txt")
    ok = adj.oriented == (want["E1"], want["E2"])
    ok = ok and render_plain(adj.oriented[0]) == "v_t - u*v_x - v_xxx - z_y"
    report(1, "adjoint system", ok, time.perf_counter() - t0, 1)


def test_criterion_02_self_adjoint():
    t0 = time.perf_counter()
    rep = check_selfadjointness(KP, RULE)
    ok = rep.verdict and rep.substituted == KP.equations
    report(2, "nonlinear self-adjointness v=u, z=w", ok, time.perf_counter() - t0, 1)


def test_criterion_03_symmetries():
    t0 = time.perf_counter()
    reps = [check_symmetry(builtin_kp_generator(k), KP) for k in "fgh"]
    ok = all(r.passed for r in reps) and all(res.is_zero() for r in reps for res in r.residuals)
    report(3, "X_f, X_g, X_h are symmetries", ok, time.perf_counter() - t0, 10)


def _random_generator(rng):
    def coeff():
        # jet order 0: only u, w themselves, coordinates and f, f', f''
        return random_poly(rng, max_terms=3, max_degree=2, max_jet=0)

    return Generator(KP_CONVENTION, (coeff(), coeff(), coeff()), (coeff(), coeff()), "random")


def test_criterion_04_closed_form():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    gens = [builtin_kp_generator(k) for k in "fgh"] + [_random_generator(rng) for _ in range(50)]
    mismatches = sum(
        not conserved_vector(LAG, X, RULE).same_components(kp_closed_form(characteristic(X))) for X in gens
    )
    report(4, "general formula equals KP closed form", mismatches == 0, time.perf_counter() - t0, 30,
           f"{len(gens)} generators, {mismatches} mismatches")


def test_criterion_05_reference_vectors():
    t0 = time.perf_counter()
    g = labelled("prop1_gauge.txt")
    cv1 = conserved_vector(LAG, builtin_kp_generator("f"), RULE)
    got1 = reduce_vector(gauge_transform(cv1, GaugeTriple(g["P"], g["Q"], g["R"])), KP)
    ok1 = got1.same_components(load_vector(GOLDEN / "prop1.txt", CTX))
    signs = {}
    ok23 = True
    for k, kind in (("2", "g"), ("3", "h")):
        out, _, applied = simplify_density(conserved_vector(LAG, builtin_kp_generator(kind), RULE), KP)
        want = load_vector(GOLDEN / f"prop{k}.txt", CTX)
        # the recorded sign relates the raw construction to the reference vector
        if out.same_components(want):
            signs[kind] = applied
        elif out.same_components(-want):
            signs[kind] = -applied
        else:
            ok23 = False
    report(5, "reference conserved vectors for X_f (exact), X_g and X_h (up to sign)", ok1 and ok23,
           time.perf_counter() - t0, 10, "signs " + ", ".join(f"X_{k}: {s:+d}" for k, s in signs.items()))


def test_criterion_06_divergence_identity():
    t0 = time.perf_counter()
    reps = [verify_divergence(load_vector(GOLDEN / f"prop{k}.txt", CTX), KP) for k in "123"]
    ok = all(r.passed and r.residual.is_zero() for r in reps)
    mult = reps[0].plain_multipliers()
    want = labelled("prop1_multipliers.txt")
    ok = ok and all(mult.get(a) in (want[f"L{a + 1}"], -want[f"L{a + 1}"]) for a in range(2))
    ok = ok and not reps[0].differential_multipliers()
    report(6, "divergence vanishes on solutions; multipliers of the X_f vector", ok, time.perf_counter() - t0, 10)


def test_criterion_07_euler():
    t0 = time.perf_counter()
    system = load_system(CORPUS_DIR / "kp_potential.pde")
    g = parse_labelled((GOLDEN / "potential_euler.txt").read_text(), system_context(system))
    ok = euler(g["L"], "phi") == g["E"] == system.equations[0]
    report(7, "Euler operator on the potential KP Lagrangian", ok, time.perf_counter() - t0, 1)


def _laws(rng, n):
    """Run each algebraic law on ``n`` deterministic random instances."""
    failures = {}

    def law(name, fn):
        failures[name] = sum(not fn() for _ in range(n))

    def commute():
        p = random_poly(rng)
        i, j = rng.sample(range(3), 2)
        return total_derivative(total_derivative(p, i), j) == total_derivative(total_derivative(p, j), i)

    def leibniz():
        p, q, i = random_poly(rng), random_poly(rng), rng.randrange(3)
        return total_derivative(p * q, i) == total_derivative(p, i) * q + p * total_derivative(q, i)

    def euler_div():
        p = random_poly(rng, max_terms=3, max_jet=3)
        i = rng.randrange(3)
        return all(euler(total_derivative(p, i), d).is_zero() for d in ("u", "w"))

    def subst():
        p = random_poly(rng, deps=("u", "v", "z"))
        target = random_poly(rng, max_terms=2, max_jet=0)
        rule = SubstitutionRule({"v": target, "z": E("w")})
        i = rng.randrange(3)
        return substitute(total_derivative(p, i), rule) == total_derivative(substitute(p, rule), i)

    def gauge():
        cv = ConservedVector(tuple(random_poly(rng, max_terms=2) for _ in range(3)))
        g = GaugeTriple(*(random_poly(rng, max_terms=2) for _ in range(3)))
        return divergence(gauge_transform(cv, g)) == divergence(cv)

    def roundtrip():
        p = random_poly(rng, deps=("u", "w", "v", "z"), funcs=("f", "g", "h"), max_jet=4)
        return parse_expression(render_plain(p), CTX) == p

    for name, fn in [("commutation", commute), ("Leibniz", leibniz), ("Euler of divergence", euler_div),
                     ("substitution", subst), ("gauge invariance", gauge), ("round-trip", roundtrip)]:
        law(name, fn)
    return failures


def test_criterion_08_properties():
    t0 = time.perf_counter()
    failures = _laws(random.Random(8), 200)
    bad = {k: v for k, v in failures.items() if v}
    report(8, "algebraic laws, 6 suites x 200 instances", not bad, time.perf_counter() - t0, 60,
           f"failures {bad}" if bad else "0 failures")


def _kp_law(kind, coeffs):
    cv, _, _ = simplify_density(conserved_vector(LAG, builtin_kp_generator(kind), RULE), KP)
    return specialize(cv, kind, coeffs)


ROUND_OFF = 1e-12


def test_criterion_09_numeric_conservation():
    t0 = time.perf_counter()
    mass = _kp_law("h", [0, 1])
    l2 = _kp_law("f", [0, 1])
    ok = mass[0] == E("u") and l2[0] in (E("(1/2)*u^2"), E("-(1/2)*u^2"))
    grid = Grid(64, 64)
    init = random_initial_field(grid, seed=0)
    drifts = {}
    for dt in (1e-3, 5e-4):
        traj = solve_kp(SolverConfig(dt=dt, t_end=1.0, snapshot_every=int(round(0.05 / dt))), init)
        drifts[dt] = [conservation_drift(traj, law).drift for law in (mass, l2)]
    for a, b in zip(drifts[1e-3], drifts[5e-4]):
        ok = ok and a < 1e-6 and (b <= a / 8 or max(a, b) < ROUND_OFF)
    detail = "mass {:.1e}/{:.1e}, L2 {:.1e}/{:.1e} at dt, dt/2".format(
        drifts[1e-3][0], drifts[5e-4][0], drifts[1e-3][1], drifts[5e-4][1])
    report(9, "mass and L2 drift on 64x64, t_end = 1", ok, time.perf_counter() - t0, 120, detail)


def _mutations(p):
    for mono, c in p.terms:
        yield p + DiffPoly({mono: 1})


def test_criterion_10_point_check():
    t0 = time.perf_counter()
    vec = load_vector(GOLDEN / "prop1.txt", CTX)
    lhs = divergence(vec)
    rhs = labelled("prop1_identity.txt")["RHS"]
    check = random_point_check(lhs, rhs, trials=100)
    ok = check.exact and check.trials >= 100
    missed = 0
    total = 0
    for mutated in _mutations(rhs):
        total += 1
        missed += random_point_check(lhs, mutated, trials=100).exact
    for i in range(3):
        for m in _mutations(vec[i]):
            comps = list(vec)
            comps[i] = m
            total += 1
            missed += random_point_check(divergence(ConservedVector(tuple(comps))), rhs, trials=100).exact
    report(10, "random rational point check of the divergence identity", ok and missed == 0,
           time.perf_counter() - t0, 10, f"{total} single-coefficient mutations, {missed} missed")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:warnings"]))
