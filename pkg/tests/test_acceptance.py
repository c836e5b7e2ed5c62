"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Reference constants are frozen from independent computations (see the
comments next to each).  Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest

from geoentropy import checks, zoo
from geoentropy.entropy import bowen_dinaburg, estimate_entropy, max_separated
from geoentropy.manifold import build_circle, build_torus
from geoentropy.paths import build_move_graph, default_quantum, walk_counts
from geoentropy.pursuit import _all_ordered_pairs, _delta_pairs
from geoentropy.structure import direct_sum

from oracles import random_metric

# log of the largest eigenvalue of [[2,1],[1,1]], from numpy.linalg.eigvals
CAT_H_TOP = 0.9624236501192069

# shared settings of the positive-entropy runs
CAT_R_GRID = [0.5, 1, 1.5, 2, 2.5, 3]
PURSUIT_EPS = [0.3]
BD_EPS = [0.15]
BEAM = "beam:64"


def _line(request, number, passed, detail, t0):
    msg = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({time.time() - t0:.1f}s) {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n" + msg)


def _failures(rep):
    return [f"{a.name} measured={a.measured!r} bound={a.bound!r}" for a in rep.assertions if not a.passed]


def _axiom_instances():
    c8, t42 = build_circle(8), build_torus(4, 2)
    return [
        zoo.build("zero-field", c8),
        zoo.build("rotation-circle", c8),
        zoo.build("riemannian-torus", c8),
        zoo.build("zero-field", t42),
        zoo.build("riemannian-torus", t42),
    ]


def test_criterion_1_metric_axioms(request):
    t0 = time.time()
    # T = 4 with r in {2, 4, 6, 8}: quantum 1, so every speed level moves whole grid cells on both samples
    rep = checks.metric_axioms(_axiom_instances(), [2, 4, 6, 8], T=4)
    elapsed = time.time() - t0
    ok = rep.passed and elapsed < 60
    _line(request, 1, ok, f"{len(rep.assertions)} assertions, failures={_failures(rep)}", t0)
    assert ok, _failures(rep)


def test_criterion_2_homogeneity(request):
    t0 = time.time()
    rep = checks.homogeneity(_axiom_instances(), [2, 5], [1, 2, 3, 4], T=2, epsilon_grid=[0.6, 1.0])
    # a positive-entropy instance so the slope ratio is not 0/0
    cat = checks.homogeneity([zoo.build("catmap-suspension", n=12, levels=4)], [2, 5], [0.5, 1, 1.5], T=1,
                             epsilon_grid=[0.3, 0.5])
    ratios = [a.measured for a in cat.assertions if "slope ratio" in a.name]
    elapsed = time.time() - t0
    ok = rep.passed and cat.passed and elapsed < 60 and all(r is not None for r in ratios)
    _line(request, 2, ok, f"catmap slope ratios={ratios}, failures={_failures(rep) + _failures(cat)}", t0)
    assert ok


def test_criterion_3_zero_entropy(request):
    t0 = time.time()
    structs = [zoo.build("riemannian-torus", build_torus(6, 2)), zoo.build("contact-torus3", n=6)]
    rep = checks.zero_entropy(structs, [1, 2, 3, 4], [0.25, 0.5, 1.0, 1.5], T=2)
    shell = checks.zero_entropy([zoo.build("poisson-sphere-shell")], [1, 2, 3, 4], [0.5, 1.0, 1.5], T=2,
                                check_range=False)
    measured = [(a.name, round(float(a.measured), 4)) for a in rep.assertions + shell.assertions if "slope" not in a.name]
    elapsed = time.time() - t0
    ok = rep.passed and shell.passed and elapsed < 600
    _line(request, 3, ok, f"ranges={measured}, failures={_failures(rep) + _failures(shell)}", t0)
    assert ok


def test_criterion_4_vector_field_theorem(request):
    t0 = time.time()
    assert zoo.CAT_ENTROPY == pytest.approx(CAT_H_TOP, abs=1e-15)
    lin = checks.vector_theorem("linear-torus-flow", {}, CAT_R_GRID, PURSUIT_EPS, BD_EPS, mode=BEAM, top_ref=0.0)
    cat = checks.vector_theorem("catmap-suspension", {"n": 48, "levels": 4}, CAT_R_GRID, PURSUIT_EPS, BD_EPS,
                                mode=BEAM, top_ref=CAT_H_TOP, top_tol=0.25, h_tol=0.4)
    got = {a.name: a.measured for a in lin.assertions + cat.assertions}
    elapsed = time.time() - t0
    ok = lin.passed and cat.passed and elapsed < 900
    _line(request, 4, ok, f"{got}", t0)
    assert ok, _failures(lin) + _failures(cat)


def test_criterion_5_additivity(request):
    t0 = time.time()
    c4 = build_circle(4)
    pairs = [
        (zoo.build("riemannian-torus", c4), zoo.build("rotation-circle", c4)),
        (zoo.build("zero-field", c4), zoo.build("riemannian-torus", c4)),
    ]
    exact = [checks.additivity(a, b, [0.5, 1, 2], T=3) for a, b in pairs]
    cat = zoo.build("catmap-suspension", n=24, levels=4)
    kw = dict(T=1, mode=BEAM, window="unsaturated")
    h1 = estimate_entropy(cat, CAT_R_GRID, PURSUIT_EPS, **kw).h
    hs = estimate_entropy(direct_sum(cat, zoo.build("zero-field", c4)), CAT_R_GRID, PURSUIT_EPS, **kw).h
    rel = abs(hs - h1) / h1
    elapsed = time.time() - t0
    ok = all(r.passed for r in exact) and rel <= 0.15 and elapsed < 900
    _line(request, 5, ok, f"factorization exact={[r.passed for r in exact]}, h(cat)={h1:.4f} h(sum)={hs:.4f} "
                          f"rel.diff={rel:.4f}", t0)
    assert ok


def test_criterion_6_poisson(request):
    t0 = time.time()
    flat = checks.poisson("linear-torus-flow", {}, CAT_R_GRID, PURSUIT_EPS, BD_EPS, mode=BEAM, expect_zero=True)
    hyper = checks.poisson("catmap-suspension", {"n": 24, "levels": 4}, CAT_R_GRID, PURSUIT_EPS, BD_EPS, mode=BEAM,
                           rel_tol=0.25)
    got = {a.name: (a.measured, a.bound) for a in flat.assertions + hyper.assertions}
    elapsed = time.time() - t0
    ok = flat.passed and hyper.passed and elapsed < 1200
    _line(request, 6, ok, f"{got}", t0)
    assert ok


def _random_instance(rng):
    choices = [
        lambda n: zoo.build("riemannian-torus", build_torus(n, 1)),
        lambda n: zoo.build("rotation-circle", n=n),
        lambda n: zoo.build("reeb-like-distribution", n=n),
        lambda n: zoo.build("riemannian-torus", build_torus(max(2, n // 2), 2)),
    ]
    g = choices[rng.integers(len(choices))](int(rng.integers(3, 7)))
    return g, float(rng.choice([0.25, 0.5, 1.0])), int(rng.integers(1, 4)), int(rng.choice([1, 2, 4]))


def test_criterion_7_oracle_equivalence(request):
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst, equal_runs, bad, below = 0.0, 0, [], 0
    for k in range(50):
        g, r, T, width = _random_instance(rng)
        mg = build_move_graph(g, r, T, quantum=default_quantum(r, g.norm_scale))
        xs, ys = _all_ordered_pairs(np.arange(len(g.manifold)))
        full, fex = _delta_pairs(xs, ys, mg, mg, "exhaustive")
        beam, bex = _delta_pairs(xs, ys, mg, mg, f"beam:{width}:{k}")
        wide_w = int(walk_counts(mg, T).max())
        wide, wex = _delta_pairs(xs, ys, mg, mg, f"beam:{wide_w}:{k}")
        worst = max(worst, float((beam - full).max()))
        below += int(np.count_nonzero(beam < full))
        if not (fex.all() and wex.all() and np.array_equal(wide, full) and np.all(beam <= full + 1e-12)):
            bad.append(k)
        if np.array_equal(full[bex], beam[bex]):
            equal_runs += 1
    sandwich_bad = 0
    for k in range(50):
        n = int(rng.integers(2, 21))
        d = random_metric(rng, n)
        eps = float(rng.uniform(0.05, 1.0))
        lo = max_separated(d, 2 * eps, "exact").N
        mid = max_separated(d, eps, "greedy").N
        hi = max_separated(d, eps, "exact").N
        sandwich_bad += not (lo <= mid <= hi)
    elapsed = time.time() - t0
    ok = not bad and equal_runs == 50 and sandwich_bad == 0 and elapsed < 120
    _line(request, 7, ok, f"max(beam - exhaustive)={worst!r}, pairs where beam is strictly below={below}, bad instances={bad}, sandwich violations={sandwich_bad}",
          t0)
    assert ok


def _variant_instances():
    return [
        zoo.build("zero-field"),
        zoo.build("rotation-circle"),
        zoo.build("linear-torus-flow", n=8),
        zoo.build("catmap-suspension", n=8, levels=4),
        zoo.build("riemannian-torus", build_torus(4, 2)),
        zoo.build("contact-torus3", n=4),
        zoo.build("reeb-like-distribution", n=6),
        zoo.build("poisson-pi-x", inner_params={"n": 6}),
        zoo.build("poisson-sphere-shell"),
    ]


def test_criterion_8_variant_ordering(request):
    t0 = time.time()
    failures, count = [], 0
    for g in _variant_instances():
        mesh = g.manifold.mesh_scale
        rep = checks.variant_ordering([g], [1, 2, 3, 4], [2.5 * mesh, 4 * mesh], T=1)
        failures += _failures(rep)
        count += len(rep.assertions)
    ok = not failures
    _line(request, 8, ok, f"{count} assertions over {len(_variant_instances())} zoo instances, failures={failures}", t0)
    assert ok


def test_criterion_9_lemma_bound(request):
    t0 = time.time()
    structs = [zoo.build("riemannian-torus", build_torus(6, 2)), zoo.build("rotation-circle", n=8)]
    rep = checks.lemma_bound(structs, [1, 2, 3, 4], [0.25, 0.5, 1, 2], T=2)
    got = [(a.name, a.measured) for a in rep.assertions]
    ok = rep.passed
    _line(request, 9, ok, f"{got}", t0)
    assert ok, _failures(rep)
