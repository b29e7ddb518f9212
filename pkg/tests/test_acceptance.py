"""Acceptance criteria 1-11, one recorded PASS/FAIL line each."""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from nilgeom import rects
from nilgeom.charts import build_chart_free, build_chart_general, verify_chart
from nilgeom.cli import run
from nilgeom.groups import (Subgroup, conjugator_search, cyclic, direct_product, free_abelian, heisenberg,
                            hx_subgroup, truncated_sum)
from nilgeom.markers import build_marker_set, partition_marker, symmetric_closure, verify_marker_set
from nilgeom.ortho import OrthoParams, check_parameters, q_upper_bound
from nilgeom.charts import build_abelian_chart
from nilgeom.pipeline import (agreement_threshold, build_free_array, e0_encode, orthogonal_sequence,
                              verify_eventual_agreement)
from nilgeom.rects import LAW_CLAUSES, verify_rect_laws
from nilgeom.rough import EqRel, boundary
from nilgeom.scenario import load_scenario
from nilgeom.window import ChartAction, build_window

from conftest import SCENARIOS, record, scenario_path

BUNDLED = sorted(p.stem for p in SCENARIOS.glob("*.cfg"))


def test_criterion_01_rectangle_laws():
    start = time.perf_counter()
    rep = verify_rect_laws(trials=10_000, seed=0)
    elapsed = time.perf_counter() - start
    counts = min(rep.instances.get(name, 0) for name in LAW_CLAUSES)
    bad = sum(len(v) for v in rep.counterexamples.values())
    ok = rep.ok and counts >= 10_000 and elapsed < 60
    assert record(1, ok, f"{len(LAW_CLAUSES)} laws x >= {counts} instances, {bad} counterexamples, "
                         f"{elapsed:.1f}s"), rep.lines()


def heis_matrix(g):
    a, b, c = g
    return np.array([[1, -b, c], [0, 1, a], [0, 0, 1]], dtype=object)


def test_criterion_02_group_laws():
    rng = np.random.default_rng(0)
    catalog = [free_abelian(2), cyclic(12), heisenberg(), direct_product(heisenberg(), cyclic(5)),
               truncated_sum(heisenberg(), 2)]
    failures = []
    for G in catalog:
        trip = rng.integers(-30, 31, (10_000, 3, G.dim))
        for g, h, k in trip:
            g, h, k = G.reduce(g), G.reduce(h), G.reduce(k)
            if G.mul(G.mul(g, h), k) != G.mul(g, G.mul(h, k)) or G.mul(g, G.inv(g)) != G.identity:
                failures.append((G, g, h, k))
    H = heisenberg()
    mismatch = 0
    for g, h in rng.integers(-10 ** 6, 10 ** 6, (10_000, 2, 3)):
        g, h = tuple(int(t) for t in g), tuple(int(t) for t in h)
        m = heis_matrix(g).dot(heis_matrix(h))
        mismatch += H.mul(g, h) != (m[1, 2], -m[0, 1], m[0, 2])
    ok = not failures and mismatch == 0
    assert record(2, ok, f"{len(catalog)} groups x 10^4 triples, {len(failures)} law failures; "
                         f"Heisenberg vs matrices: {mismatch}/10^4 mismatches")


def test_criterion_03_chart_axioms():
    H = heisenberg()
    chart = build_chart_free(H, [(1, 0, 0), (0, 1, 0)], 4)
    region = rects.scale(3, chart.zee)
    pairs = rects.cardinality(region) ** 2
    full = verify_chart(chart, "exhaustive", budget=pairs)
    small = verify_chart(chart.with_zee(rects.rec((1, 1, 1))), "exhaustive")
    named = small.counterexamples[0][0] if small.counterexamples else None
    general = build_chart_general(H, [Subgroup(H, ((0, 0, 1),))], [(1, 0, 0), (0, 1, 0)], 4, 3)
    grep = verify_chart(general, "exhaustive")
    ok = full.ok and pairs >= 10_000 and named is not None and grep.ok and general.ell <= 3
    assert record(3, ok, f"free chart {pairs} pairs ok={full.ok}; undersized zee -> {named} counterexample "
                         f"{small.counterexamples[0][1:3] if named else '-'}; general chart l={general.ell} "
                         f"ok={grep.ok}")


def test_criterion_04_markers():
    w = build_window(free_abelian(1), 100)
    F = np.arange(-2, 3).reshape(-1, 1)
    m = build_marker_set(w, F)
    ok_sets, why = verify_marker_set(w, m)
    members = set(int(y) for y in m.members)
    separated = all((b - a) % 100 not in {1, 2, 98, 99} for a in members for b in members if a != b)
    covered = all(any((x - y) % 100 in {0, 1, 2, 98, 99} for y in members) for x in range(100))
    rng = np.random.default_rng(4)
    worst = 0
    over = 0
    for _ in range(1000):
        shifts = rng.choice(np.arange(1, 20), size=rng.integers(1, 5), replace=False)
        Fr = symmetric_closure(w.group, shifts.reshape(-1, 1))
        Y = np.flatnonzero(rng.random(100) < rng.uniform(0.1, 1.0))
        if not len(Y):
            continue
        k = len(partition_marker(w, Fr, Y))
        worst = max(worst, k - len(Fr))
        over += k > len(Fr) + 1
    ok = ok_sets and separated and covered and 20 <= len(members) <= 33 and over == 0
    assert record(4, ok, f"|Y|={len(members)}, verifier {why}, oracle separated={separated} "
                         f"covered={covered}; partitions over |F|+1: {over}/1000 (max k-|F| = {worst})")


def test_criterion_05_boundary_oracle():
    ca = ChartAction(build_abelian_chart(free_abelian(1), (1,), 40), build_window(free_abelian(1), 100))
    E = EqRel.from_labels(np.arange(100) // 10)
    got = set(int(x) for x in np.flatnonzero(boundary(E, ca, rects.rec((2,)), 1)))
    # oracle: the two 1-faces of [x-2, x+2] are the points x-2 and x+2
    oracle = {x for x in range(100) if E.labels[(x - 2) % 100] != E.labels[(x + 2) % 100]}
    expected = {x for x in range(100) if x % 10 in {8, 9, 0, 1}}
    ok = got == oracle == expected
    assert record(5, ok, f"|boundary|={len(got)}, matches oracle={got == oracle}, "
                         f"matches x mod 10 in {{8,9,0,1}}={got == expected}")


def small_p_scenarios():
    out = []
    for name in BUNDLED:
        s = load_scenario(scenario_path(name))
        lv = s.levels[0]
        if lv.mode == "relaxed" and lv.p is not None and lv.p <= 8 and len(s.levels) == 1:
            out.append(s)
    return out


def test_criterion_06_orthogonalizer_round_trip():
    details, ok = [], True
    for s in small_p_scenarios():
        start = time.perf_counter()
        run_ = orthogonal_sequence(s, count=2, cluster_points=4)
        elapsed = time.perf_counter() - start
        packed = max((r.info.get("packing", 0) for r in run_.clusters), default=0)
        good = run_.ok and len(run_.relations) == 2 and elapsed < 600
        ok &= good
        details.append(f"{s.name} (l={run_.level.ell}, p={run_.level.prm.p_value}): "
                       f"{'ok' if good else run_.failure}, max packing {packed}")
    ok &= bool(details)
    assert record(6, ok, "; ".join(details) or "no p <= 8 scenario bundled")


def test_criterion_07_parameter_symbolics():
    bound = q_upper_bound(1, 2)
    exact = bound == Fraction(1, 4 * 306 * 2 * 2 ** 22) == Fraction(1, 10_267_656_192)
    A = rects.rec((2 * 36 ** 2 * 2 ** 14 * 2 ** 40,))
    chart = build_abelian_chart(free_abelian(1), (1,), 2 ** 40 * A.radius[0])
    eps = Fraction(1, 2 ** 40)
    cases = [(bound - Fraction(1, 10 ** 12), True), (bound, False), (bound + Fraction(1, 10 ** 12), False),
             (8 * eps, False)]
    right = [check_parameters(chart, OrthoParams(A, eps, q, b=2, mode="strict")).ok == want
             for q, want in cases]
    ok = exact and all(right)
    assert record(7, ok, f"q bound = {bound}; {sum(right)}/{len(cases)} parameter sets classified correctly")


def test_criterion_08_diagonalization():
    s = load_scenario(scenario_path("z1_z2"))
    state = build_free_array(s, columns=4, strict=False)
    detail = f"{s.name} N={s.period}: columns built {state.columns}/4"
    if not state.ok:
        detail += f"; {state.failure}"
    ok = state.ok and state.columns == 4
    if ok:
        rep = verify_eventual_agreement(state, samples=1000, seed=s.seed)
        ok = rep.ok
        detail += f"; agreement violations {len(rep.violations)}"
    assert record(8, ok, detail)


def test_criterion_09_e0_coding(wide_array):
    details, ok = [], True
    for name in BUNDLED:
        s = load_scenario(scenario_path(name))
        if name == "z1_wide":
            state = wide_array
        else:
            state = build_free_array(s, strict=False)
        npts = state.window.n_points
        if npts > 100_000:
            details.append(f"{name}: {npts} points, beyond the exhaustive range")
            continue
        if state.columns == 0:
            ok = False
            details.append(f"{name}: no array column, nothing to encode")
            continue
        code = e0_encode(state)
        inj, _ = code.injective()
        rng = np.random.default_rng(s.seed)
        bad = checked = 0
        for lv in state.levels:
            for g in lv.generators:
                for x in rng.choice(npts, size=min(300, npts), replace=False):
                    y = int(state.window.act(g, [int(x)])[0])
                    m = agreement_threshold(state, int(x), y)
                    if m is None:
                        continue
                    checked += 1
                    bad += not np.array_equal(code.blocks[x, m + 1:], code.blocks[y, m + 1:])
        ok &= inj and bad == 0
        details.append(f"{name}: {state.columns} col, injective={inj}, {checked - bad}/{checked} pairs agree")
    assert record(9, ok, "; ".join(details))


def test_criterion_10_conjugacy_demo():
    start = time.perf_counter()
    H = heisenberg()
    a, b, c = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    identity = H.product([b, H.inv(a), H.inv(b)]) == H.mul(H.inv(a), c)
    wrong = pairs = 0
    for n in (1, 2, 3):
        for x in itertools.product((0, 1), repeat=n):
            for y in itertools.product((0, 1), repeat=n):
                pairs += 1
                r = conjugator_search(hx_subgroup(x), hx_subgroup(y), bound=3)
                expect = tuple(v for i in range(n) for v in (0, y[i] - x[i], 0))
                certified = bool(r.checks) and all(v is True for _, v in r.checks)
                wrong += (r.status == "found") != certified or (r.status == "found" and r.element != expect)
                wrong += r.status != "found"
                diff = [i for i in range(n) if x[i] != y[i]]
                if diff:
                    cut = conjugator_search(hx_subgroup(x), hx_subgroup(y), 3,
                                            support=[i for i in range(n) if i != diff[0]])
                    wrong += cut.status != "none"
    elapsed = time.perf_counter() - start
    ok = identity and wrong == 0 and elapsed < 30
    assert record(10, ok, f"{pairs} word pairs, {wrong} wrong answers, identity holds={identity}, "
                          f"{elapsed:.1f}s")


COMMANDS = [
    ["verify-rects", "--trials", "200"],
    ["verify-chart", "--scenario", str(scenario_path("z1_small"))],
    ["markers", "--scenario", str(scenario_path("z1_small"))],
    ["orthogonalize", "--scenario", str(scenario_path("z1_small")), "--count", "1"],
    ["free-array", "--scenario", str(scenario_path("z1_small")), "--samples", "100"],
    ["e0-encode", "--scenario", str(scenario_path("z1_small")), "--columns", "1", "--samples", "100"],
    ["conjugacy-demo", "--n", "3"],
    ["check-params", "--scenario", str(scenario_path("z1_z2"))],
]


def test_criterion_11_determinism(tmp_path):
    differing = []
    for argv in COMMANDS:
        outs = []
        for rerun in ("a", "b"):
            out = tmp_path / f"{argv[0]}_{rerun}"
            code = run(argv + ["--out", str(out)])
            outs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
        if outs[0] != outs[1]:
            differing.append(argv[0])
    ok = not differing
    assert record(11, ok, f"{len(COMMANDS)} subcommands rerun, differing: {differing or 'none'}")
