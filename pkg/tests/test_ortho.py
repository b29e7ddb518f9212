from fractions import Fraction

import numpy as np
import pytest

from nilgeom import rects
from nilgeom.charts import build_abelian_chart
from nilgeom.errors import NilgeomError
from nilgeom.groups import free_abelian
from nilgeom.ortho import OrthoParams, check_parameters, is_orthogonal, q_upper_bound
from nilgeom.pipeline import orthogonal_sequence
from nilgeom.rough import EqRel
from nilgeom.scenario import load_scenario
from nilgeom.window import ChartAction, build_window

from conftest import scenario_path


def test_q_bound_is_exact():
    assert q_upper_bound(1, 2) == Fraction(1, 4 * 306 * 2 * 2 ** 22) == Fraction(1, 10_267_656_192)
    assert q_upper_bound(2, 3) == Fraction(1, 4 * 306 * 2 * 3 * 2 ** 88)


def strict_setup(q, eps=None):
    G = free_abelian(1)
    A = rects.rec((2 * 36 ** 2 * 2 ** 14 * 2 ** 40,))
    eps = Fraction(1, 2 ** 40) if eps is None else eps
    chart = build_abelian_chart(G, (1,), 2 ** 40 * A.radius[0])
    return chart, OrthoParams(A, eps, q, b=2, mode="strict")


def test_strict_parameters_pass_and_fail_exactly():
    bound = q_upper_bound(1, 2)
    chart, prm = strict_setup(bound - Fraction(1, 10 ** 12))
    rep = check_parameters(chart, prm)
    assert rep.ok, rep.lines()
    chart, prm = strict_setup(bound)
    rep = check_parameters(chart, prm)
    assert not rep.ok and rep.failed() == [f"q < {bound}"]
    chart, prm = strict_setup(bound / 2, eps=bound / 8)
    assert check_parameters(chart, prm).failed() == ["8 eps < q"]


def test_strict_dom_too_small_fails():
    G = free_abelian(1)
    chart, prm = strict_setup(q_upper_bound(1, 2) / 2)
    small = build_abelian_chart(G, (1,), 2 ** 39 * prm.A.radius[0])
    assert "2^(40l).A inside dom" in check_parameters(small, prm).failed()


def boundary_points(labels, a):
    n = len(labels)
    return {x for x in range(n) if labels[(x - a) % n] != labels[(x + a) % n]}


@pytest.mark.parametrize("shift,expect", [(20, True), (3, False), (0, False)])
def test_orthogonality_against_distance_oracle(shift, expect):
    n, A, spread = 400, rects.rec((2,)), 2
    ca = ChartAction(build_abelian_chart(free_abelian(1), (1,), 50), build_window(free_abelian(1), n))
    E = EqRel.from_labels(np.arange(n) // 40)
    F = EqRel.from_labels(((np.arange(n) + shift) % n) // 40)
    be, bf = boundary_points(E.labels, 2), boundary_points(F.labels, 2)
    reach = 2 * spread * 2
    circ = lambda x, y: min((x - y) % n, (y - x) % n)
    oracle = all(circ(x, y) > reach for x in be for y in bf)
    assert oracle == expect
    assert bool(is_orthogonal(E, F, ca, A, spread)) == expect


@pytest.fixture(scope="module")
def wide_run():
    return orthogonal_sequence(load_scenario(scenario_path("z1_wide")), count=2, cluster_points=4)


def test_wide_sequence_is_certified(wide_run):
    assert wide_run.ok, wide_run.lines()
    assert len(wide_run.relations) == 2
    assert all(rc.ok for rc in wide_run.rect)


def test_block_radii_stay_in_range(wide_run):
    prm = wide_run.level.prm
    p, a = prm.p_value, prm.A.radius[0]
    for cert in wide_run.certs:
        for d in cert.radii.values():
            assert all(p * a <= t <= 2 * p * a for t in d)


def test_relations_cover_every_point(wide_run):
    for F in wide_run.relations:
        sizes = np.bincount(F.labels)
        assert sizes.sum() == len(F.labels)
        assert sizes.max() <= 2 * (9 * 2 * 64 * 16 + 1)


def test_small_p_runs_out_of_radii():
    s = load_scenario(scenario_path("z1_small"))
    run = orthogonal_sequence(s, count=2, cluster_points=2)
    assert len(run.relations) == 1
    assert run.failure.startswith("F_2: no admissible radius")
    with pytest.raises(NilgeomError):
        orthogonal_sequence(load_scenario(scenario_path("heis")))
