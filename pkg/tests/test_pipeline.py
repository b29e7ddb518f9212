import itertools

import numpy as np
import pytest

from nilgeom.errors import ClauseError
from nilgeom.pipeline import (agreement_threshold, build_free_array, e0_encode, verify_eventual_agreement)
from nilgeom.scenario import load_scenario

from conftest import scenario_path


def test_wide_array_builds_all_columns(wide_array):
    assert wide_array.ok, wide_array.report_lines()
    assert wide_array.columns == 4
    assert all((1, n) in wide_array.E for n in range(1, 5))
    assert any("measured only" in line for line in wide_array.report_lines())


def test_top_row_is_the_auxiliary_relation(wide_array):
    for n in range(1, 5):
        assert wide_array.E[(1, n)] is wide_array.F[(1, n)]


def test_clause_v_counters_respect_b(wide_array):
    b = wide_array.levels[0].prm.b
    for counts in wide_array.counters.values():
        assert counts.max() <= b


def test_agreement_counts_against_direct_count(wide_array):
    rep = verify_eventual_agreement(wide_array, samples=300, seed=5)
    assert rep.ok, rep.lines()
    w = wide_array.window
    rng = np.random.default_rng(5)
    pts = np.sort(rng.choice(w.n_points, size=300, replace=False))
    for g in [(1,), (-1,)]:
        worst = 0
        for x in pts:
            y = int(w.act(g, [int(x)])[0])
            worst = max(worst, sum(wide_array.E[(1, n)].labels[x] != wide_array.E[(1, n)].labels[y]
                                   for n in range(1, 5)))
        assert rep.rows[f"level 1 g={g}"]["row_max"] == worst <= 1


def test_e0_code_is_injective_by_direct_set(wide_array):
    code = e0_encode(wide_array)
    words = {tuple(row) for row in code.blocks.tolist()}
    assert len(words) == wide_array.window.n_points
    assert code.injective() == (True, None)


def test_e0_blocks_agree_past_threshold(wide_array):
    code = e0_encode(wide_array)
    w = wide_array.window
    rng = np.random.default_rng(9)
    for x in rng.choice(w.n_points, 300, replace=False):
        x = int(x)
        for g in [(1,), (-1,), (3,)]:
            y = int(w.act(g, [x])[0])
            m = agreement_threshold(wide_array, x, y)
            rels = wide_array.bottom()
            if m is None:
                assert rels[-1].labels[x] != rels[-1].labels[y]
                continue
            assert all(E.labels[x] == E.labels[y] for E in rels[m - 1:])
            assert m == 1 or rels[m - 2].labels[x] != rels[m - 2].labels[y]
            assert np.array_equal(code.blocks[x, m + 1:], code.blocks[y, m + 1:])


def test_e0_word_widths_are_fixed(wide_array):
    code = e0_encode(wide_array)
    lengths = {len(code.word(x)) for x in range(0, wide_array.window.n_points, 997)}
    assert lengths == {sum(code.widths)}


def test_small_p_array_fails_with_a_named_clause():
    s = load_scenario(scenario_path("z1_small"))
    with pytest.raises(ClauseError, match="column 2, row 1"):
        build_free_array(s)
    state = build_free_array(s, strict=False)
    assert state.columns == 1 and not state.ok


def test_torus_array_stops_at_the_scale_check():
    state = build_free_array(load_scenario(scenario_path("z1_z2")), strict=False)
    assert state.columns == 0
    assert "period 60" in str(state.failure)
