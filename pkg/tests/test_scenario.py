from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nilgeom import rects
from nilgeom.errors import ChartError, ParseError
from nilgeom.groups import free_abelian
from nilgeom.scenario import (Level, Scenario, default_b, format_scenario, level_chart, load_scenario,
                              parse_scenario, validate_scales)

from conftest import SCENARIOS, scenario_path

BUNDLED = sorted(p.stem for p in SCENARIOS.glob("*.cfg"))


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_files_are_canonical(name):
    text = scenario_path(name).read_text()
    assert format_scenario(parse_scenario(text)) == text


def one_level(**kw) -> Scenario:
    lv = Level(spec=free_abelian(1), chart="abelian", generators=((1,),), epsilon=Fraction(1, 2),
               q=Fraction(1, 16), lam=Fraction(100), zee=rects.rec((1,)), A=rects.rec((4,)), p=4)
    return Scenario(name="t", group=free_abelian(1), period=1000, levels=(replace(lv, **kw),))


@given(seed=st.integers(0, 2 ** 31), columns=st.integers(1, 9), p=st.integers(4, 99),
       eps=st.fractions(Fraction(1, 50), Fraction(1), max_denominator=50),
       spread=st.one_of(st.none(), st.integers(1, 9)))
def test_scenario_text_round_trip(seed, columns, p, eps, spread):
    s = replace(one_level(p=p, epsilon=eps, spread=spread), seed=seed, columns=columns)
    assert parse_scenario(format_scenario(s)) == s


@pytest.mark.parametrize("mutate,needle", [
    (lambda t: t.replace("period = 1000", "period = ten"), "period"),
    (lambda t: t.replace("[level 1]", "[level 2]"), "level"),
    (lambda t: t + "colour = blue\n", "colour"),
    (lambda t: t.replace("chart = abelian", "chart = round"), "chart"),
])
def test_malformed_scenarios_are_rejected(mutate, needle):
    text = mutate(format_scenario(one_level()))
    with pytest.raises(ParseError, match=needle):
        parse_scenario(text)


def test_default_b_below_and_at_the_top():
    s = one_level()
    two = replace(s, levels=s.levels * 2, columns=2)
    assert default_b(two, 1, [1, 3]) == 4
    assert default_b(two, 2, [1, 3]) == 4
    assert default_b(replace(two, columns=7), 2, [1, 3]) == 7
    pinned = replace(two, levels=(replace(s.levels[0], b=9), s.levels[0]))
    assert default_b(pinned, 1, [1, 3]) == 9


def test_dom_override_too_small_for_three_zee():
    s = one_level(dom=rects.rec((2,)))
    with pytest.raises(ChartError):
        level_chart(s, 1)
    rep = validate_scales(s)
    assert not rep.ok
    assert rep.failed()[0].name == "level 1: chart builds with 3.zee inside dom"


def test_wide_scenario_validates():
    rep = validate_scales(load_scenario(scenario_path("z1_wide")))
    assert rep.ok, rep.lines()


def test_torus_scenario_period_is_too_small():
    rep = validate_scales(load_scenario(scenario_path("z1_z2")))
    names = [c.name for c in rep.failed()]
    assert "level 1: period 60 exceeds the diameter of 18p.A+1" in names


def test_strict_levels_are_symbolic():
    rep = validate_scales(load_scenario(scenario_path("heis")))
    assert any(c.status == "symbolic" and "strict constants" in c.name for c in rep.checks)
