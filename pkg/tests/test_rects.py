import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nilgeom.errors import ParseError, ShapeError
from nilgeom.rects import (LAW_CLAUSES, Rect, cardinality, contains, format_rect, meets, member,
                           minkowski_sum, parse_rect, rect_array, scale, verify_rect_laws)


@st.composite
def rects(draw, ell=None, rmax=5):
    ell = draw(st.integers(1, 2)) if ell is None else ell
    center = draw(st.tuples(*[st.integers(-6, 6)] * ell))
    radius = draw(st.tuples(*[st.integers(0, rmax)] * ell))
    gamma = draw(st.sampled_from([(), (2,), (3,)]))
    return Rect(center, radius, gamma)


def points(A: Rect) -> set:
    """Brute-force point set straight from the box definition."""
    axes = [range(c - r, c + r + 1) for c, r in zip(A.center, A.radius)]
    return set(itertools.product(*axes, *[range(m) for m in A.gamma]))


@given(rects())
def test_enumeration_matches_box(A):
    got = [tuple(int(t) for t in v) for v in rect_array(A)]
    assert len(got) == cardinality(A) == len(points(A))
    assert set(got) == points(A)
    assert all(member(v, A) for v in got)


@settings(max_examples=200)
@given(st.data())
def test_containment_and_meeting_match_point_sets(data):
    A = data.draw(rects())
    B = data.draw(rects(ell=A.ell))
    B = Rect(B.center, B.radius, A.gamma)
    assert contains(A, B) == (points(B) <= points(A))
    assert meets(A, B) == bool(points(A) & points(B))


@settings(max_examples=200)
@given(st.data())
def test_minkowski_sum_matches_pairwise_sums(data):
    A = data.draw(rects(rmax=3))
    B = data.draw(rects(ell=A.ell, rmax=3))
    B = Rect(B.center, B.radius, A.gamma)
    ell = A.ell
    sums = {tuple(a + b for a, b in zip(u[:ell], v[:ell])) for u in points(A) for v in points(B)}
    assert sums == {v[:ell] for v in points(minkowski_sum(A, B))}


@given(rects(), st.fractions(Fraction(1, 10), Fraction(5), max_denominator=12))
def test_scale_floors_each_radius(A, lam):
    S = scale(lam, A)
    assert S.center == A.center
    for r, s in zip(A.radius, S.radius):
        assert s <= lam * r < s + 1


@given(rects())
def test_rect_text_round_trip(A):
    assert parse_rect(format_rect(A)) == A


@pytest.mark.parametrize("text", ["rect()", "rect(center=[1]; radius=[]; gamma=[])",
                                  "rect(center=[0]; radius=[-1]; gamma=[])", "box(center=[0])"])
def test_bad_rect_text_is_rejected(text):
    with pytest.raises((ParseError, ShapeError)):
        parse_rect(text)


def test_rect_laws_small_run():
    rep = verify_rect_laws(trials=300, seed=7)
    assert rep.ok, rep.lines()
    assert set(rep.instances) == set(LAW_CLAUSES)
    assert all(n > 0 for n in rep.instances.values())
