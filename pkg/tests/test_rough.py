import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from nilgeom import rects
from nilgeom.charts import build_abelian_chart
from nilgeom.groups import free_abelian
from nilgeom.rough import (EqRel, boundary, count_boundary_clusters, not_inside_mask, verify_rectangular,
                           verify_rough)
from nilgeom.window import ChartAction, build_window


def ring_action(n=100, lam=40):
    G = free_abelian(1)
    return ChartAction(build_abelian_chart(G, (1,), lam), build_window(G, n))


def intervals(n, length):
    return EqRel.from_labels(np.arange(n) // length)


def boundary_oracle(n, labels, a):
    """x is on the boundary when the classes of x - a and x + a differ (faces of a 1-d box are points)."""
    return {x for x in range(n) if labels[(x - a) % n] != labels[(x + a) % n]}


def test_boundary_of_interval_classes():
    ca = ring_action()
    E = intervals(100, 10)
    got = set(np.flatnonzero(boundary(E, ca, rects.rec((2,)), 1)))
    assert got == boundary_oracle(100, E.labels, 2)
    assert got == {x for x in range(100) if x % 10 in {8, 9, 0, 1}}


def test_boundary_in_two_dimensions_against_oracle():
    G, n = free_abelian(2), 12
    ca = ChartAction(build_abelian_chart(G, (1, 1), 10), build_window(G, n))
    lab = np.array([(x // n) // 4 * 3 + (x % n) // 4 for x in range(n * n)])
    E = EqRel.from_labels(lab)
    A = rects.rec((2, 1))
    got = set(np.flatnonzero(boundary(E, ca, A, 1)))
    expect = set()
    for x in range(n * n):
        r, c = divmod(x, n)
        minus = {E.labels[((r - 2) % n) * n + (c + t) % n] for t in range(-1, 2)}
        plus = {E.labels[((r + 2) % n) * n + (c + t) % n] for t in range(-1, 2)}
        if not minus & plus:
            expect.add(x)
    assert got == expect


@settings(max_examples=60, deadline=None)
@given(cuts=st.sets(st.integers(1, 17), max_size=6), rows=st.sets(st.integers(1, 17), max_size=6),
       r0=st.integers(0, 3), r1=st.integers(0, 3))
def test_filtered_not_inside_matches_definition(cuts, rows, r0, r1):
    G, n = free_abelian(2), 18
    ca = ChartAction(build_abelian_chart(G, (1, 1), 9), build_window(G, n))
    rband = np.searchsorted(sorted(rows), np.arange(n), side="right")
    cband = np.searchsorted(sorted(cuts), np.arange(n), side="right")
    E = EqRel.from_labels(np.array([rband[x // n] * 10 + cband[x % n] for x in range(n * n)]))
    Z = rects.rec((r0, r1))
    assert ca.coordinate_axes is not None
    fast = not_inside_mask(E, ca, Z)
    expect = np.zeros(n * n, dtype=bool)
    for x in range(n * n):
        r, c = divmod(x, n)
        for dr, dc in itertools.product(range(-r0, r0 + 1), range(-r1, r1 + 1)):
            if E.labels[((r + dr) % n) * n + (c + dc) % n] != E.labels[x]:
                expect[x] = True
                break
    assert np.array_equal(fast, expect)
    ca.__dict__["coordinate_axes"] = None
    assert np.array_equal(not_inside_mask(E, ca, Z), expect)


def test_verify_rough_sandwich():
    ca = ring_action(200, 100)
    A = rects.rec((10,))
    members = np.arange(-11, 12) % 200
    assert verify_rough(members, ca, A, rects.as_fraction("1/4"), 0).ok
    res = verify_rough(np.arange(-14, 12) % 200, ca, A, rects.as_fraction("1/4"), 0)
    assert not res.ok and res.reason == "point outside the outer rectangle"
    res = verify_rough(np.arange(-5, 12) % 200, ca, A, rects.as_fraction("1/4"), 0)
    assert not res.ok and res.reason == "inner rectangle not covered"


def test_interval_classes_are_rectangular():
    ca = ring_action(210, 100)
    E = intervals(210, 21)
    cert = verify_rectangular(E, ca, rects.rec((10,)), "1/2", bound=2)
    assert cert.ok, cert.lines()
    assert len(cert.entries) == 10


def test_ragged_classes_fail_certification():
    ca = ring_action(210, 100)
    lab = np.arange(210) // 21
    lab[5] = 7
    cert = verify_rectangular(EqRel.from_labels(lab), ca, rects.rec((10,)), "1/2", bound=2)
    assert not cert.ok


def test_cluster_packing_counts_boundary_points():
    ca = ring_action(400, 150)
    E = intervals(400, 40)
    rep = count_boundary_clusters(E, ca, rects.rec((16,)), "1/64", "1/8", 1, 0, reach=4, spread=1,
                                  enforce=False)
    assert rep.ok
    assert 1 <= rep.info["packing"] <= 2 ** 22
