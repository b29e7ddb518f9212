import itertools

import numpy as np
import pytest

from nilgeom import rects
from nilgeom.charts import build_abelian_chart, embed_chart
from nilgeom.errors import FreenessError, InjectivityError
from nilgeom.groups import Subgroup, free_abelian, heisenberg
from nilgeom.window import ChartAction, build_coset_window, build_window, realize_chart


def heis_mod(g, n):
    """Reduce Heisenberg coordinates mod n, straight from the definition."""
    return tuple(t % n for t in g)


def test_heisenberg_window_action_matches_group_law():
    H, N = heisenberg(), 5
    w = build_window(H, N)
    assert w.n_points == N ** 3
    coords = {int(x): tuple(int(t) for t in w.rep_coords[x]) for x in range(w.n_points)}
    point = {v: k for k, v in coords.items()}
    rng = np.random.default_rng(0)
    for _ in range(200):
        g = tuple(int(t) for t in rng.integers(-7, 8, 3))
        x = int(rng.integers(w.n_points))
        expect = point[heis_mod(H.mul(g, coords[x]), N)]
        assert int(w.act(g, [x])[0]) == expect


def test_action_is_a_left_action():
    H = heisenberg()
    w = build_window(H, 4)
    pts = np.arange(w.n_points)
    g, h = (1, 2, 3), (3, 1, 2)
    assert np.array_equal(w.act(g, w.act(h, pts)), w.act(H.mul(g, h), pts))


def test_orbits_of_a_sub_lattice():
    w = build_window(free_abelian(2), 6)
    labels = w.orbit_labels([(2, 0), (0, 3)])
    assert len(np.unique(labels)) == 6
    for x, y in itertools.product(range(36), repeat=2):
        a, b = divmod(x, 6), divmod(y, 6)
        same = (a[0] - b[0]) % 2 == 0 and (a[1] - b[1]) % 3 == 0
        assert (labels[x] == labels[y]) == same


def test_coset_window_has_stabilizers():
    G = free_abelian(2)
    w = build_coset_window(G, Subgroup(G, ((1, 0),)), 4)
    assert w.n_points == 4 and not w.is_regular
    with pytest.raises(FreenessError):
        w.check_local_freeness(np.array([[0, 0], [1, 0]]))


def test_realize_rejects_a_wrapping_region():
    w = build_window(free_abelian(1), 10)
    c = build_abelian_chart(free_abelian(1), (1,), 20)
    with pytest.raises(InjectivityError):
        realize_chart(c, w, rects.rec((5,)))
    realize_chart(c, w, rects.rec((4,)))


def test_coordinate_axes_detects_embeddings():
    G = free_abelian(2)
    w = build_window(G, 30)
    c = embed_chart(build_abelian_chart(free_abelian(1), (1,), 8), G, [(0, 1)])
    assert ChartAction(c, w).coordinate_axes == (1,)
    twisted = embed_chart(build_abelian_chart(free_abelian(1), (1,), 8), G, [(1, 1)])
    assert ChartAction(twisted, w).coordinate_axes is None


def test_dilate_matches_pointwise_images():
    G = free_abelian(2)
    w = build_window(G, 12)
    ca = ChartAction(build_abelian_chart(G, (1, 1), 6), w)
    A = rects.rec((2, 1))
    pts = np.array([0, 17, 100])
    expect = set()
    for x in pts:
        expect |= set(int(y) for y in ca.images(A, int(x)))
    assert set(np.flatnonzero(ca.dilate(A, pts))) == expect
