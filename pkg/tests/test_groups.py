import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilgeom.errors import ParseError
from nilgeom.groups import (Subgroup, conjugator_search, cyclic, direct_product, format_element,
                            format_group, free_abelian, heisenberg, hirsch_length, hx_subgroup, hx_word,
                            parse_element, parse_group, truncated_sum)

CATALOG = [free_abelian(1), free_abelian(3), cyclic(7), heisenberg(),
           direct_product(heisenberg(), free_abelian(1)), truncated_sum(heisenberg(), 2)]


def matrix(g):
    # (a, b, c) as an upper unitriangular integer matrix
    a, b, c = g
    return np.array([[1, -b, c], [0, 1, a], [0, 0, 1]], dtype=object)


def from_matrix(m):
    return (m[1, 2], -m[0, 1], m[0, 2])


def elements(G, bound=20):
    return st.tuples(*[st.integers(-bound, bound)] * G.dim).map(G.reduce)


@pytest.mark.parametrize("G", CATALOG, ids=format_group)
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_group_axioms(G, data):
    g, h, k = (data.draw(elements(G)) for _ in range(3))
    assert G.mul(G.mul(g, h), k) == G.mul(g, G.mul(h, k))
    assert G.mul(g, G.inv(g)) == G.identity
    assert G.mul(G.identity, g) == g


@settings(max_examples=300, deadline=None)
@given(g=st.tuples(*[st.integers(-50, 50)] * 3), h=st.tuples(*[st.integers(-50, 50)] * 3))
def test_heisenberg_matches_upper_unitriangular_matrices(g, h):
    H = heisenberg()
    assert H.mul(g, h) == from_matrix(matrix(g).dot(matrix(h)))


def test_heisenberg_commutator_is_central():
    H = heisenberg()
    a, b = (1, 0, 0), (0, 1, 0)
    comm = H.commutator(a, b)
    assert comm[:2] == (0, 0) and comm[2] != 0
    for g in itertools.product(range(-2, 3), repeat=3):
        assert H.mul(comm, g) == H.mul(g, comm)


def test_array_product_agrees_with_scalar_product():
    rng = np.random.default_rng(1)
    for G in CATALOG:
        g = rng.integers(-9, 10, (50, G.dim))
        h = rng.integers(-9, 10, (50, G.dim))
        got = G.mul_arr(g, h)
        for i in range(50):
            assert tuple(int(t) for t in got[i]) == G.mul(G.reduce(g[i]), G.reduce(h[i]))


@pytest.mark.parametrize("G", CATALOG, ids=format_group)
def test_group_text_round_trip(G):
    assert parse_group(format_group(G)) == G


@given(st.lists(st.integers(-10**6, 10**6), max_size=6))
def test_element_text_round_trip(g):
    assert parse_element(format_element(tuple(g))) == tuple(g)


@pytest.mark.parametrize("text", ["", "Q", "Z^", "C0", "sum(Z, 0)", "(Z"])
def test_bad_group_text_is_rejected(text):
    with pytest.raises(ParseError):
        parse_group(text)


def test_hirsch_length():
    assert hirsch_length(heisenberg()) == 3
    assert hirsch_length(direct_product(cyclic(5), free_abelian(2))) == 2


def test_subgroup_membership_by_lattice():
    Z2 = free_abelian(2)
    H = Subgroup(Z2, ((2, 0), (0, 3)))
    for g in itertools.product(range(-6, 7), repeat=2):
        assert H.contains(g) == (g[0] % 2 == 0 and g[1] % 3 == 0)


def test_center_of_heisenberg():
    H = heisenberg()
    Z = Subgroup(H, ((0, 0, 1),))
    assert Z.contains((0, 0, -5)) is True
    assert Z.contains((1, 0, 0)) is False


@given(st.lists(st.integers(0, 1), min_size=1, max_size=4))
def test_hx_word_recovers_x(x):
    assert hx_word(hx_subgroup(x)) == tuple(x)


def test_conjugator_inconclusive_beyond_bound():
    r = conjugator_search(hx_subgroup((0,)), hx_subgroup((1,)), bound=0)
    assert r.status == "inconclusive"
