import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilgeom.errors import NilgeomError
from nilgeom.groups import free_abelian
from nilgeom.markers import (build_marker_set, build_selector, partition_marker, selector_ok,
                             symmetric_closure, verify_marker_set)
from nilgeom.window import build_window

N = 100
F5 = np.arange(-2, 3).reshape(-1, 1)


@pytest.fixture(scope="module")
def ring():
    return build_window(free_abelian(1), N)


def separated_and_covering(members, F, Y):
    """Direct check on Z/100: no two members differ by a non-zero f, every y is within F of a member."""
    shifts = {int(f) % N for f in F}
    mem = set(int(m) for m in members)
    sep = all((b - a) % N not in shifts - {0} for a in mem for b in mem if a != b)
    cover = all(any((y - m) % N in shifts for m in mem) for y in Y)
    return sep and cover


def test_ring_marker_set(ring):
    m = build_marker_set(ring, F5)
    ok, why = verify_marker_set(ring, m)
    assert ok, why
    assert separated_and_covering(m.members, F5.ravel(), range(N))
    assert 20 <= len(m.members) <= 33


def test_marker_set_on_subset_and_order(ring):
    Y = np.arange(0, N, 3)
    order = np.random.default_rng(2).permutation(N)
    m = build_marker_set(ring, F5, Y, order=order)
    assert set(m.members) <= set(Y)
    assert separated_and_covering(m.members, F5.ravel(), Y)


def test_asymmetric_f_is_rejected(ring):
    with pytest.raises(NilgeomError):
        build_marker_set(ring, np.array([[0], [1]]))


@settings(max_examples=300, deadline=None)
@given(shifts=st.sets(st.integers(1, 12), max_size=4), Y=st.sets(st.integers(0, N - 1), min_size=1))
def test_partition_size_is_bounded(ring, shifts, Y):
    F = symmetric_closure(ring.group, np.array(sorted(shifts), dtype=np.int64).reshape(-1, 1)) \
        if shifts else np.zeros((1, 1), np.int64)
    parts = partition_marker(ring, F, np.array(sorted(Y)))
    assert len(parts) <= len(F)
    assert sorted(np.concatenate(parts).tolist()) == sorted(Y)
    for part in parts:
        assert separated_and_covering(part, F.ravel(), []) or len(part) == 1


def test_selector_picks_least_index(ring):
    labels = np.arange(N) // 10
    S = build_selector(ring, labels, np.arange(-9, 10).reshape(-1, 1))
    assert selector_ok(labels, S)
    assert np.array_equal(S, (np.arange(N) // 10) * 10)


def test_selector_rejects_classes_outside_k(ring):
    labels = np.arange(N) // 10
    with pytest.raises(NilgeomError):
        build_selector(ring, labels, np.arange(-3, 4).reshape(-1, 1))
