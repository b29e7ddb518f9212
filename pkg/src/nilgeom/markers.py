"""Greedy marker sets, their iterated partitions, and least-index selectors."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NilgeomError
from .groups import format_element
from .window import Window


def symmetric_closure(G, elems: np.ndarray) -> np.ndarray:
    """F together with inverses and the identity, deduplicated in first-seen order."""
    elems = np.atleast_2d(np.asarray(elems, dtype=np.int64))
    both = np.concatenate([np.zeros((1, G.dim), np.int64), elems, G.inv_arr(elems)])
    _, first = np.unique(both, axis=0, return_index=True)
    return both[np.sort(first)]


def _check_symmetric(w: Window, F: np.ndarray) -> None:
    G = w.group
    keys = {tuple(int(t) for t in g) for g in F}
    if G.identity not in keys:
        raise NilgeomError("F must contain the identity")
    for g in keys:
        if G.inv(g) not in keys:
            raise NilgeomError(f"F is not symmetric: {g} has no inverse in F")


def order_hash(order: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(order, dtype=np.int64).tobytes()).hexdigest()[:16]


@dataclass
class MarkerSet:
    members: np.ndarray  # sorted point indices
    F: np.ndarray
    Z: np.ndarray  # boolean mask of the target class
    order: str  # hash of the enumeration order

    def dump(self) -> str:
        head = [f"# F = {' '.join(format_element(g) for g in self.F)}",
                f"# Z = {int(self.Z.sum())} points, sha256 {order_hash(np.flatnonzero(self.Z))}",
                f"# order = {self.order}"]
        return "\n".join(head + [str(int(y)) for y in self.members]) + "\n"


def _as_mask(w: Window, Z) -> np.ndarray:
    if Z is None:
        return np.ones(w.n_points, dtype=bool)
    Z = np.asarray(Z)
    if Z.dtype == bool:
        return Z
    mask = np.zeros(w.n_points, dtype=bool)
    mask[Z] = True
    return mask


def build_marker_set(w: Window, F: np.ndarray, Z=None, order: np.ndarray | None = None,
                     check: bool = True) -> MarkerSet:
    """Admit z (in enumeration order) iff z is not already within F of an admitted point."""
    F = np.atleast_2d(np.asarray(F, dtype=np.int64))
    if check:
        _check_symmetric(w, F)
    Zmask = _as_mask(w, Z)
    pts = np.flatnonzero(Zmask)
    if check:
        w.check_local_freeness(F, pts)
    order = np.arange(w.n_points) if order is None else np.asarray(order)
    covered = np.zeros(w.n_points, dtype=bool)
    members = []
    for z in order[Zmask[order]]:
        if covered[z]:
            continue
        members.append(int(z))
        covered[w.act_many(F, int(z))] = True
    return MarkerSet(np.array(sorted(members), dtype=np.int64), F, Zmask, order_hash(order))


def verify_marker_set(w: Window, m: MarkerSet) -> tuple[bool, str]:
    """Exhaustive separation and coverage check by a literal double loop over members."""
    member_set = set(int(y) for y in m.members)
    nontrivial = [g for g in m.F if any(g)]
    for y in m.members:
        for g in nontrivial:
            gy = int(w.act(tuple(int(t) for t in g), [int(y)])[0])
            if gy in member_set:
                return False, f"separation: {format_element(g)} maps member {int(y)} to member {gy}"
    covered = np.zeros(w.n_points, dtype=bool)
    for y in m.members:
        covered[w.act_many(m.F, int(y))] = True
    missing = np.flatnonzero(m.Z & ~covered)
    if len(missing):
        return False, f"coverage: point {int(missing[0])} is not within F of a member"
    return True, "ok"


def partition_marker(w: Window, F: np.ndarray, Y, check: bool = True) -> list[np.ndarray]:
    """Split Y into F-separated classes by repeatedly extracting marker sets."""
    rest = _as_mask(w, Y).copy()
    if check:
        F = np.atleast_2d(np.asarray(F, dtype=np.int64))
        _check_symmetric(w, F)
        w.check_local_freeness(F, np.flatnonzero(rest))
    parts: list[np.ndarray] = []
    while rest.any():
        m = build_marker_set(w, F, rest, check=False)
        parts.append(m.members)
        rest[m.members] = False
    return parts


def _outside_k_regular(w: Window, labels: np.ndarray, K: np.ndarray) -> int | None:
    """On a regular window y lies in K . x iff y x^-1 lies in K; test every same-class pair."""
    G, N = w.group, w.period
    kset = np.unique(w.index_of(K))
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    for members in np.split(order, cuts):
        c = w.rep_coords[members]
        cinv = G.inv_arr(c, N)
        step = max(1, 2_000_000 // len(members))
        for s in range(0, len(members), step):
            prod = G.mul_arr(c[:, None, :], cinv[None, s:s + step, :], N)
            ok = np.isin(w.index_of(prod), kset)
            if not ok.all():
                return int(members[s + np.argwhere(~ok)[0][1]])
    return None


def build_selector(w: Window, labels: np.ndarray, K: np.ndarray) -> np.ndarray:
    """S(x) = least index in [x]_E, after checking [x]_E lies inside K . x for every x."""
    labels = np.asarray(labels)
    K = np.atleast_2d(np.asarray(K, dtype=np.int64))
    n = w.n_points
    least = np.full(n, n, dtype=np.int64)
    np.minimum.at(least, labels, np.arange(n))
    if w.is_regular:
        bad = _outside_k_regular(w, labels, K)
        if bad is not None:
            raise NilgeomError(f"class of point {bad} (label {int(labels[bad])}) is not inside K . x")
        return least[labels]
    size = np.bincount(labels, minlength=n)
    found = np.zeros(n, dtype=np.int64)
    seen_pairs = []
    for g in K:
        y = w.act(tuple(int(t) for t in g), np.arange(n))
        same = labels[y] == labels
        seen_pairs.append(np.arange(n)[same].astype(np.int64) * n + y[same])
    pairs = np.unique(np.concatenate(seen_pairs)) if seen_pairs else np.zeros(0, np.int64)
    np.add.at(found, pairs // n, 1)
    short = np.flatnonzero(found < size[labels])
    if len(short):
        x = int(short[0])
        raise NilgeomError(f"class of point {x} (label {int(labels[x])}) is not inside K . x")
    return least[labels]


def selector_ok(labels: np.ndarray, S: np.ndarray) -> bool:
    labels, S = np.asarray(labels), np.asarray(S)
    same_class = np.all(labels[S] == labels)
    idempotent = np.all(S[S] == S)
    reps = np.unique(S)
    one_per_class = len(reps) == len(np.unique(labels))
    return bool(same_class and idempotent and one_per_class)
