"""Finite windows: periodic quotients of catalog groups and their coset spaces.

The reduced group G_N keeps every infinite coordinate modulo N (the
Heisenberg law survives this reduction) and every cyclic coordinate
modulo its order. Its elements are indexed in mixed radix with the last
coordinate fastest. A regular window is G_N acting on itself by left
translation; a coset window is G_N / H_N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import rects
from .charts import Chart
from .errors import BudgetExceeded, FreenessError, InjectivityError
from .groups import Element, GroupSpec, Subgroup
from .rects import Rect, rect_array


def components(n: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Connected-component labels of an undirected graph on range(n)."""
    graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel so every class id is the least index in the class."""
    labels = np.asarray(labels)
    least = np.full(labels.max() + 1 if len(labels) else 0, len(labels), dtype=np.int64)
    np.minimum.at(least, labels, np.arange(len(labels)))
    return least[labels]


@dataclass
class Window:
    group: GroupSpec
    period: int
    point_of: np.ndarray  # reduced-group index -> point
    reps: np.ndarray  # point -> reduced-group index
    subgroup: Subgroup | None = None
    radices: tuple[int, ...] = field(default=())

    @property
    def n_points(self) -> int:
        return len(self.reps)

    @property
    def size_reduced(self) -> int:
        return len(self.point_of)

    @property
    def is_regular(self) -> bool:
        return self.subgroup is None

    @cached_property
    def strides(self) -> np.ndarray:
        out = np.ones(len(self.radices), dtype=np.int64)
        for j in range(len(self.radices) - 2, -1, -1):
            out[j] = out[j + 1] * self.radices[j + 1]
        return out

    def reduce(self, elems: np.ndarray) -> np.ndarray:
        return self.group.reduce_arr(elems, self.period)

    def index_of(self, elems: np.ndarray) -> np.ndarray:
        elems = self.reduce(elems)
        return elems @ self.strides if len(self.radices) else np.zeros(elems.shape[:-1], np.int64)

    def coords_of(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (len(self.radices),), dtype=np.int64)
        for j, (s, r) in enumerate(zip(self.strides, self.radices)):
            out[..., j] = (idx // s) % r
        return out

    @cached_property
    def rep_coords(self) -> np.ndarray:
        return self.coords_of(self.reps)

    def act(self, g: Sequence[int], pts: np.ndarray) -> np.ndarray:
        """g . x for each point x in ``pts``."""
        g = np.asarray(self.group.check(g), dtype=np.int64)
        prod = self.group.mul_arr(g, self.rep_coords[np.asarray(pts)], self.period)
        return self.point_of[self.index_of(prod)]

    def act_many(self, elems: np.ndarray, x: int) -> np.ndarray:
        """g . x for each element g in ``elems``."""
        prod = self.group.mul_arr(np.asarray(elems, dtype=np.int64), self.rep_coords[x], self.period)
        return self.point_of[self.index_of(prod)]

    def act_grid(self, elems: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Matrix of g . x with rows indexed by elements and columns by points."""
        elems = np.asarray(elems, dtype=np.int64)
        prod = self.group.mul_arr(elems[:, None, :], self.rep_coords[np.asarray(pts)][None, :, :],
                                  self.period)
        return self.point_of[self.index_of(prod)]

    # -- stabilizers -------------------------------------------------------

    def reduced_subgroup(self, H: Subgroup) -> np.ndarray:
        """Sorted reduced-group indices of the image of H in G_N."""
        gens = [np.asarray(h, dtype=np.int64) for h in H.generators]
        n = self.size_reduced
        if not gens:
            return np.zeros(1, dtype=np.int64)
        allc = self.coords_of(np.arange(n))
        src, dst = [], []
        for h in gens:
            src.append(np.arange(n))
            dst.append(self.index_of(self.group.mul_arr(allc, h, self.period)))
        labels = components(n, np.concatenate(src), np.concatenate(dst))
        return np.flatnonzero(labels == labels[0])

    def stabilizer(self, x: int) -> np.ndarray:
        """Sorted reduced-group indices fixing point x."""
        if self.subgroup is None:
            return np.zeros(1, dtype=np.int64)
        rep = self.rep_coords[x]
        hbar = self.coords_of(self._hbar)
        conj = self.group.mul_arr(self.group.mul_arr(rep, hbar, self.period),
                                  self.group.inv_arr(rep, self.period), self.period)
        return np.sort(self.index_of(conj))

    @cached_property
    def _hbar(self) -> np.ndarray:
        return self.reduced_subgroup(self.subgroup) if self.subgroup is not None else np.zeros(1, np.int64)

    def xh_mask(self, calH: Sequence[Subgroup] | None) -> np.ndarray:
        """Points whose stabilizer (in G_N) is the image of some member of calH."""
        if calH is None:
            targets = [np.zeros(1, dtype=np.int64)]
        else:
            targets = [self.reduced_subgroup(H) for H in calH]
        if self.subgroup is None:
            ok = any(len(t) == 1 and t[0] == 0 for t in targets)
            return np.full(self.n_points, ok, dtype=bool)
        keys = {t.tobytes() for t in targets}
        return np.array([self.stabilizer(x).tobytes() in keys for x in range(self.n_points)])

    def check_local_freeness(self, F: np.ndarray, pts: np.ndarray | None = None) -> None:
        """Raise FreenessError if some g in F other than the identity fixes a point in ``pts``."""
        F = np.asarray(F, dtype=np.int64)
        pts = np.arange(self.n_points) if pts is None else np.asarray(pts)
        nontrivial = np.any(F != 0, axis=1) if len(F) else np.zeros(0, bool)
        for g, nz in zip(F, nontrivial):
            if not nz:
                continue
            moved = self.act(tuple(int(t) for t in g), pts)
            fixed = np.flatnonzero(moved == pts)
            if len(fixed):
                raise FreenessError(f"{tuple(int(t) for t in g)} fixes point {int(pts[fixed[0]])}",
                                    x=int(pts[fixed[0]]), g=tuple(int(t) for t in g))

    def orbit_labels(self, generators: Sequence[Sequence[int]]) -> np.ndarray:
        n = self.n_points
        src, dst = [np.arange(n)], [np.arange(n)]
        for g in generators:
            src.append(np.arange(n))
            dst.append(self.act(g, np.arange(n)))
        return canonical_labels(components(n, np.concatenate(src), np.concatenate(dst)))

    def describe(self) -> str:
        kind = "regular" if self.subgroup is None else "coset"
        return f"{kind} window of {self.group} mod {self.period}: {self.n_points} points"


def _radices(G: GroupSpec, N: int) -> tuple[int, ...]:
    return tuple(m if m else N for m in G.moduli)


def build_window(G: GroupSpec, N: int, budget: int = 10_000_000) -> Window:
    if N < 2:
        raise ValueError("period must be >= 2")
    radices = _radices(G, N)
    size = int(np.prod(radices, dtype=object)) if radices else 1
    if size > budget:
        raise BudgetExceeded(f"window would have {size} points, budget is {budget}", needed=size)
    idx = np.arange(size, dtype=np.int64)
    return Window(G, N, idx, idx.copy(), None, radices)


def build_coset_window(G: GroupSpec, H: Subgroup, N: int, budget: int = 2_000_000) -> Window:
    """Cosets g H_N of the image of H in G_N, acted on by left multiplication."""
    radices = _radices(G, N)
    size = int(np.prod(radices, dtype=object)) if radices else 1
    if size > budget:
        raise BudgetExceeded(f"reduced group has {size} elements, budget is {budget}", needed=size)
    base = build_window(G, N, budget)
    allc = base.coords_of(np.arange(size))
    src, dst = [np.arange(size)], [np.arange(size)]
    for h in H.generators:
        src.append(np.arange(size))
        dst.append(base.index_of(G.mul_arr(allc, np.asarray(h, dtype=np.int64), N)))
    labels = canonical_labels(components(size, np.concatenate(src), np.concatenate(dst)))
    reps = np.unique(labels)
    point_of = np.searchsorted(reps, labels)
    return Window(G, N, point_of, reps, H, radices)


# -- charts acting on windows ---------------------------------------------------


class ChartAction:
    """A chart composed with a window's action, with cached images of rectangles."""

    def __init__(self, chart: Chart, window: Window, budget: int = 20_000_000):
        if chart.group != window.group:
            raise ValueError("chart and window use different groups")
        self.chart = chart
        self.window = window
        self.budget = budget
        self._cache: dict[Rect, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def ell(self) -> int:
        return self.chart.ell

    @cached_property
    def xh(self) -> np.ndarray:
        return self.window.xh_mask(self.chart.calH)

    def vectors_and_elements(self, A: Rect) -> tuple[np.ndarray, np.ndarray]:
        """Enumerated vectors of A and their reduced images phi(v) in G_N."""
        hit = self._cache.get(A)
        if hit is None:
            if not rects.contains(self.chart.dom, A):
                raise ValueError(f"{A} is not inside dom {self.chart.dom}")
            vecs = rect_array(A, self.budget)
            hit = (vecs, self.window.reduce(self.chart.phi_arr(vecs)))
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[A] = hit
        return hit

    @cached_property
    def coordinate_axes(self) -> tuple[int, ...] | None:
        """Window axis hit by each chart coordinate when phi is a coordinate embedding, else None.

        Holds when the window is regular, the group abelian, each e_j maps to a
        distinct unit vector and phi agrees with that linear map on samples.
        """
        c, w = self.chart, self.window
        if not w.is_regular or not c.group.is_abelian:
            return None
        unit = w.reduce(c.phi_arr(np.eye(c.width, dtype=np.int64)))
        axes = []
        for row in unit:
            hit = np.flatnonzero(row)
            if len(hit) != 1 or row[hit[0]] != 1:
                return None
            axes.append(int(hit[0]))
        if len(set(axes)) != len(axes):
            return None
        rng = np.random.default_rng(0)
        hi = np.array(c.dom.radius + tuple(m - 1 for m in c.gamma), dtype=np.int64)
        lo = np.array(tuple(-r for r in c.dom.radius) + (0,) * len(c.gamma), dtype=np.int64)
        sample = rng.integers(lo, hi + 1, size=(64, c.width))
        expect = np.zeros((64, c.group.dim), dtype=np.int64)
        expect[:, axes] = sample
        if not np.array_equal(w.reduce(c.phi_arr(sample)), w.reduce(expect)):
            return None
        return tuple(axes)

    def images(self, A: Rect, x: int) -> np.ndarray:
        """phi(v) . x for v in A (enumeration order)."""
        _, elems = self.vectors_and_elements(A)
        return self.window.act_many(elems, x)

    def image_set(self, A: Rect, x: int) -> np.ndarray:
        return np.unique(self.images(A, x))

    def images_grid(self, A: Rect, pts: np.ndarray) -> np.ndarray:
        _, elems = self.vectors_and_elements(A)
        return self.window.act_grid(elems, pts)

    def dilate(self, A: Rect, pts: np.ndarray) -> np.ndarray:
        """Boolean mask of phi(A) . pts."""
        mask = np.zeros(self.window.n_points, dtype=bool)
        pts = np.asarray(pts)
        if len(pts) == 0:
            return mask
        _, elems = self.vectors_and_elements(A)
        step = max(1, 4_000_000 // max(1, len(pts)))
        for k in range(0, len(elems), step):
            mask[self.window.act_grid(elems[k:k + step], pts).ravel()] = True
        return mask

    def inverse(self, A: Rect, x: int) -> np.ndarray:
        """Array over points: index into A's enumeration of the v with phi(v) . x = y, or -1."""
        img = self.images(A, x)
        inv = np.full(self.window.n_points, -1, dtype=np.int64)
        inv[img[::-1]] = np.arange(len(img) - 1, -1, -1)
        return inv

    def locate(self, A: Rect, x: int, ys: np.ndarray) -> np.ndarray:
        """Vectors v in A with phi(v) . x = y for each y; rows of -1 sentinel flagged by ``found``."""
        vecs, _ = self.vectors_and_elements(A)
        inv = self.inverse(A, x)
        pos = inv[np.asarray(ys)]
        return vecs[np.where(pos < 0, 0, pos)], pos >= 0

    def check_injective(self, A: Rect, pts: np.ndarray | None = None) -> None:
        """Raise InjectivityError when v -> phi(v) . x collides on A for some base x."""
        vecs, elems = self.vectors_and_elements(A)
        if self.window.is_regular:
            bases = [0]
        else:
            bases = np.flatnonzero(self.xh) if pts is None else pts
        for x in bases:
            img = self.window.act_many(elems, int(x)) if not self.window.is_regular else \
                self.window.index_of(elems)
            _, first, inv = np.unique(img, return_index=True, return_inverse=True)
            owner = first[inv.ravel()]
            clash = np.flatnonzero(owner != np.arange(len(img)))
            if len(clash):
                i = clash[0]
                r, s = tuple(int(t) for t in vecs[i]), tuple(int(t) for t in vecs[owner[i]])
                raise InjectivityError(f"phi({r}) . x = phi({s}) . x at x={int(x)}: period too small",
                                       r=r, s=s, x=int(x))


def realize_chart(c: Chart, w: Window, region: Rect, budget: int = 20_000_000) -> ChartAction:
    """Bind a chart to a window and validate injectivity of v -> phi(v) . x on ``region``."""
    ca = ChartAction(c, w, budget)
    ca.check_injective(region)
    ca.region = region
    return ca
