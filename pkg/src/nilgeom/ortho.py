"""Orthogonal rectangular relations: parameter checks, the cover-and-refine builder, and verifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix

from . import rects
from .charts import Chart
from .errors import HypothesisError, NilgeomError, OrthoError
from .markers import build_marker_set, partition_marker, symmetric_closure
from .rects import Rect, as_fraction, fits_in, rec, scale
from .rough import EqRel, RoughWitness, boundary, not_inside_mask
from .window import ChartAction, canonical_labels


@dataclass(frozen=True)
class OrthoParams:
    """Constants of the orthogonalizer.

    ``sep`` and ``guard`` are the per-axis minimum distances of the two
    avoidance clauses (defaults 3 a_i and 64 l q a_i). ``dom_bound`` is the
    multiple of B that rectangular certificates require inside dom
    (default 2^(22 l)); ``spread`` is the orthogonality dilation multiple
    (default 30 l).
    """

    A: Rect
    eps: Fraction
    q: Fraction
    b: int = 1
    p: int | None = None
    sep: tuple[int, ...] | None = None
    guard: tuple[int, ...] | None = None
    spread: int | None = None
    dom_bound: Fraction | None = None
    mode: str = "relaxed"

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        object.__setattr__(self, "q", as_fraction(self.q))
        if self.mode not in ("strict", "relaxed"):
            raise ValueError(f"mode must be strict or relaxed, got {self.mode!r}")
        if not self.A.is_centered:
            raise ValueError("A must be centered")
        if self.eps <= 0 or self.q <= 0 or self.b < 0:
            raise ValueError("eps and q must be positive and b non-negative")

    @property
    def ell(self) -> int:
        return self.A.ell

    @property
    def p_value(self) -> int:
        return 2 ** (14 * self.ell) if self.p is None else self.p

    @property
    def sep_value(self) -> tuple[int, ...]:
        return self.sep if self.sep is not None else tuple(3 * a for a in self.A.radius)

    @property
    def guard_value(self) -> tuple[int, ...]:
        if self.guard is not None:
            return self.guard
        return tuple(math.ceil(64 * self.ell * self.q * a) for a in self.A.radius)

    @property
    def spread_value(self) -> int:
        return 30 * self.ell if self.spread is None else self.spread

    @property
    def dom_bound_value(self) -> Fraction:
        return Fraction(2 ** (22 * self.ell)) if self.dom_bound is None else as_fraction(self.dom_bound)


# -- exact parameter arithmetic --------------------------------------------------


def q_upper_bound(ell: int, b: int) -> Fraction:
    """The strict upper bound 1/(4 * 306 * l * b * 2^(22 l^2)) on q."""
    return Fraction(1, 4 * 306 * ell * b * 2 ** (22 * ell * ell))


def admissibility_margin(ell: int, p: int, b: int, q) -> Fraction:
    """p - 28 * 84^l - 306 b l q 2^(22 l^2): positive when the counting argument leaves room for d_i."""
    return p - 28 * 84 ** ell - 306 * b * ell * as_fraction(q) * 2 ** (22 * ell * ell)


@dataclass
class ParamCheck:
    name: str
    ok: bool
    slack: Fraction | int | None
    counted: bool = True

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        if not self.counted:
            tag = "info " + tag
        return f"{tag} {self.name} slack={self.slack}"


@dataclass
class ParamReport:
    mode: str
    checks: list[ParamCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks if c.counted)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.counted and not c.ok]

    def lines(self) -> list[str]:
        return [f"mode = {self.mode}"] + [c.line() for c in self.checks] + [f"overall = {'PASS' if self.ok else 'FAIL'}"]


def _radius_slack(big: Rect, small: Rect) -> int:
    """Least per-axis margin of small inside big (negative when it sticks out)."""
    return min(min(s_lo - b_lo, b_hi - s_hi) for b_lo, b_hi, s_lo, s_hi in zip(big.lo, big.hi, small.lo, small.hi))


def _fit_slack(small: Rect, big: Rect) -> int:
    return min(b - s for s, b in zip(small.radius, big.radius))


def check_parameters(c: Chart, prm: OrthoParams) -> ParamReport:
    """Evaluate the hypothesis block with exact rationals; relaxed mode uses the desk analogs."""
    ell, A, eps, q, b = prm.ell, prm.A, prm.eps, prm.q, prm.b
    rep = ParamReport(prm.mode)
    add = rep.checks.append
    if prm.mode == "strict":
        big = scale(2 ** (40 * ell), A)
        add(ParamCheck("2^(40l).A inside dom", rects.contains(c.dom, big), _radius_slack(c.dom, big)))
        zee_big = scale(2 * 36 ** 2 * 2 ** (14 * ell), c.zee)
        eA = scale(eps, A)
        add(ParamCheck("2.36^2.2^(14l).zee fits in eps.A", fits_in(zee_big, eA), _fit_slack(zee_big, eA)))
        add(ParamCheck("8 eps < q", 8 * eps < q, q - 8 * eps))
        bound = q_upper_bound(ell, max(b, 1))
        add(ParamCheck(f"q < {bound}", q < bound, bound - q))
        margin = admissibility_margin(ell, 2 ** (14 * ell), max(b, 1), q)
        add(ParamCheck("p - 28.84^l - 306 b l q 2^(22 l^2) > 0", margin > 0, margin, counted=False))
        return rep
    p = prm.p_value
    outer = rec(tuple(18 * p * a + 1 for a in A.radius), A.gamma)
    add(ParamCheck("surrounding blocks (18p.A + 1) inside dom", rects.contains(c.dom, outer),
                   _radius_slack(c.dom, outer)))
    cover = scale(prm.dom_bound_value * 11 * p, A)
    add(ParamCheck(f"{prm.dom_bound_value}.(11p.A) inside dom", rects.contains(c.dom, cover),
                   _radius_slack(c.dom, cover)))
    slack = min(math.floor(eps * a) - 4 * z for a, z in zip(A.radius, c.zee.radius))
    add(ParamCheck("floor(eps a_i) >= 4 z_i", slack >= 0, slack))
    slack = min(math.floor(q * a) - 1 for a in A.radius)
    add(ParamCheck("floor(q a_i) >= 1", slack >= 0, slack))
    slack = min(s - (2 * a + 2) for s, a in zip(prm.sep_value, A.radius))
    add(ParamCheck("sep_i >= 2 a_i + 2", slack >= 0, slack))
    slack = min(g - math.ceil(2 * prm.spread_value * q * a) - 1 for g, a in zip(prm.guard_value, A.radius))
    add(ParamCheck("guard_i > 2 spread q a_i", slack >= 0, slack))
    add(ParamCheck("p >= 4", p >= 4, p - 4))
    margin = admissibility_margin(ell, p, max(b, 1), q)
    add(ParamCheck("p - 28.84^l - 306 b l q 2^(22 l^2) > 0", margin > 0, margin, counted=False))
    return rep


# -- construction -------------------------------------------------------------------


@dataclass
class OrthoCertificate:
    params: OrthoParams
    markers: np.ndarray
    parts: list[np.ndarray]
    radii: dict[int, tuple[int, ...]]
    witnesses: dict[int, RoughWitness]
    n_classes: int = 0
    singletons: int = 0

    def lines(self) -> list[str]:
        prm = self.params
        out = [f"mode = {prm.mode}", f"A = {prm.A}", f"eps = {prm.eps}", f"q = {prm.q}", f"b = {prm.b}",
               f"p = {prm.p_value}", f"sep = {list(prm.sep_value)}", f"guard = {list(prm.guard_value)}",
               f"markers = {len(self.markers)}",
               f"parts = {[len(part) for part in self.parts]}",
               f"classes = {self.n_classes}", f"singletons = {self.singletons}"]
        out += [f"d({y}) = {list(d)}" for y, d in sorted(self.radii.items())]
        out += [f"witness class {lab}: {w.line()}" for lab, w in sorted(self.witnesses.items())]
        return out


def _forbid(intervals: list[tuple[int, int]], centre: int, width: int) -> None:
    """Values t with |t - centre| < width, as a closed integer interval."""
    if width > 0:
        intervals.append((centre - width + 1, centre + width - 1))


def _least_allowed(lo: int, hi: int, intervals: list[tuple[int, int]]) -> int | None:
    t = lo
    for a, b in sorted(intervals):
        if b < t:
            continue
        if a > t:
            break
        t = b + 1
        if t > hi:
            return None
    return t if t <= hi else None


def _merge(intervals: list[tuple[int, int]], lo: int, hi: int) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for a, b in sorted(intervals):
        a, b = max(a, lo), min(b, hi)
        if a > b:
            continue
        if out and a <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(x) for x in out]


def _bounded_points(ca: ChartAction, E: EqRel, A: Rect, R: Rect, b: int) -> None:
    """Raise when some X^H point has more than b relations not containing phi(R) . x."""
    if not E:
        return
    count = np.zeros(ca.window.n_points, dtype=np.int64)
    for rel in E:
        count += not_inside_mask(rel, ca, R)
    bad = np.flatnonzero(ca.xh & (count > b))
    if len(bad):
        x = int(bad[0])
        raise HypothesisError(f"point {x} lies near the boundary of {int(count[x])} relations, more than b={b}")


def _choose_radii(ca: ChartAction, prm: OrthoParams, parts: list[np.ndarray],
                  bpoints: list[list[np.ndarray]]) -> dict[int, tuple[int, ...]]:
    ell, p = prm.ell, prm.p_value
    a = prm.A.radius
    near13 = scale(13 * p, prm.A)
    near7 = scale(7 * p, prm.A)
    radii: dict[int, tuple[int, ...]] = {}
    assigned: list[int] = []
    for part in parts:
        for y in (int(t) for t in part):
            if assigned:
                vecs, found = ca.locate(near13, y, np.array(assigned))
                nbrs = [(tuple(int(t) for t in v[:ell]), radii[yy])
                        for v, f, yy in zip(vecs, found, assigned) if f and any(v[:ell])]
            else:
                nbrs = []
            hits = []
            for i in range(ell):
                pts = np.concatenate(bpoints[i]) if bpoints[i] else np.zeros(0, np.int64)
                if len(pts):
                    vecs, found = ca.locate(near7, y, pts)
                    hits.append(vecs[found, i])
                else:
                    hits.append(np.zeros(0, np.int64))
            d = []
            for i in range(ell):
                forbidden: list[tuple[int, int]] = []
                sep, guard = prm.sep_value[i], prm.guard_value[i]
                for u, dd in nbrs:
                    for c in (u[i] + dd[i], u[i] - dd[i]):
                        _forbid(forbidden, c, sep)
                        _forbid(forbidden, -c, sep)
                for u_i in np.unique(hits[i]):
                    _forbid(forbidden, int(u_i), guard)
                    _forbid(forbidden, -int(u_i), guard)
                lo, hi = p * a[i], 2 * p * a[i]
                t = _least_allowed(lo, hi, forbidden)
                if t is None:
                    merged = _merge(forbidden, lo, hi)
                    raise OrthoError(f"no admissible radius for marker {y} on axis {i + 1}: "
                                     f"[{lo}, {hi}] is covered by {merged}", point=y, axis=i + 1,
                                     forbidden=merged)
                d.append(t)
            radii[y] = tuple(d)
            assigned.append(y)
    return radii


def _block_codes(ca: ChartAction, y: int, d: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Points of the surrounding box of y and their block index sum_i (alpha_i + 1) 3^i."""
    ell = len(d)
    box = rec(tuple(9 * t + 1 for t in d), ca.chart.gamma)
    vecs, _ = ca.vectors_and_elements(box)
    pts = ca.images(box, y)
    code = np.zeros(len(pts), dtype=np.int64)
    for i in range(ell):
        v = vecs[:, i]
        alpha = np.where(v < -d[i], 0, np.where(v > d[i], 2, 1))
        code += alpha * 3 ** i
    return pts, code


def _block_bounds(d: tuple[int, ...], code: int) -> list[tuple[int, int]]:
    out = []
    for i, t in enumerate(d):
        alpha = (code // 3 ** i) % 3 - 1
        out.append((-9 * t - 1, -t - 1) if alpha < 0 else (t + 1, 9 * t + 1) if alpha > 0 else (-t, t))
    return out


def build_orthogonal_relation(ca: ChartAction, prm: OrthoParams, existing: list[EqRel] | None = None,
                              check_bound: bool = True, order: np.ndarray | None = None
                              ) -> tuple[EqRel, OrthoCertificate]:
    """Cover X^H by block-bordered rough rectangles around markers and refine by block membership."""
    existing = list(existing or [])
    w = ca.window
    n = w.n_points
    ell, p, A = prm.ell, prm.p_value, prm.A
    if ell != ca.ell:
        raise NilgeomError(f"A has dimension {ell}, chart has {ca.ell}")
    outer = rec(tuple(18 * p * a + 1 for a in A.radius), A.gamma)
    ca.check_injective(outer)
    if check_bound:
        _bounded_points(ca, existing, A, scale(8 * p, A), prm.b)
    xh = ca.xh
    K = symmetric_closure(w.group, ca.vectors_and_elements(scale(Fraction(3 * p, 4), A))[1])
    marks = build_marker_set(w, K, xh, order=order, check=False).members
    F13 = symmetric_closure(w.group, ca.vectors_and_elements(scale(13 * p, A))[1])
    parts = partition_marker(w, F13, marks, check=False)
    qA = scale(prm.q, A)
    bpoints = [[np.flatnonzero(boundary(E, ca, qA, i)) for E in existing] for i in range(1, ell + 1)]
    radii = _choose_radii(ca, prm, parts, bpoints)

    # incidence of points with R_y and with the surrounding blocks
    ys = [int(y) for y in marks]
    m = len(ys)
    codes = np.full((m, n), -1, dtype=np.int16)
    rows, cols = [], []
    centre = sum(3 ** i for i in range(ell))
    for k, y in enumerate(ys):
        pts, code = _block_codes(ca, y, radii[y])
        codes[k, pts] = code
        inside = pts[code == centre]
        rows.append(inside)
        cols.append(np.full(len(inside), k))
    member = csr_matrix((np.ones(sum(len(r) for r in rows), dtype=np.int32),
                         (np.concatenate(rows), np.concatenate(cols))), shape=(n, m))
    meets = (member.T @ member) > 0
    near = (member @ meets) > 0
    near = near.toarray() if hasattr(near, "toarray") else np.asarray(near)
    keys = np.where(near, codes.T.astype(np.int32) + 1, 0)
    has = near.any(axis=1)
    _, group = np.unique(keys, axis=0, return_inverse=True)
    group = group.ravel()
    anchored = np.zeros(group.max() + 1 if n else 0, dtype=bool)
    anchored[group[has & xh]] = True
    labels = np.where(has & anchored[group], group + n, np.arange(n))
    labels = canonical_labels(labels)

    cert = OrthoCertificate(prm, marks, parts, radii, {})
    witnesses = _emit_witnesses(ca, prm, labels, ys, radii, codes, near)
    cert.witnesses = witnesses
    lab_set = np.unique(labels)
    cert.n_classes = len(lab_set)
    cert.singletons = int(np.sum(np.bincount(labels, minlength=n)[lab_set] == 1))
    return EqRel(labels, witnesses), cert


def _emit_witnesses(ca: ChartAction, prm: OrthoParams, labels: np.ndarray, ys: list[int],
                    radii: dict[int, tuple[int, ...]], codes: np.ndarray, near: np.ndarray) -> dict[int, RoughWitness]:
    """Per class: B = largest box in the intersected blocks, centre furthest from the origin."""
    ell, p, A = prm.ell, prm.p_value, prm.A
    xh = ca.xh
    zee = ca.chart.zee.radius
    reach = rec(tuple(18 * p * a + 1 for a in A.radius), A.gamma)
    out: dict[int, RoughWitness] = {}
    first = np.full(len(labels), len(labels), dtype=np.int64)
    pts = np.flatnonzero(xh)
    np.minimum.at(first, labels[pts], pts)
    for lab in np.unique(labels[pts]):
        x = int(first[lab])
        ks = np.flatnonzero(near[x])
        if not len(ks):
            continue
        targets = np.array([ys[k] for k in ks])
        vecs, found = ca.locate(reach, x, targets)
        if not found.all():
            continue
        mu = [-(10 ** 18)] * ell
        nu = [10 ** 18] * ell
        for k, u in zip(ks, vecs):
            for i, (lo, hi) in enumerate(_block_bounds(radii[ys[k]], int(codes[k, x]))):
                mu[i] = max(mu[i], lo + int(u[i]))
                nu[i] = min(nu[i], hi + int(u[i]))
        if any(a > b for a, b in zip(mu, nu)):
            continue
        L = [(b - a) // 2 for a, b in zip(mu, nu)]
        if any(t == 0 for t in L):
            continue
        centre = []
        for a, b, t in zip(mu, nu, L):
            c1, c2 = a + t, b - t
            centre.append(c1 if (abs(c1), c1) >= (abs(c2), c2) else c2)
        B = Rect(tuple(centre), tuple(L), ca.chart.gamma)
        delta = prm.eps / (18 * p)
        if prm.mode == "relaxed":
            delta = max(delta, max(Fraction(2 * z, t) for z, t in zip(zee, L)))
        out[int(lab)] = RoughWitness(B, delta, x)
    return out


# -- orthogonality and the failure-count property ---------------------------------


@dataclass
class OrthoResult:
    ok: bool
    axis: int | None = None
    point: int | None = None

    def __bool__(self) -> bool:
        return self.ok

    def line(self) -> str:
        return "orthogonal" if self.ok else f"not orthogonal: axis {self.axis} shares point {self.point}"


def is_orthogonal(E: EqRel, F: EqRel, ca: ChartAction, A: Rect, spread: int | None = None) -> OrthoResult:
    """Are the spread.A dilations of the same-axis A-boundaries of E and F disjoint on every axis?"""
    spread = 30 * ca.ell if spread is None else spread
    grow = scale(spread, A)
    for i in range(1, ca.ell + 1):
        left = ca.dilate(grow, np.flatnonzero(boundary(E, ca, A, i)))
        right = ca.dilate(grow, np.flatnonzero(boundary(F, ca, A, i)))
        common = np.flatnonzero(left & right)
        if len(common):
            return OrthoResult(False, i, int(common[0]))
    return OrthoResult(True)


@dataclass
class SeqReport:
    pairs: int = 0
    max_failures: int = 0
    histogram: dict[int, int] = field(default_factory=dict)
    worst: tuple[int, int, list[int]] | None = None
    bound: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.max_failures <= self.bound

    def lines(self) -> list[str]:
        out = [f"pairs = {self.pairs}", f"bound = {self.bound}", f"max failures = {self.max_failures}",
               f"histogram = {dict(sorted(self.histogram.items()))}"]
        if self.worst is not None:
            out.append(f"worst pair = {self.worst[0]} {self.worst[1]} failing indices {self.worst[2]}")
        out += [f"hypothesis not met at configured constants: {v}" for v in self.violations]
        return out


def verify_orthoseq(relations: list[EqRel], ca: ChartAction, A: Rect, eps, q,
                    pairs: np.ndarray, enforce: bool = True) -> SeqReport:
    """For each (x, y) with y in phi(zee) . x, count the relations separating x and y."""
    eps, q = as_fraction(eps), as_fraction(q)
    checks = [(12 * eps < q, "12 eps < q"), (q < Fraction(1, 24 * ca.ell), "q < 1/(24 l)"),
              (eps < Fraction(1, 4), "eps < 1/4"), (ca.chart.calH is None, "calH trivial")]
    bad = [t for ok, t in checks if not ok]
    if bad and enforce:
        raise HypothesisError(f"orthogonal sequence: violated {', '.join(bad)}")
    rep = SeqReport(bound=ca.ell, violations=bad)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    for x, y in pairs:
        x, y = int(x), int(y)
        found = ca.locate(ca.chart.zee, x, np.array([y]))[1][0]
        if not found:
            raise NilgeomError(f"pair ({x}, {y}) is not within phi(zee)")
        failing = [n for n, E in enumerate(relations) if E.labels[x] != E.labels[y]]
        rep.pairs += 1
        rep.histogram[len(failing)] = rep.histogram.get(len(failing), 0) + 1
        if rep.worst is None or len(failing) > rep.max_failures:
            rep.worst = (x, y, failing)
        rep.max_failures = max(rep.max_failures, len(failing))
    return rep
