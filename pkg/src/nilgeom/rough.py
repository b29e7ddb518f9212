"""Rough rectangles, rectangular relations, facial boundaries and their verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.ndimage import maximum_filter, minimum_filter

from . import rects
from .errors import BudgetExceeded, HypothesisError, NilgeomError
from .rects import Rect, as_fraction, face, fits_in, rec, scale, translate, unit_vector
from .window import ChartAction, canonical_labels


@dataclass(frozen=True)
class RoughWitness:
    B: Rect
    delta: Fraction
    base: int

    def line(self) -> str:
        return f"B={self.B} delta={self.delta} base={self.base}"


@dataclass
class EqRel:
    """A partition of window points; labels[x] is the least index of x's class."""

    labels: np.ndarray
    witnesses: dict[int, RoughWitness] = field(default_factory=dict)

    @classmethod
    def from_labels(cls, labels, witnesses=None) -> "EqRel":
        return cls(canonical_labels(np.asarray(labels)), dict(witnesses or {}))

    @classmethod
    def equality(cls, n: int) -> "EqRel":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def n_points(self) -> int:
        return len(self.labels)

    def classes(self) -> dict[int, np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        lab = self.labels[order]
        cuts = np.flatnonzero(np.diff(lab)) + 1
        return {int(g[0]): order[s:e] for g, s, e in
                zip(np.split(lab, cuts), np.r_[0, cuts], np.r_[cuts, len(lab)])} if len(lab) else {}

    def refines(self, other: "EqRel") -> bool:
        """Every class of self lies inside a class of other."""
        return bool(np.all(other.labels[self.labels] == other.labels))

    def dump(self) -> str:
        return "".join(f"{int(c)}\n" for c in self.labels)


def _dom_ok(ca: ChartAction, A: Rect) -> None:
    if not rects.contains(ca.chart.dom, A):
        raise NilgeomError(f"{A} is not inside dom {ca.chart.dom}")


# -- rough containment ---------------------------------------------------------------


@dataclass
class RoughResult:
    ok: bool
    reason: str = ""
    point: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def _inner(A: Rect, eps: Fraction) -> Rect | None:
    return scale(1 - eps, A) if eps < 1 else None


def verify_rough(R, ca: ChartAction, A: Rect, eps, x: int) -> RoughResult:
    """Is R sandwiched between phi((1-eps).A) . x and phi((1+eps).A) . x, with 2.zee below eps.A?"""
    eps = as_fraction(eps)
    if eps <= 0:
        return RoughResult(False, "eps must be positive")
    if not ca.xh[x]:
        return RoughResult(False, f"base {x} is not in X^H", x)
    if not fits_in(scale(2, ca.chart.zee), scale(eps, A)):
        return RoughResult(False, "2.zee does not fit in eps.A")
    outer = scale(1 + eps, A)
    _dom_ok(ca, outer)
    R = np.asarray(R)
    mask = np.zeros(ca.window.n_points, dtype=bool)
    mask[R if R.dtype != bool else np.flatnonzero(R)] = True
    inner = _inner(A, eps)
    if inner is not None:
        img = ca.images(inner, x)
        missing = img[~mask[img]]
        if len(missing):
            return RoughResult(False, "inner rectangle not covered", int(missing[0]))
    allowed = np.zeros_like(mask)
    allowed[ca.images(outer, x)] = True
    extra = np.flatnonzero(mask & ~allowed)
    if len(extra):
        return RoughResult(False, "point outside the outer rectangle", int(extra[0]))
    return RoughResult(True)


# -- boundaries -----------------------------------------------------------------------


def boundary(E: EqRel, ca: ChartAction, A: Rect, i: int) -> np.ndarray:
    """Mask of x in X^H whose two i-faces of phi(A) . x have disjoint E-saturations."""
    a_i = A.radius[i - 1]
    fa = face(A, i)
    minus = translate(unit_vector(A.ell, i, -a_i), fa)
    plus = translate(unit_vector(A.ell, i, a_i), fa)
    _dom_ok(ca, minus)
    _dom_ok(ca, plus)
    n = ca.window.n_points
    out = np.zeros(n, dtype=bool)
    pts = np.flatnonzero(ca.xh)
    if not len(pts):
        return out
    labels = E.labels
    _, em = ca.vectors_and_elements(minus)
    _, ep = ca.vectors_and_elements(plus)
    step = max(1, 2_000_000 // max(len(em), len(ep)))
    for s in range(0, len(pts), step):
        chunk = pts[s:s + step]
        lm = labels[ca.window.act_grid(em, chunk)]
        lp = labels[ca.window.act_grid(ep, chunk)]
        if len(em) == 1 and len(ep) == 1:
            out[chunk] = lm[0] != lp[0]
            continue
        cols = np.arange(len(chunk), dtype=np.int64)
        km = (lm + cols * n).ravel()
        kp = (lp + cols * n).ravel()
        shared = np.isin(kp, km).reshape(lp.shape).any(axis=0)
        out[chunk] = ~shared
    return out


# -- rectangular relations -------------------------------------------------------------------


@dataclass
class RectCertificate:
    entries: dict[int, tuple[RoughWitness, str]] = field(default_factory=dict)
    failures: list[tuple[int, str]] = field(default_factory=list)
    singletons: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [f"classes certified = {len(self.entries)}", f"singletons off X^H = {self.singletons}",
               f"failures = {len(self.failures)}"]
        for lab, (w, src) in sorted(self.entries.items()):
            out.append(f"class {lab}: {w.line()} source={src}")
        for lab, why in self.failures[:20]:
            out.append(f"FAIL class {lab}: {why}")
        return out


def theoretical_bound(ell: int) -> int:
    return 2 ** (22 * ell)


def _witness_ok(members: np.ndarray, ca: ChartAction, A: Rect, eps: Fraction, w: RoughWitness,
                bound) -> str:
    """Empty string when w certifies the class, otherwise the reason."""
    if not fits_in(A, w.B):
        return "A does not fit in B"
    if not (0 < w.delta < 1):
        return "delta outside (0,1)"
    if not rects.contains(ca.chart.dom, scale(bound, rec(w.B.radius, w.B.gamma))):
        return "bound.B is not inside dom"
    if not fits_in(scale(2 * w.delta, w.B), scale(eps, A)):
        return "2 delta.B does not fit in eps.A"
    try:
        res = verify_rough(members, ca, w.B, w.delta, w.base)
    except NilgeomError as exc:
        return str(exc)
    return "" if res.ok else f"rough check failed: {res.reason} at {res.point}"


def _search_witnesses(members: np.ndarray, ca: ChartAction, A: Rect, eps: Fraction,
                      region: Rect) -> list[RoughWitness]:
    xh = ca.xh
    base = int(members[xh[members]].min())
    vecs, found = ca.locate(region, base, members)
    if not found.all():
        return []
    ell = ca.ell
    ints = vecs[:, :ell]
    lo, hi = ints.min(axis=0), ints.max(axis=0)
    half = (hi - lo) // 2
    if np.any(half == 0):
        return []
    centers = {tuple(int(t) for t in lo + half), tuple(int(t) for t in hi - half)}
    zr = ca.chart.zee.radius
    out = []
    for c in sorted(centers, key=lambda v: (-sum(abs(t) for t in v), v)):
        B = Rect(c, tuple(int(t) for t in half), ca.chart.gamma)
        d_lo = max(Fraction(2 * z, L) for z, L in zip(zr, B.radius))
        d_hi = min(Fraction(int(eps * a), 2 * L) for a, L in zip(A.radius, B.radius))
        cap = Fraction(2 * max(B.radius) - 1, 2 * max(B.radius))
        for d in (d_lo, min(d_hi, cap)):
            if 0 < d < 1 and RoughWitness(B, d, base) not in out:
                out.append(RoughWitness(B, d, base))
    return out


def verify_rectangular(E: EqRel, ca: ChartAction, A: Rect, eps, bound=None,
                       region: Rect | None = None) -> RectCertificate:
    """Certify every class meeting X^H as a rough rectangle; other classes must be singletons.

    Emitted witnesses are tried first; otherwise the class is located
    from its least X^H point within ``region`` and the largest centered
    box inside its bounding box is tried with the least and the greatest
    admissible delta.
    """
    eps = as_fraction(eps)
    bound = theoretical_bound(ca.ell) if bound is None else as_fraction(bound)
    region = region if region is not None else getattr(ca, "region", ca.chart.dom)
    cert = RectCertificate()
    xh = ca.xh
    for lab, members in E.classes().items():
        if not xh[members].any():
            if len(members) == 1:
                cert.singletons += 1
            else:
                cert.failures.append((lab, "class misses X^H but is not a singleton"))
            continue
        reasons = []
        emitted = E.witnesses.get(lab)
        if emitted is not None:
            why = _witness_ok(members, ca, A, eps, emitted, bound)
            if not why:
                cert.entries[lab] = (emitted, "emitted")
                continue
            reasons.append(f"emitted: {why}")
        done = False
        try:
            cands = _search_witnesses(members, ca, A, eps, region)
        except BudgetExceeded as exc:
            cands, reasons = [], reasons + [str(exc)]
        for w in cands:
            why = _witness_ok(members, ca, A, eps, w, bound)
            if not why:
                cert.entries[lab] = (w, "search")
                done = True
                break
            reasons.append(f"search: {why}")
        if not done:
            cert.failures.append((lab, "; ".join(reasons) or "class not located within the search region"))
    return cert


# -- re-basing witnesses ------------------------------------------------------------------


def shift_witness(ca: ChartAction, w: RoughWitness, v, y: int) -> RoughWitness:
    """Re-base a witness at y where phi(v) . y = w.base: roughly (B + v) with doubled delta."""
    return RoughWitness(translate(tuple(v[: ca.ell]), w.B), 2 * w.delta, y)


def find_base(E: EqRel, ca: ChartAction, A: Rect, eps, y: int, M, cert: RectCertificate,
              target: int | None = None) -> tuple[RoughWitness, tuple[int, ...]]:
    """Search for a class meeting phi(M.A) . y, re-based at y and re-verified."""
    reach = scale(M, A)
    _dom_ok(ca, reach)
    near = np.unique(E.labels[ca.images(reach, y)])
    near = [int(c) for c in near if int(c) in cert.entries]
    if target is not None:
        near = [c for c in near if c == target]
    if not near:
        raise NilgeomError(f"no certified class meets phi({M}.A) . {y}")
    lab = near[0]
    w, _ = cert.entries[lab]
    spread = tuple(int(M * a) + 2 * int((1 + w.delta) * b) + 2 * abs(c) + 2 * z
                   for a, b, c, z in zip(A.radius, w.B.radius, w.B.center, ca.chart.zee.radius))
    search = rec(spread, ca.chart.gamma)
    search = Rect(search.center, tuple(min(s, d) for s, d in zip(search.radius, ca.chart.dom.radius)),
                  search.gamma)
    vecs, found = ca.locate(search, y, np.array([w.base]))
    if not found[0]:
        raise NilgeomError(f"base {w.base} not reachable from {y} within {search}")
    v = tuple(int(t) for t in vecs[0])
    shifted = shift_witness(ca, w, v, y)
    members = np.flatnonzero(E.labels == lab)
    res = verify_rough(members, ca, shifted.B, shifted.delta, y)
    if not res.ok:
        raise NilgeomError(f"re-based witness failed: {res.reason} at {res.point}")
    return shifted, v


# -- boundary estimates -------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [f"{self.name}: checked={self.checked} failures={len(self.failures)}"]
        out += [f"  hypothesis not met at configured constants: {v}" for v in self.violations]
        out += [f"  {k} = {v}" for k, v in sorted(self.info.items())]
        out += [f"  FAIL {f}" for f in self.failures[:10]]
        return out


def _hypotheses(name: str, checks: list[tuple[bool, str]], enforce: bool) -> list[str]:
    bad = [text for ok, text in checks if not ok]
    if bad and enforce:
        raise HypothesisError(f"{name}: violated {', '.join(bad)}")
    return bad


def verify_faces(E: EqRel, ca: ChartAction, A: Rect, eps, q, cert: RectCertificate,
                 enforce: bool = True) -> CheckReport:
    eps, q = as_fraction(eps), as_fraction(q)
    rep = CheckReport("faces")
    rep.violations = _hypotheses("faces", [(6 * eps < q, "6 eps < q"), (q < 1 - eps, "q < 1 - eps")],
                                 enforce)
    qA = scale(q, A)
    for i in range(1, ca.ell + 1):
        bmask = boundary(E, ca, qA, i)
        for lab, (w, _) in cert.entries.items():
            members = np.flatnonzero((E.labels == lab) & bmask)
            if not len(members):
                continue
            region = scale(1 + w.delta, w.B)
            vecs, found = ca.locate(region, w.base, members)
            thick = scale(2 * q, A).radius
            slabs = []
            for sign in (-1, 1):
                c = translate(unit_vector(ca.ell, i, sign * w.B.radius[i - 1]), face(w.B, i))
                slabs.append(Rect(c.center, tuple(r + t for r, t in zip(c.radius, thick)), c.gamma))
            inside = rects.member_many(vecs, slabs[0]) | rects.member_many(vecs, slabs[1])
            rep.checked += len(members)
            for y in members[~(inside & found)]:
                rep.failures.append((i, lab, int(y)))
    return rep


def strong_boundary_mask(E: EqRel, ca: ChartAction, A: Rect, q) -> np.ndarray:
    """Union over axes of phi(30 l.(q.A)) . boundary_i(E, q.A)."""
    qA = scale(as_fraction(q), A)
    spread = scale(30 * ca.ell, qA)
    out = np.zeros(ca.window.n_points, dtype=bool)
    for i in range(1, ca.ell + 1):
        out |= ca.dilate(spread, np.flatnonzero(boundary(E, ca, qA, i)))
    return out


def _not_inside_filtered(E: EqRel, ca: ChartAction, Z: Rect, axes: tuple[int, ...]) -> np.ndarray:
    w = ca.window
    size = [1] * len(w.radices)
    for j, ax in enumerate(axes):
        full = w.radices[ax]
        size[ax] = full if j >= Z.ell else min(full, 2 * Z.radius[j] + 1)
    grid = E.labels.reshape(w.radices)
    hi = maximum_filter(grid, size=size, mode="wrap")
    lo = minimum_filter(grid, size=size, mode="wrap")
    return ((hi != grid) | (lo != grid)).ravel()


def not_inside_mask(E: EqRel, ca: ChartAction, Z: Rect) -> np.ndarray:
    """Points x with phi(Z) . x not contained in [x]_E."""
    axes = ca.coordinate_axes
    if axes is not None and Z.is_centered:
        return _not_inside_filtered(E, ca, Z, axes)
    pts = np.arange(ca.window.n_points)
    out = np.zeros(len(pts), dtype=bool)
    _, elems = ca.vectors_and_elements(Z)
    step = max(1, 4_000_000 // len(elems))
    for s in range(0, len(pts), step):
        chunk = pts[s:s + step]
        img = ca.window.act_grid(elems, chunk)
        out[chunk] = np.any(E.labels[img] != E.labels[chunk], axis=0)
    return out


def verify_strong_boundary(E: EqRel, ca: ChartAction, A: Rect, eps, q,
                           enforce: bool = True) -> CheckReport:
    eps, q = as_fraction(eps), as_fraction(q)
    rep = CheckReport("strong-boundary")
    rep.violations = _hypotheses("strong-boundary", [(12 * eps < q, "12 eps < q"),
                                                     (q < Fraction(1, 24 * ca.ell), "q < 1/(24 l)")],
                                 enforce)
    xh = ca.xh
    near_ok = ~ca.dilate(scale(15 * ca.ell, scale(q, A)), np.flatnonzero(~xh)) if not xh.all() else xh
    cand = xh & near_ok & not_inside_mask(E, ca, scale(3, ca.chart.zee))
    covered = strong_boundary_mask(E, ca, A, q)
    rep.checked = int(cand.sum())
    rep.failures = [int(x) for x in np.flatnonzero(cand & ~covered)]
    return rep


def count_boundary_clusters(E: EqRel, ca: ChartAction, A: Rect, eps, q, i: int, x: int,
                            reach=None, spread=None, enforce: bool = True) -> CheckReport:
    """Greedy maximal packing of i-boundary points near x with disjoint neighbourhoods."""
    eps, q = as_fraction(eps), as_fraction(q)
    ell = ca.ell
    rep = CheckReport("clusters")
    rep.violations = _hypotheses("clusters", [(eps < Fraction(1, 16), "eps < 1/16"),
                                              (6 * eps < q, "6 eps < q"), (q < Fraction(1, 2), "q < 1/2")],
                                 enforce)
    reach = 2 ** (17 * ell) if reach is None else reach
    spread = 2 ** (19 * ell) if spread is None else spread
    qA = scale(q, A)
    cand_mask = boundary(E, ca, qA, i)
    near = np.zeros_like(cand_mask)
    near[ca.images(scale(reach, A), x)] = True
    cand = np.flatnonzero(cand_mask & near)
    hood = rects.minkowski_sum(face(scale(spread, A), i), scale(5 * q, A))
    used = np.zeros_like(cand_mask)
    chosen = []
    for y in cand:
        img = ca.images(hood, int(y))
        if used[img].any():
            continue
        used[img] = True
        chosen.append(int(y))
    bound = 2 ** (22 * ell * ell)
    rep.checked = len(cand)
    rep.info = {"packing": len(chosen), "theoretical bound": bound, "reach": reach, "spread": spread}
    if len(chosen) > bound:
        rep.failures.append(f"packing {len(chosen)} exceeds {bound}")
    return rep
