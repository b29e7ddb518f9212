"""Charts: almost-homomorphisms from a rectangle of Z^l x Gamma into a group.

A chart carries a closed-form map ``phi`` evaluated on arrays of vectors,
an error rectangle ``zee``, a domain ``dom`` and a family of subgroups
(``calH``; None stands for the trivial family). Vectors are laid out as
the l integer coordinates followed by one residue per torsion order.
"""

from __future__ import annotations

import math
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import rects
from .errors import BudgetExceeded, ChartError
from .groups import (Element, GroupSpec, Subgroup, center_decomposition, format_element,
                     free_abelian, hirsch_length)
from .intlin import LatticeQuotient, kernel_basis
from .rects import Rect, as_fraction, rec, rect_array

PhiArr = Callable[[np.ndarray], np.ndarray]

AXIOMS = ("injective", "product", "right-quotient", "left-quotient", "inverse")


@dataclass(frozen=True)
class Chart:
    group: GroupSpec
    ell: int
    gamma: tuple[int, ...]
    zee: Rect
    dom: Rect
    phi_arr_raw: PhiArr = field(repr=False, compare=False)
    calH: tuple[Subgroup, ...] | None = None
    phi_inv_arr: PhiArr | None = field(default=None, repr=False, compare=False)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.zee.ell != self.ell or self.dom.ell != self.ell:
            raise ChartError("zee/dom dimension differs from l")
        if self.zee.gamma != self.gamma or self.dom.gamma != self.gamma:
            raise ChartError("zee/dom torsion differs from Gamma")
        if not (self.zee.is_centered and self.dom.is_centered):
            raise ChartError("zee and dom must be centered")
        if any(r <= 0 for r in self.zee.radius):
            raise ChartError(f"zee radii must be positive: {self.zee.radius}")
        if not rects.contains(self.dom, rects.scale(3, self.zee)):
            raise ChartError(f"3.zee {rects.scale(3, self.zee).radius} is not inside dom {self.dom.radius}")
        if self.phi((0,) * self.width) != self.group.identity:
            raise ChartError("phi(0) is not the identity")

    @property
    def width(self) -> int:
        return self.ell + len(self.gamma)

    def normalize(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vecs, dtype=np.int64)).copy()
        for j, m in enumerate(self.gamma):
            vecs[:, self.ell + j] %= m
        return vecs

    def phi_arr(self, vecs: np.ndarray) -> np.ndarray:
        vecs = self.normalize(vecs)
        if vecs.shape[1] != self.width:
            raise ChartError(f"vectors have width {vecs.shape[1]}, chart width is {self.width}")
        return self.phi_arr_raw(vecs)

    def phi(self, v: Sequence[int]) -> Element:
        return tuple(int(x) for x in self.phi_arr(np.array([v], dtype=np.int64))[0])

    def with_zee(self, zee: Rect) -> "Chart":
        """Same map with a different error rectangle (used to exhibit undersized ones)."""
        return replace(self, zee=zee)

    def subgroups(self) -> tuple[Subgroup, ...]:
        from .groups import trivial_subgroup
        return self.calH if self.calH is not None else (trivial_subgroup(self.group),)

    def certificate(self) -> list[str]:
        fam = "1" if self.calH is None else "; ".join(
            "<" + ",".join(format_element(g) for g in H.generators) + ">" for H in self.calH)
        out = [f"group = {self.group}", f"ell = {self.ell}",
               f"gamma = [{','.join(map(str, self.gamma))}]",
               f"zee = {self.zee}", f"dom = {self.dom}", f"calH = {fam}"]
        out += [f"note = {n}" for n in self.notes]
        return out


# -- builders --------------------------------------------------------------


def _abelian_layout(G: GroupSpec) -> tuple[list[int], list[int], tuple[int, ...]]:
    if not G.is_abelian:
        raise ChartError(f"{G} is not abelian")
    free = [b.offset for b in G.blocks if b.kind == "Z"]
    tors = [b.offset for b in G.blocks if b.kind == "C"]
    gamma = tuple(G.moduli[p] for p in tors)
    return free, tors, gamma


def _coordinate_maps(G: GroupSpec):
    free, tors, gamma = _abelian_layout(G)
    order = free + tors
    ell = len(free)

    def phi(v: np.ndarray) -> np.ndarray:
        out = np.zeros((len(v), G.dim), dtype=np.int64)
        out[:, order] = v
        return out

    def phi_inv(g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=np.int64)[:, order]

    return ell, gamma, phi, phi_inv


def _dom_for(zee: Rect, lam) -> Rect:
    lam = as_fraction(lam)
    return rects.scale(max(lam, Fraction(3)), zee)


def build_abelian_chart(G: GroupSpec, zee_radius: Sequence[int], lam) -> Chart:
    ell, gamma, phi, phi_inv = _coordinate_maps(G)
    if len(zee_radius) != ell:
        raise ChartError(f"need {ell} zee radii, got {len(zee_radius)}")
    if any(r < 1 for r in zee_radius):
        raise ChartError("zee radii must be >= 1")
    zee = rec(tuple(zee_radius), gamma)
    return Chart(G, ell, gamma, zee, _dom_for(zee, lam), phi, None, phi_inv)


def _cover_radius(coords: np.ndarray, ell: int) -> tuple[int, ...]:
    if ell == 0:
        return ()
    if len(coords) == 0:
        return (1,) * ell
    return tuple(max(1, int(np.abs(coords[:, j]).max())) for j in range(ell))


def build_chart_free(G: GroupSpec, F: Sequence[Sequence[int]], lam, region: Rect | None = None,
                     budget: int = 50_000_000) -> Chart:
    """A chart with trivial subgroup family, F inside phi(zee) and lam.zee inside dom.

    For a class-2 group the construction charts G/zeta(G), lifts it with
    central coordinates zero, collects the central errors of the four
    product/inverse identities over ``region`` (default: the whole
    quotient domain) and charts the center large enough to absorb them.
    """
    F = [G.check(f) for f in F]
    if G.is_abelian:
        ell, gamma, _, phi_inv = _coordinate_maps(G)
        coords = phi_inv(np.array(F, dtype=np.int64).reshape(-1, G.dim))
        return build_abelian_chart(G, _cover_radius(coords, ell), lam)
    if G.nilpotency_class > 2:
        raise ChartError("only class <= 2 groups are in the catalog")
    cd = center_decomposition(G)
    base = build_chart_free(cd.quotient, [cd.project(f) for f in F], lam)
    work = region if region is not None else base.dom
    if not rects.contains(base.dom, work):
        raise ChartError("working region must lie inside the quotient chart's domain")
    npts = rects.cardinality(work)
    if npts * npts > budget:
        raise BudgetExceeded(f"error-set sweep needs {npts * npts} pairs, budget is {budget}",
                             needed=npts * npts)

    def lift(u: np.ndarray) -> np.ndarray:
        return cd.lift_arr(base.phi_arr(u))

    central_errors = _central_errors(G, cd, base, lift, work)
    # F must be covered too: f = lift(phi0(u)) * central
    for f in F:
        u = base.phi_inv_arr(np.array([cd.project(f)]))
        rest = G.mul(G.inv(tuple(lift(u)[0])), f)
        central_errors.append(cd.iso_inv(rest))
    _, _, cphi, cphi_inv = _coordinate_maps(cd.center)
    cerr = cphi_inv(np.array(central_errors, dtype=np.int64).reshape(-1, cd.center.dim))
    cell = len([b for b in cd.center.blocks if b.kind == "Z"])
    ztop = tuple(int(np.abs(cerr[:, j]).max()) + 1 if len(cerr) else 1 for j in range(cell))
    centre_chart = build_abelian_chart(cd.center, ztop, lam)
    return _product_chart(G, cd, base, centre_chart, None,
                          notes=(f"central errors swept over {work}",))


def _central_errors(G, cd, base: Chart, lift, work: Rect) -> list[Element]:
    pts = rect_array(work)
    lifted = lift(pts)
    errs: set[Element] = set()
    zr = np.array(base.zee.radius, dtype=np.int64)
    dr = np.array(base.dom.radius, dtype=np.int64)
    ell = base.ell

    def admissible(t: np.ndarray) -> np.ndarray:
        return np.all(np.abs(t[:, :ell]) + zr <= dr, axis=1)

    def collect(targets: np.ndarray, prods: np.ndarray, mask: np.ndarray):
        if not mask.any():
            return
        t, p = targets[mask], prods[mask]
        e = G.mul_arr(G.inv_arr(lift(t)), p)
        if np.any(cd.project_arr(e)):
            raise ChartError("quotient chart is not an exact homomorphism on the working region")
        for row in np.unique(cd.central_part_arr(e), axis=0):
            errs.add(tuple(int(x) for x in row))

    inv_all = G.inv_arr(lifted)
    for k in range(len(pts)):
        r, gr, gr_inv = pts[k], lifted[k], inv_all[k]
        collect(r + pts, G.mul_arr(gr, lifted), admissible(r + pts))
        collect(r - pts, G.mul_arr(gr, inv_all), admissible(r - pts))
        collect(-r + pts, G.mul_arr(gr_inv, lifted), admissible(-r + pts))
    t = -pts
    collect(t, inv_all, admissible(t))
    return sorted(errs)


def _product_chart(G: GroupSpec, cd, base: Chart, centre: Chart, calH, notes=()) -> Chart:
    """phi(u, v) = lift(phi0(u)) * iso(phi1(v)) with vectors interleaved as ints then torsion."""
    l0, l1 = base.ell, centre.ell
    t0, t1 = len(base.gamma), len(centre.gamma)

    def split(v: np.ndarray):
        u = np.concatenate([v[:, :l0], v[:, l0 + l1:l0 + l1 + t0]], axis=1)
        w = np.concatenate([v[:, l0:l0 + l1], v[:, l0 + l1 + t0:]], axis=1)
        return u, w

    def join(u: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.concatenate([u[:, :l0], w[:, :l1], u[:, l0:], w[:, l1:]], axis=1)

    def phi(v: np.ndarray) -> np.ndarray:
        u, w = split(v)
        return G.mul_arr(cd.lift_arr(base.phi_arr(u)), cd.iso_arr(centre.phi_arr(w)))

    phi_inv = None
    if base.phi_inv_arr is not None and centre.phi_inv_arr is not None and calH is None:
        def phi_inv(g: np.ndarray) -> np.ndarray:
            g = np.asarray(g, dtype=np.int64)
            u = base.phi_inv_arr(cd.project_arr(g))
            rest = G.mul_arr(G.inv_arr(cd.lift_arr(base.phi_arr(u))), g)
            w = centre.phi_inv_arr(cd.central_part_arr(rest))
            return join(u, w)

    def combine(A: Rect, B: Rect) -> Rect:
        return rec(A.radius + B.radius, A.gamma + B.gamma)

    return Chart(G, l0 + l1, base.gamma + centre.gamma, combine(base.zee, centre.zee),
                 combine(base.dom, centre.dom), phi, calH, phi_inv, tuple(notes))


def _quotient_base_chart(G: GroupSpec, H: Subgroup, F, lam) -> Chart:
    """Base case: G abelian, chart of G/H through a section of the Smith form."""
    lq = LatticeQuotient.build(G.moduli, [list(h) for h in H.generators])
    ell, gamma = lq.free_rank, lq.torsion

    def phi(v: np.ndarray) -> np.ndarray:
        return lq.section_many(v)

    coords = lq.coords_many(np.array(F, dtype=np.int64).reshape(-1, G.dim)) if F else np.zeros((0, ell))
    zee = rec(_cover_radius(coords, ell), gamma)
    return Chart(G, ell, gamma, zee, _dom_for(zee, lam), phi, (H,), None,
                 (f"quotient by <{','.join(format_element(h) for h in H.generators)}>",))


def _dedupe(subgroups: Sequence[Subgroup], bound: int) -> list[Subgroup]:
    out: list[Subgroup] = []
    for H in subgroups:
        verdicts = [H.equals(K, bound) for K in out]
        if any(v is None for v in verdicts):
            raise ChartError("could not decide equality of two subgroups within the bound")
        if not any(verdicts):
            out.append(H)
    return out


def _certify_conjugate(S: Sequence[Subgroup], bound: int) -> None:
    first = S[0]
    G = first.ambient
    for H in S[1:]:
        eq = first.equals(H, bound)
        if eq:
            continue
        box = (2 * bound + 1) ** G.dim
        if box > 200_000:
            raise ChartError("conjugacy of S not certifiable within bound (inconclusive)")
        found = False
        for g in itertools.product(range(-bound, bound + 1), repeat=G.dim):
            if first.conjugate(G.reduce(g)).equals(H, bound):
                found = True
                break
        if not found:
            raise ChartError("conjugacy of S not certifiable within bound (inconclusive)")


def build_chart_general(G: GroupSpec, S: Sequence[Subgroup], F: Sequence[Sequence[int]],
                        lam, eta, bound: int = 3) -> Chart:
    """A chart whose subgroup family contains S and is closed under conjugation by phi(eta.zee)."""
    if not S:
        raise ChartError("S must be nonempty")
    S = list(S)
    _certify_conjugate(S, bound)
    F = [G.check(f) for f in F]
    if G.is_abelian:
        return _quotient_base_chart(G, S[0], F, lam)
    if G.nilpotency_class > 2:
        raise ChartError("only class <= 2 groups are in the catalog")
    cd = center_decomposition(G)
    Q = cd.quotient
    S0 = _dedupe([Subgroup(Q, tuple(cd.project(h) for h in H.generators)) for H in S], bound)
    base = build_chart_general(Q, S0, [cd.project(f) for f in F], lam, eta, bound)

    def lift(u: np.ndarray) -> np.ndarray:
        return cd.lift_arr(base.phi_arr(u))

    conj_pts = rect_array(rects.scale(as_fraction(eta), base.zee))
    conjugators = [tuple(int(x) for x in row) for row in lift(conj_pts)]
    family = _dedupe([H.conjugate(g) for H in S for g in conjugators], bound)

    # H cap zeta, identical for every member of the family in class 2
    H = S[0]
    proj_rows = [cd.project(h) for h in H.generators]
    central_gens = []
    for coeffs in kernel_basis(proj_rows):
        word = G.product(G.pow(h, c) for h, c in zip(H.generators, coeffs))
        central_gens.append(cd.iso_inv(word))
    for a, b in itertools.combinations(H.generators, 2):
        central_gens.append(cd.iso_inv(G.commutator(a, b)))
    centre_sub = Subgroup(cd.center, tuple(central_gens))

    errs: set[Element] = set()
    for Hm in family:
        errs |= _coset_errors(G, cd, base, lift, Hm, F)
    centre = build_chart_general(cd.center, [centre_sub], sorted(errs), lam, eta, bound)
    chart = _product_chart(G, cd, base, centre, tuple(family),
                           notes=(f"central errors swept over {base.dom}",))
    _check_conjugation_closure(chart, eta, bound)
    return chart


def _coset_errors(G, cd, base: Chart, lift, Hm: Subgroup, F) -> set[Element]:
    """Central b with phi0'(t)^-1 p in b.Hm for every identity the quotient chart satisfies."""
    proj = [cd.project(h) for h in Hm.generators]
    lq = LatticeQuotient.build(cd.quotient.moduli, proj)
    pts = rect_array(base.dom)
    lifted = lift(pts)
    inv_all = G.inv_arr(lifted)
    zr = np.array(base.zee.radius, dtype=np.int64)
    dr = np.array(base.dom.radius, dtype=np.int64)
    ell = base.ell
    found: set[Element] = set()

    def absorb(e_rows: np.ndarray):
        for row in np.unique(e_rows, axis=0):
            e = tuple(int(x) for x in row)
            coeffs = lq.coefficients(cd.project(e))
            if coeffs is None:
                raise ChartError("quotient chart identity fails modulo the projected subgroup")
            h = G.product(G.pow(g, c) for g, c in zip(Hm.generators, coeffs))
            found.add(cd.iso_inv(G.mul(e, G.inv(h))))

    def collect(t: np.ndarray, prods: np.ndarray):
        mask = np.all(np.abs(t[:, :ell]) + zr <= dr, axis=1)
        if mask.any():
            absorb(G.mul_arr(G.inv_arr(lift(t[mask])), prods[mask]))

    for k in range(len(pts)):
        r = pts[k]
        collect(r + pts, G.mul_arr(lifted[k], lifted))
        collect(r - pts, G.mul_arr(lifted[k], inv_all))
        collect(-r + pts, G.mul_arr(inv_all[k], lifted))
    collect(-pts, inv_all)
    if F:
        qcoords = np.array([cd.project(f) for f in F], dtype=np.int64)
        # the base chart covers F modulo the projected subgroup; locate each f
        zpts = rect_array(base.zee)
        zimg = base.phi_arr(zpts)
        for f, q in zip(F, qcoords):
            diffs = q - zimg
            ok = lq.contains_many(diffs)
            if not ok.any():
                raise ChartError(f"{f} is not covered by the quotient chart")
            u = zpts[int(np.argmax(ok))]
            e = G.mul(G.inv(tuple(int(x) for x in lift(u[None])[0])), f)
            absorb(np.array([e]))
    return found


def _check_conjugation_closure(chart: Chart, eta, bound: int) -> None:
    G = chart.group
    pts = rect_array(rects.scale(as_fraction(eta), chart.zee))
    for row in chart.phi_arr(pts):
        g = tuple(int(x) for x in row)
        for H in chart.calH:
            K = H.conjugate(g)
            if not any(K.equals(M, bound) for M in chart.calH):
                raise ChartError(f"phi(u) H phi(u)^-1 leaves the family for phi(u) = {g}")


# -- embedding into an ambient group --------------------------------------------


def embed_chart(chart: Chart, ambient: GroupSpec, images: Sequence[Sequence[int]]) -> Chart:
    """Compose a chart of Z^k with the homomorphism e_j -> images[j] into ``ambient``.

    The images must commute pairwise so the map is a homomorphism.
    """
    if chart.group.kind != "free" or len(images) != chart.group.n:
        raise ChartError("embedding needs a chart of Z^k and k images")
    images = [ambient.check(g) for g in images]
    for a, b in itertools.combinations(images, 2):
        if ambient.mul(a, b) != ambient.mul(b, a):
            raise ChartError(f"images {a} and {b} do not commute")
    k = len(images)

    def hom(v: np.ndarray) -> np.ndarray:
        out = np.zeros((len(v), ambient.dim), dtype=np.int64)
        for j in range(k):
            out = ambient.mul_arr(out, ambient.pow_arr(images[j], v[:, j]))
        return out

    def phi(v: np.ndarray) -> np.ndarray:
        return hom(chart.phi_arr(v))

    notes = chart.notes + ("embedded via " + " ".join(format_element(g) for g in images),)
    return Chart(ambient, chart.ell, chart.gamma, chart.zee, chart.dom, phi, chart.calH, None, notes)


# -- verification ----------------------------------------------------------------


@dataclass
class ChartReport:
    region: Rect
    mode: str
    checked: dict[str, int] = field(default_factory=lambda: {a: 0 for a in AXIOMS})
    passed: dict[str, int] = field(default_factory=lambda: {a: 0 for a in AXIOMS})
    counterexamples: list[tuple[str, tuple, tuple, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples and all(self.checked[a] == self.passed[a] for a in AXIOMS)

    def merge(self, other: "ChartReport") -> None:
        for a in AXIOMS:
            self.checked[a] += other.checked[a]
            self.passed[a] += other.passed[a]
        self.counterexamples.extend(other.counterexamples)

    def lines(self) -> list[str]:
        out = [f"region = {self.region}", f"mode = {self.mode}"]
        out += [f"{a}: {self.passed[a]}/{self.checked[a]}" for a in AXIOMS]
        for name, r, s, h in self.counterexamples[:10]:
            out.append(f"counterexample {name}: r={r} s={s} H#{h}")
        return out


def _member(H: Subgroup, elems: np.ndarray, bound: int | None) -> np.ndarray:
    if not H.generators:
        return ~np.any(elems, axis=1)
    if H.is_exact:
        return H.member_many(elems)
    return np.array([H.contains(tuple(int(x) for x in e), bound) is True for e in elems])


class _Verifier:
    def __init__(self, c: Chart, bound: int | None):
        self.c = c
        self.G = c.group
        self.bound = bound
        self.zr = np.array(c.zee.radius, dtype=np.int64)
        self.dr = np.array(c.dom.radius, dtype=np.int64)
        zpts = rect_array(c.zee)
        order = np.argsort(np.abs(zpts[:, : c.ell]).sum(axis=1), kind="stable")
        self.zpts = zpts[order]
        self.subgroups = c.subgroups()
        self.fast = c.calH is None and c.phi_inv_arr is not None

    def admissible(self, t: np.ndarray) -> np.ndarray:
        ell = self.c.ell
        return np.all(np.abs(t[:, :ell]) + self.zr <= self.dr, axis=1)

    def witnessed(self, t: np.ndarray, p: np.ndarray, H: Subgroup) -> np.ndarray:
        """For each row: is there z in zee with phi(t + z)^-1 p in H?"""
        c = self.c
        if self.fast:
            z = c.phi_inv_arr(p) - c.normalize(t)
            ok = np.all(np.abs(z[:, : c.ell]) <= self.zr, axis=1)
            # the forward map must reproduce p exactly
            back = c.phi_arr(c.normalize(t) + z)
            return ok & np.all(back == p, axis=1)
        done = np.zeros(len(t), dtype=bool)
        for z in self.zpts:
            todo = ~done
            if not todo.any():
                break
            tt = t[todo] + z
            e = self.G.mul_arr(self.G.inv_arr(c.phi_arr(tt)), p[todo])
            hit = _member(H, e, self.bound)
            idx = np.flatnonzero(todo)
            done[idx[hit]] = True
        return done

    def run(self, rs: np.ndarray, ss: np.ndarray, report: ChartReport, pairwise: bool) -> None:
        """If pairwise, check every r in rs against all of ss; else zip rs with ss."""
        c, G = self.c, self.G
        phis = c.phi_arr(ss)
        phis_inv = G.inv_arr(phis)
        rows = range(len(rs))
        for k in rows:
            if pairwise:
                r = np.broadcast_to(rs[k], ss.shape)
                s, ps, ps_inv = ss, phis, phis_inv
            else:
                r, s = rs[k:k + 1], ss[k:k + 1]
                ps, ps_inv = phis[k:k + 1], phis_inv[k:k + 1]
            pr = c.phi_arr(r[:1])
            pr_inv = G.inv_arr(pr)
            for h_idx, H in enumerate(self.subgroups):
                same = np.all(r == s, axis=1)
                # injectivity modulo H
                diff = G.mul_arr(ps_inv, np.broadcast_to(pr, ps.shape))
                clash = _member(H, diff, self.bound) & ~same
                report.checked["injective"] += int((~same).sum())
                report.passed["injective"] += int((~same).sum() - clash.sum())
                self._record(report, "injective", r, s, clash, h_idx)
                checks = (
                    ("product", r + s, G.mul_arr(np.broadcast_to(pr, ps.shape), ps)),
                    ("right-quotient", r - s, G.mul_arr(np.broadcast_to(pr, ps.shape), ps_inv)),
                    ("left-quotient", -r + s, G.mul_arr(np.broadcast_to(pr_inv, ps.shape), ps)),
                )
                for name, t, p in checks:
                    mask = self.admissible(t)
                    if not mask.any():
                        continue
                    ok = self.witnessed(t[mask], p[mask], H)
                    report.checked[name] += int(mask.sum())
                    report.passed[name] += int(ok.sum())
                    bad = np.zeros(len(t), dtype=bool)
                    bad[np.flatnonzero(mask)[~ok]] = True
                    self._record(report, name, r, s, bad, h_idx)
                t = -r[:1]
                if self.admissible(t)[0]:
                    ok = self.witnessed(t, pr_inv, H)[0]
                    report.checked["inverse"] += 1
                    report.passed["inverse"] += int(ok)
                    if not ok:
                        self._record(report, "inverse", r[:1], r[:1], np.array([True]), h_idx)

    @staticmethod
    def _record(report, name, r, s, bad, h_idx):
        if len(report.counterexamples) >= 20:
            return
        for i in np.flatnonzero(bad)[: 20 - len(report.counterexamples)]:
            report.counterexamples.append(
                (name, tuple(int(x) for x in r[i]), tuple(int(x) for x in s[i]), h_idx))


def verify_chart(c: Chart, mode: str = "exhaustive", region: Rect | None = None, trials: int = 10_000,
                 seed: int = 0, budget: int = 50_000_000, jobs: int = 1,
                 bound: int | None = None) -> ChartReport:
    """Check the chart axioms on ``region`` (default 3.zee).

    Exhaustive mode checks every ordered pair; sampled mode draws
    ``trials`` pairs uniformly from ``region`` with the given seed.
    """
    region = region if region is not None else rects.scale(3, c.zee)
    if not rects.contains(c.dom, region):
        raise ChartError(f"region {region} is not inside dom {c.dom}")
    ver = _Verifier(c, bound)
    report = ChartReport(region, mode if mode == "exhaustive" else f"sampled({trials},{seed})")
    if mode == "exhaustive":
        pts = rect_array(region, budget)
        if len(pts) ** 2 > budget:
            raise BudgetExceeded(f"{len(pts) ** 2} pairs exceed budget {budget}", needed=len(pts) ** 2)
        chunks = np.array_split(np.arange(len(pts)), max(1, jobs))

        def work(idx):
            part = ChartReport(region, report.mode)
            ver.run(pts[idx], pts, part, pairwise=True)
            return part

        if jobs > 1:
            with ThreadPoolExecutor(jobs) as pool:
                parts = list(pool.map(work, chunks))
        else:
            parts = [work(ch) for ch in chunks]
        for part in parts:
            report.merge(part)
        report.counterexamples = report.counterexamples[:20]
        return report
    rng = np.random.default_rng(seed)

    def draw(n):
        cols = [rng.integers(c0 - r0, c0 + r0 + 1, n) for c0, r0 in zip(region.center, region.radius)]
        cols += [rng.integers(0, m, n) for m in region.gamma]
        return np.stack(cols, axis=1).astype(np.int64) if cols else np.zeros((n, 0), np.int64)

    rs, ss = draw(trials), draw(trials)
    ver.run(rs, ss, report, pairwise=False)
    return report
