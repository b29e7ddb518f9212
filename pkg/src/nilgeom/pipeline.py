"""The diagonal array of relations E_(k,n), the eventual-agreement report and the E0 coding map.

Every clause of the array is re-checked after each column with the
independent verifiers of ``rough`` and ``ortho``; the constructor's own
bookkeeping is never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import Chart
from .errors import ClauseError, NilgeomError
from .groups import Element
from .markers import build_selector
from .ortho import OrthoCertificate, OrthoParams, build_orthogonal_relation, is_orthogonal
from .rects import Rect, scale
from .rough import (EqRel, CheckReport, RectCertificate, count_boundary_clusters, not_inside_mask,
                    verify_rectangular)
from .scenario import (Scenario, build_scenario_window, default_b, level_chart, level_generators,
                       level_params, outer_region, validate_scales)
from .window import ChartAction, Window, canonical_labels, realize_chart


@dataclass
class LevelRun:
    k: int
    chart: Chart
    ca: ChartAction
    prm: OrthoParams
    generators: tuple[Element, ...]

    @property
    def ell(self) -> int:
        return self.chart.ell

    @property
    def A(self) -> Rect:
        return self.prm.A

    @property
    def qA(self) -> Rect:
        return scale(self.prm.q, self.prm.A)


@dataclass
class ArrayState:
    scenario: Scenario
    window: Window
    levels: list[LevelRun] = field(default_factory=list)
    E: dict[tuple[int, int], EqRel] = field(default_factory=dict)
    F: dict[tuple[int, int], EqRel] = field(default_factory=dict)  # (row, column) -> auxiliary F_k
    sigma: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    certs: dict[tuple[int, int], OrthoCertificate] = field(default_factory=dict)
    counters: dict[int, np.ndarray] = field(default_factory=dict)  # clause (v) per row and point
    log: list[str] = field(default_factory=list)
    columns: int = 0
    failure: ClauseError | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def rows(self, n: int) -> int:
        return min(n, len(self.levels))

    def bottom(self) -> list[EqRel]:
        return [self.E[(1, n)] for n in range(1, self.columns + 1)]

    def report_lines(self) -> list[str]:
        s = self.scenario
        out = [f"scenario = {s.name}", f"window = {self.window.describe()}",
               f"levels = {len(self.levels)}", f"columns built = {self.columns}"]
        for lv in self.levels:
            out.append(f"level {lv.k}: ell={lv.ell} A={lv.A} eps={lv.prm.eps} q={lv.prm.q} "
                       f"p={lv.prm.p_value} b={lv.prm.b}")
        out += self.log
        out.append("result = ok" if self.ok else f"result = FAIL: {self.failure}")
        return out


# -- independent checks -------------------------------------------------------------


def _disagreement(mask: np.ndarray, la: np.ndarray, lb: np.ndarray) -> tuple[int, int] | None:
    """Two masked points that one labelling joins and the other separates, or None."""
    idx = np.flatnonzero(mask)
    a, b = la[idx], lb[idx]
    for u, v in ((a, b), (b, a)):
        order = np.lexsort((v, u))
        us, vs = u[order], v[order]
        bad = np.flatnonzero((us[1:] == us[:-1]) & (vs[1:] != vs[:-1]))
        if len(bad):
            return int(idx[order[bad[0]]]), int(idx[order[bad[0] + 1]])
    return None


def _fail(state: ArrayState, msg: str, column: int, row: int, witness=None) -> None:
    raise ClauseError(f"column {column}, row {row}: {msg}", column=column, row=row, witness=witness)


def _check_column(state: ArrayState, n: int) -> None:
    w = state.window
    top = state.rows(n)
    gens = [g for lv in state.levels[:top] for g in lv.generators]
    orbit = EqRel(w.orbit_labels(gens))
    for k in range(1, top + 1):
        lv = state.levels[k - 1]
        E, Fk = state.E[(k, n)], state.F[(k, n)]
        # (i) finite and inside the G_n orbit relation
        if not E.refines(orbit):
            x = int(np.flatnonzero(orbit.labels[E.labels] != orbit.labels)[0])
            _fail(state, "(i) class leaves the orbit", n, k, (x, int(E.labels[x])))
        # (ii) sub-rectangular: contains the certified rectangular F_k
        cert = verify_rectangular(Fk, lv.ca, lv.A, lv.prm.eps, bound=lv.prm.dom_bound_value)
        if not cert.ok:
            lab, why = cert.failures[0]
            _fail(state, f"(ii) F_{k} is not rectangular: class {lab}: {why}", n, k, (lab,))
        if not Fk.refines(E):
            x = int(np.flatnonzero(E.labels[Fk.labels] != E.labels)[0])
            _fail(state, f"(ii) F_{k} does not refine E_({k},{n})", n, k, (x,))
        # (iii) orthogonal to every earlier relation in the row
        for t in range(k, n):
            res = is_orthogonal(E, state.E[(k, t)], lv.ca, lv.qA, lv.prm.spread_value)
            if not res.ok:
                _fail(state, f"(iii) not orthogonal to E_({k},{t}) on axis {res.axis}", n, k, (res.point,))
        # (v) per-point count of relations that are not constant on phi_k(8p.A_k) . x
        big = scale(8 * lv.prm.p_value, lv.A)
        state.counters[k] = state.counters.get(k, np.zeros(w.n_points, np.int64)) + \
            not_inside_mask(E, lv.ca, big)
        worst = int(np.argmax(state.counters[k]))
        if state.counters[k][worst] > lv.prm.b:
            _fail(state, f"(v) point {worst} is cut by {int(state.counters[k][worst])} > b = {lv.prm.b} "
                         f"relations", n, k, (worst,))
        state.log.append(f"column {n} row {k}: (i) (ii) (iii) (v) pass; max cut count "
                         f"{int(state.counters[k][worst])} <= b = {lv.prm.b}; classes "
                         f"{len(np.unique(E.labels))}")
    for k in range(1, top):
        upper = state.levels[k]
        # (iv) rows k and k+1 agree where phi_(k+1)(zee_(k+1)) . x stays inside [x]_(E_(k+1,n))
        inside = ~not_inside_mask(state.E[(k + 1, n)], upper.ca, upper.chart.zee)
        bad = _disagreement(inside, state.E[(k, n)].labels, state.E[(k + 1, n)].labels)
        if bad is not None:
            _fail(state, f"(iv) rows {k} and {k + 1} disagree", n, k, bad)
    for k in range(1, top + 1):
        lv = state.levels[k - 1]
        # (vi) down the column from row k where phi_k(3 zee_k) . x stays inside [x]_(E_(k,n))
        inside = ~not_inside_mask(state.E[(k, n)], lv.ca, scale(3, lv.chart.zee))
        for t in range(1, k):
            bad = _disagreement(inside, state.E[(k, n)].labels, state.E[(t, n)].labels)
            if bad is not None:
                _fail(state, f"(vi) rows {t} and {k} disagree", n, k, bad)
    if top > 1:
        state.log.append(f"column {n}: (iv) (vi) pass")


# -- construction ------------------------------------------------------------------------


def _setup(state: ArrayState, columns: int) -> None:
    s = state.scenario
    charts = [level_chart(s, k) for k in range(1, len(s.levels) + 1)]
    ells = [c.ell for c in charts]
    for k, c in enumerate(charts, start=1):
        prm = level_params(s, k, c, default_b(s, k, ells))
        if prm.mode != "relaxed":
            raise ClauseError(f"level {k}: strict constants are symbolic-only; the array needs relaxed mode",
                              column=0, row=k)
        ca = realize_chart(c, state.window, outer_region(prm))
        state.levels.append(LevelRun(k, c, ca, prm, level_generators(s, k)))


def _marker_order(state: ArrayState) -> np.ndarray | None:
    s = state.scenario
    if s.order == "index":
        return None
    return np.random.default_rng(s.seed).permutation(state.window.n_points)


def _build_column(state: ArrayState, n: int, order) -> None:
    top = state.rows(n)
    for k in range(1, top + 1):
        lv = state.levels[k - 1]
        existing = [state.E[(k, t)] for t in range(k, n)]
        try:
            Fk, cert = build_orthogonal_relation(lv.ca, lv.prm, existing, order=order)
        except NilgeomError as exc:
            raise ClauseError(f"column {n}, row {k}: auxiliary relation failed: {exc}", column=n, row=k,
                              witness=getattr(exc, "point", None)) from exc
        state.F[(k, n)] = Fk
        state.certs[(k, n)] = cert
    state.E[(top, n)] = state.F[(top, n)]
    for k in range(top - 1, 0, -1):
        lv = state.levels[k - 1]
        K = lv.ca.vectors_and_elements(lv.chart.dom)[1]
        sig = build_selector(state.window, state.F[(k, n)].labels, K)
        state.sigma[(k, n)] = sig
        state.E[(k, n)] = EqRel(canonical_labels(state.E[(k + 1, n)].labels[sig]))


def build_free_array(s: Scenario, columns: int | None = None, strict: bool = True) -> ArrayState:
    """Build columns 1..N left to right, re-checking clauses (i)-(vi) after each column.

    With more columns than levels the array keeps its top row at the last
    level. In non-strict mode the first failure is recorded and the array
    built so far is returned.
    """
    columns = s.columns if columns is None else columns
    state = ArrayState(s, build_scenario_window(s))
    try:
        scales = validate_scales(s)
        if not scales.ok:
            first = scales.failed()[0]
            raise ClauseError(f"scale check failed: {first.line()}", column=0, row=0)
        _setup(state, columns)
        order = _marker_order(state)
        for n in range(1, columns + 1):
            _build_column(state, n, order)
            _check_column(state, n)
            state.columns = n
        _measure_bottom(state)
    except ClauseError as exc:
        if strict:
            raise
        state.failure = exc
    except NilgeomError as exc:
        err = ClauseError(f"setup failed: {exc}", column=0, row=0)
        if strict:
            raise err from exc
        state.failure = err
    return state


def _measure_bottom(state: ArrayState) -> None:
    """Report, without asserting, whether bottom-row relations are pairwise orthogonal."""
    if not state.levels:
        return
    lv = state.levels[0]
    rel = state.bottom()
    for a in range(len(rel)):
        for b in range(a + 1, len(rel)):
            res = is_orthogonal(rel[a], rel[b], lv.ca, lv.qA, lv.prm.spread_value)
            state.log.append(f"bottom row E_(1,{a + 1}) vs E_(1,{b + 1}): {res.line()} (measured only)")


# -- orthogonal sequences on one level ----------------------------------------------------


@dataclass
class SequenceRun:
    """F_1, F_2, ... at one level, each built against all earlier ones and re-certified."""

    level: LevelRun
    relations: list[EqRel] = field(default_factory=list)
    certs: list[OrthoCertificate] = field(default_factory=list)
    rect: list[RectCertificate] = field(default_factory=list)
    orth: list[list[str]] = field(default_factory=list)
    clusters: list[CheckReport] = field(default_factory=list)
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def lines(self) -> list[str]:
        lv = self.level
        out = [f"level {lv.k}: A={lv.A} eps={lv.prm.eps} q={lv.prm.q} p={lv.prm.p_value}",
               f"relations built = {len(self.relations)}"]
        for j, (rc, orth) in enumerate(zip(self.rect, self.orth), start=1):
            out.append(f"F_{j}: rectangular={rc.ok} classes certified={len(rc.entries)} failures={len(rc.failures)}")
            out += [f"F_{j}: {line}" for line in orth]
        for rep in self.clusters:
            out += rep.lines()
        out.append("result = ok" if self.ok else f"result = FAIL: {self.failure}")
        return out


def cluster_scale(prm: OrthoParams) -> int:
    """Relaxed stand-in for the neighbourhood scales 2^(17l) and 2^(19l) of the cluster count."""
    return 8 * prm.p_value


def orthogonal_sequence(s: Scenario, level: int = 1, count: int | None = None,
                        cluster_points: int = 8) -> SequenceRun:
    """Build ``count`` relations at one level, each orthogonal to all earlier ones, and re-verify."""
    count = s.columns if count is None else count
    w = build_scenario_window(s)
    c = level_chart(s, level)
    ells = [level_chart(s, k).ell for k in range(1, len(s.levels) + 1)]
    prm = level_params(s, level, c, default_b(s, level, ells))
    if prm.mode != "relaxed":
        raise NilgeomError("strict constants are symbolic-only; use a relaxed level")
    ca = realize_chart(c, w, outer_region(prm))
    lv = LevelRun(level, c, ca, prm, level_generators(s, level))
    run = SequenceRun(lv)
    order = None if s.order == "index" else np.random.default_rng(s.seed).permutation(w.n_points)
    rng = np.random.default_rng(s.seed)
    for j in range(1, count + 1):
        try:
            F, cert = build_orthogonal_relation(ca, prm, run.relations, order=order)
        except NilgeomError as exc:
            run.failure = f"F_{j}: {exc}"
            return run
        rc = verify_rectangular(F, ca, prm.A, prm.eps, bound=prm.dom_bound_value)
        orth = []
        for t, E in enumerate(run.relations, start=1):
            res = is_orthogonal(F, E, ca, lv.qA, prm.spread_value)
            orth.append(f"vs F_{t}: {res.line()}")
            if not res.ok and run.failure is None:
                run.failure = f"F_{j} is not orthogonal to F_{t}"
        if not rc.ok and run.failure is None:
            run.failure = f"F_{j} is not rectangular: class {rc.failures[0][0]}: {rc.failures[0][1]}"
        scale_ = cluster_scale(prm)
        for x in np.sort(rng.choice(w.n_points, size=min(cluster_points, w.n_points), replace=False)):
            for i in range(1, lv.ell + 1):
                rep = count_boundary_clusters(F, ca, prm.A, prm.eps, prm.q, i, int(x), reach=scale_,
                                              spread=scale_, enforce=False)
                rep.name = f"clusters F_{j} axis {i} near {int(x)}"
                run.clusters.append(rep)
                if not rep.ok and run.failure is None:
                    run.failure = rep.failures[0]
        run.relations.append(F)
        run.certs.append(cert)
        run.rect.append(rc)
        run.orth.append(orth)
    return run


# -- eventual agreement -----------------------------------------------------------------


@dataclass
class AgreementReport:
    pairs: int = 0
    rows: dict[str, dict] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = [f"pairs = {self.pairs}"]
        for key, info in self.rows.items():
            out.append(f"{key}: row failures max {info['row_max']} (bound {info['bound']}), "
                       f"bottom failures max {info['bottom_max']}, histogram {info['hist']}, "
                       f"worst {info['worst']}")
        out += [f"VIOLATION {v}" for v in self.violations]
        return out


def verify_eventual_agreement(state: ArrayState, samples: int = 1000, seed: int = 0) -> AgreementReport:
    """For sampled x and generators g of each level k, count columns separating x from g . x."""
    w = state.window
    rng = np.random.default_rng(seed)
    pts = np.sort(rng.choice(w.n_points, size=min(samples, w.n_points), replace=False))
    rep = AgreementReport()
    for lv in state.levels:
        k = lv.k
        G = w.group
        gens = [G.identity] + [g for h in lv.generators for g in (h, G.inv(h))]
        cols = [n for n in range(k, state.columns + 1) if (k, n) in state.E]
        for g in gens:
            ys = w.act(g, pts)
            row_fail = np.zeros(len(pts), np.int64)
            bottom_fail = np.zeros(len(pts), np.int64)
            for n in cols:
                row_fail += state.E[(k, n)].labels[pts] != state.E[(k, n)].labels[ys]
                bottom_fail += state.E[(1, n)].labels[pts] != state.E[(1, n)].labels[ys]
            i = int(np.argmax(row_fail)) if len(pts) else 0
            worst = None
            if len(pts):
                x, y = int(pts[i]), int(ys[i])
                worst = (x, y, [n for n in cols if state.E[(k, n)].labels[x] != state.E[(k, n)].labels[y]])
            key = f"level {k} g={g}"
            bound = 0 if g == G.identity else lv.ell
            rep.rows[key] = {"row_max": int(row_fail.max(initial=0)), "bound": bound,
                             "bottom_max": int(bottom_fail.max(initial=0)),
                             "hist": dict(sorted(zip(*[a.tolist() for a in np.unique(row_fail, return_counts=True)]))),
                             "worst": worst}
            rep.pairs += len(pts)
            if row_fail.max(initial=0) > bound:
                rep.violations.append(f"{key}: pair {worst[0]},{worst[1]} separated in columns {worst[2]}")
    return rep


# -- E0 coding --------------------------------------------------------------------------


def _circular_span(coords: np.ndarray, labels: np.ndarray, radix: int) -> int:
    """Largest circular extent of a class along one axis."""
    order = np.lexsort((coords, labels))
    lab, c = labels[order], coords[order]
    cuts = np.flatnonzero(np.diff(lab)) + 1
    span = 0
    for part in np.split(c, cuts):
        u = np.unique(part)
        if len(u) == 1:
            continue
        gaps = np.diff(np.r_[u, u[0] + radix])
        span = max(span, radix - int(gaps.max()))
    return span


@dataclass
class E0Code:
    blocks: np.ndarray  # (points, levels + 1); block 0 is the point itself
    widths: tuple[int, ...]
    sizes: tuple[int, ...]  # |T_n|, the size of the group-element table of level n

    def word(self, x: int) -> str:
        return "".join(format(int(v), f"0{wd}b") for v, wd in zip(self.blocks[x], self.widths))

    def injective(self) -> tuple[bool, tuple[int, int] | None]:
        _, first, inv = np.unique(self.blocks, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        clash = np.flatnonzero(first[inv] != np.arange(len(inv)))
        if len(clash):
            return False, (int(first[inv[clash[0]]]), int(clash[0]))
        return True, None

    def dump(self) -> str:
        head = f"# widths {list(self.widths)} tables {list(self.sizes)}\n"
        return head + "".join(f"{x} {self.word(x)}\n" for x in range(len(self.blocks)))


def e0_encode(state: ArrayState) -> E0Code:
    """Blocks theta_n(sigma_n(x), g_n(x)) from the bottom-row selectors S_n.

    sigma_n(x) is the point S_n(x) itself; a neighbourhood table over
    T_n . S_n(x) is a function of that point and adds nothing. On abelian
    windows T_n = K_n K_(n-1) is the box of class extents, so g_n(x) is the
    unique box element with S_n(x) = g_n(x) . S_(n-1)(x); otherwise T_n is the
    whole reduced group.
    """
    w = state.window
    if not w.is_regular:
        raise NilgeomError("E0 coding needs a regular window (free action)")
    G, N = w.group, w.period
    npts = w.n_points
    rels = state.bottom()
    S = [np.arange(npts)]
    for E in rels:
        least = np.full(npts, npts, dtype=np.int64)
        np.minimum.at(least, E.labels, np.arange(npts))
        S.append(least[E.labels])
    coords = w.rep_coords
    box_prev = None
    blocks = [np.arange(npts, dtype=np.int64)]
    widths = [max(1, int(npts - 1).bit_length())]
    sizes = [1]
    for n in range(1, len(S)):
        g = G.mul_arr(coords[S[n]], G.inv_arr(coords[S[n - 1]], N), N)
        if G.is_abelian:
            box = np.array([_circular_span(coords[:, j], rels[n - 1].labels, r)
                            for j, r in enumerate(w.radices)], dtype=np.int64)
            prev = box_prev if box_prev is not None else np.zeros_like(box)
            reach = box + prev
            box_prev = box
            radices = np.array(w.radices, dtype=np.int64)
            if np.any(2 * reach + 1 > radices):
                j = int(np.flatnonzero(2 * reach + 1 > radices)[0])
                raise NilgeomError(f"level {n}: g_n is not unique, table K_n K_(n-1) wraps axis {j}")
            centred = (g + reach) % radices
            if np.any(centred > 2 * reach):
                raise NilgeomError(f"level {n}: g_n leaves K_n K_(n-1)")
            side = 2 * reach + 1
            rank = np.zeros(npts, dtype=np.int64)
            for j in range(len(side)):
                rank = rank * side[j] + centred[:, j]
            size = int(np.prod(side))
        else:
            rank = w.index_of(g)
            size = w.size_reduced
        blocks.append(S[n].astype(np.int64) * size + rank)
        widths.append(max(1, int(npts * size - 1).bit_length()))
        sizes.append(size)
    return E0Code(np.stack(blocks, axis=1), tuple(widths), tuple(sizes))


def agreement_threshold(state: ArrayState, x: int, y: int) -> int | None:
    """Least m with x E_(1,n) y for every built n >= m, or None if they differ in the last column."""
    rels = state.bottom()
    m = len(rels) + 1
    for n in range(len(rels), 0, -1):
        if rels[n - 1].labels[x] != rels[n - 1].labels[y]:
            break
        m = n
    return m if m <= len(rels) else None
