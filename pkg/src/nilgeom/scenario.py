"""Scenario files: a versioned INI description of a window, a subgroup chain and per-level constants.

The writer emits a canonical text form, so ``format_scenario(parse_scenario(t)) == t``
for every canonical ``t`` and ``parse_scenario(format_scenario(s)) == s`` for every scenario.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rects
from .charts import Chart, build_abelian_chart, build_chart_free, build_chart_general, embed_chart
from .errors import ChartError, FreenessError, InjectivityError, NilgeomError, ParseError
from .groups import Element, GroupSpec, Subgroup, format_element, format_group, parse_element, parse_group
from .ortho import OrthoParams, check_parameters
from .rects import Rect, format_rect, parse_rect, rec, scale
from .window import ChartAction, Window, build_coset_window, build_window

VERSION = 1
CHART_KINDS = ("abelian", "free", "general")
ORDERS = ("index", "random")


@dataclass(frozen=True)
class Level:
    spec: GroupSpec
    chart: str
    generators: tuple[Element, ...]
    epsilon: Fraction
    q: Fraction
    lam: Fraction
    zee: Rect | None = None
    dom: Rect | None = None
    cover: tuple[Element, ...] = ()
    subgroups: tuple[tuple[Element, ...], ...] = ()
    eta: Fraction | None = None
    A: Rect | None = None
    p: int | None = None
    b: int | None = None
    sep: tuple[int, ...] | None = None
    guard: tuple[int, ...] | None = None
    spread: int | None = None
    dom_bound: Fraction | None = None
    mode: str = "relaxed"


@dataclass(frozen=True)
class Scenario:
    name: str
    group: GroupSpec
    period: int
    levels: tuple[Level, ...]
    window: str = "regular"
    subgroup: tuple[Element, ...] = ()
    seed: int = 0
    budget: int = 2_000_000
    columns: int = 1
    order: str = "index"
    version: int = VERSION


# -- text form -------------------------------------------------------------------

_ELEM_RE = re.compile(r"\([^()]*\)")
_SUB_RE = re.compile(r"<([^<>]*)>")


def _elements(text: str) -> tuple[Element, ...]:
    text = text.strip()
    found = _ELEM_RE.findall(text)
    if _ELEM_RE.sub("", text).strip():
        raise ParseError(f"stray text in element list {text!r}")
    return tuple(parse_element(t) for t in found)


def _fmt_elements(elems: Sequence[Element]) -> str:
    return " ".join(format_element(g) for g in elems)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {text!r}") from exc


def _int(text: str, key: str) -> int:
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ParseError(f"{key} must be an integer, got {text!r}") from exc


def _choice(text: str, allowed: Sequence[str], key: str) -> str:
    if text not in allowed:
        raise ParseError(f"{key} must be one of {', '.join(allowed)}, got {text!r}")
    return text


_LEVEL_KEYS = ("spec", "chart", "generators", "zee", "dom", "cover", "subgroups", "eta", "lambda",
               "A", "epsilon", "q", "p", "b", "sep", "guard", "spread", "dom_bound", "mode")
_SCENARIO_KEYS = ("version", "name", "group", "period", "window", "subgroup", "seed", "budget",
                  "columns", "order")


def _parse_level(sec, index: int) -> Level:
    unknown = set(sec) - set(_LEVEL_KEYS)
    if unknown:
        raise ParseError(f"level {index}: unknown keys {sorted(unknown)}")
    for key in ("spec", "chart", "epsilon", "q", "lambda"):
        if key not in sec:
            raise ParseError(f"level {index}: missing {key}")
    opt = lambda key, fn: fn(sec[key]) if key in sec else None
    return Level(
        spec=parse_group(sec["spec"]),
        chart=_choice(sec["chart"], CHART_KINDS, "chart"),
        generators=_elements(sec.get("generators", "")),
        epsilon=_frac(sec["epsilon"]), q=_frac(sec["q"]), lam=_frac(sec["lambda"]),
        zee=opt("zee", parse_rect), dom=opt("dom", parse_rect),
        cover=_elements(sec.get("cover", "")),
        subgroups=tuple(_elements(m) for m in _SUB_RE.findall(sec.get("subgroups", ""))),
        eta=opt("eta", _frac), A=opt("A", parse_rect),
        p=opt("p", lambda t: _int(t, "p")), b=opt("b", lambda t: _int(t, "b")),
        sep=opt("sep", _ints), guard=opt("guard", _ints),
        spread=opt("spread", lambda t: _int(t, "spread")), dom_bound=opt("dom_bound", _frac),
        mode=_choice(sec.get("mode", "relaxed"), ("relaxed", "strict"), "mode"))


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"scenario is not valid INI: {exc}") from exc
    if "scenario" not in cp:
        raise ParseError("missing [scenario] section")
    sec = cp["scenario"]
    unknown = set(sec) - set(_SCENARIO_KEYS)
    if unknown:
        raise ParseError(f"[scenario]: unknown keys {sorted(unknown)}")
    for key in ("version", "name", "group", "period"):
        if key not in sec:
            raise ParseError(f"[scenario]: missing {key}")
    version = _int(sec["version"], "version")
    if version != VERSION:
        raise ParseError(f"unsupported scenario version {version}")
    levels = []
    names = [s for s in cp.sections() if s != "scenario"]
    for k, name in enumerate(names, start=1):
        if name != f"level {k}":
            raise ParseError(f"expected section [level {k}], found [{name}]")
        levels.append(_parse_level(cp[name], k))
    if not levels:
        raise ParseError("a scenario needs at least one [level k] section")
    s = Scenario(
        name=sec["name"], group=parse_group(sec["group"]), period=_int(sec["period"], "period"),
        levels=tuple(levels), window=_choice(sec.get("window", "regular"), ("regular", "coset"), "window"),
        subgroup=_elements(sec.get("subgroup", "")), seed=_int(sec.get("seed", "0"), "seed"),
        budget=_int(sec.get("budget", "2000000"), "budget"),
        columns=_int(sec.get("columns", "1"), "columns"),
        order=_choice(sec.get("order", "index"), ORDERS, "order"), version=version)
    for k, lv in enumerate(s.levels, start=1):
        for g in lv.generators:
            if len(g) != s.group.dim:
                raise ParseError(f"level {k}: generator {format_element(g)} is not in {s.group}")
    return s


def format_scenario(s: Scenario) -> str:
    out = ["[scenario]", f"version = {s.version}", f"name = {s.name}", f"group = {format_group(s.group)}",
           f"period = {s.period}", f"window = {s.window}"]
    if s.subgroup:
        out.append(f"subgroup = {_fmt_elements(s.subgroup)}")
    out += [f"seed = {s.seed}", f"budget = {s.budget}", f"columns = {s.columns}", f"order = {s.order}"]
    for k, lv in enumerate(s.levels, start=1):
        out += ["", f"[level {k}]", f"spec = {format_group(lv.spec)}", f"chart = {lv.chart}"]
        if lv.generators:
            out.append(f"generators = {_fmt_elements(lv.generators)}")
        for key, val in (("zee", lv.zee), ("dom", lv.dom)):
            if val is not None:
                out.append(f"{key} = {format_rect(val)}")
        if lv.cover:
            out.append(f"cover = {_fmt_elements(lv.cover)}")
        if lv.subgroups:
            out.append("subgroups = " + " ".join(f"<{_fmt_elements(H)}>" for H in lv.subgroups))
        if lv.eta is not None:
            out.append(f"eta = {lv.eta}")
        out.append(f"lambda = {lv.lam}")
        if lv.A is not None:
            out.append(f"A = {format_rect(lv.A)}")
        out += [f"epsilon = {lv.epsilon}", f"q = {lv.q}"]
        for key, val in (("p", lv.p), ("b", lv.b)):
            if val is not None:
                out.append(f"{key} = {val}")
        for key, val in (("sep", lv.sep), ("guard", lv.guard)):
            if val is not None:
                out.append(f"{key} = {','.join(str(v) for v in val)}")
        for key, val in (("spread", lv.spread), ("dom_bound", lv.dom_bound)):
            if val is not None:
                out.append(f"{key} = {val}")
        out.append(f"mode = {lv.mode}")
    return "\n".join(out) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text)


# -- realization ------------------------------------------------------------------


def build_scenario_window(s: Scenario) -> Window:
    if s.window == "coset":
        return build_coset_window(s.group, Subgroup(s.group, s.subgroup), s.period, s.budget)
    return build_window(s.group, s.period, s.budget)


def level_chart(s: Scenario, k: int) -> Chart:
    """Chart of level k (1-based), mapped into the scenario group."""
    lv = s.levels[k - 1]
    if lv.chart == "abelian":
        if lv.zee is None:
            raise ChartError(f"level {k}: an abelian chart needs zee")
        c = build_abelian_chart(lv.spec, lv.zee.radius, lv.lam)
        if lv.dom is not None:
            c = replace(c, dom=lv.dom)
        if lv.spec.kind == "free" and lv.generators:
            return embed_chart(c, s.group, lv.generators)
    elif lv.chart == "free":
        c = build_chart_free(lv.spec, lv.cover or lv.generators, lv.lam)
    else:
        subs = [Subgroup(lv.spec, H) for H in lv.subgroups]
        c = build_chart_general(lv.spec, subs, lv.cover or lv.generators, lv.lam,
                                lv.eta if lv.eta is not None else 3)
    if lv.spec != s.group:
        raise ChartError(f"level {k}: only free abelian levels may be embedded into {s.group}")
    return c


def default_b(s: Scenario, k: int, ells: Sequence[int]) -> int:
    """b_k = l_(k+1) + 1 below the top; the top row is only bounded by the column count."""
    lv = s.levels[k - 1]
    if lv.b is not None:
        return lv.b
    if k < len(s.levels):
        return ells[k] + 1
    return max(s.columns, ells[k - 1] + 1)


def strict_A(zee: Rect, eps: Fraction, ell: int) -> Rect:
    return scale(Fraction(2) / eps * 2 * 36 ** 2 * 2 ** (14 * ell), zee)


def level_params(s: Scenario, k: int, chart: Chart, b: int, mode: str | None = None) -> OrthoParams:
    lv = s.levels[k - 1]
    mode = mode or lv.mode
    A = lv.A
    if mode == "strict" or A is None:
        A = strict_A(chart.zee, lv.epsilon, chart.ell)
    if mode == "strict":
        return OrthoParams(A, lv.epsilon, lv.q, b=b, mode="strict")
    return OrthoParams(A, lv.epsilon, lv.q, b=b, p=lv.p, sep=lv.sep, guard=lv.guard, spread=lv.spread,
                       dom_bound=lv.dom_bound, mode="relaxed")


def outer_region(prm: OrthoParams) -> Rect:
    """The widest region the orthogonalizer touches: the surrounding blocks 18p.A + 1."""
    return rec(tuple(18 * prm.p_value * a + 1 for a in prm.A.radius), prm.A.gamma)


def level_generators(s: Scenario, k: int) -> tuple[Element, ...]:
    lv = s.levels[k - 1]
    if lv.generators:
        return lv.generators
    return tuple(tuple(int(i == j) for i in range(s.group.dim)) for j in range(s.group.dim))


# -- validation --------------------------------------------------------------------


@dataclass
class ScaleCheck:
    name: str
    status: str  # "pass", "FAIL" or "symbolic"
    detail: str = ""

    def line(self) -> str:
        return f"[{self.status}] {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class ScaleReport:
    checks: list[ScaleCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)

    def failed(self) -> list[ScaleCheck]:
        return [c for c in self.checks if c.status == "FAIL"]

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]

    def add(self, name: str, ok: bool | None, detail: str = "") -> None:
        status = "symbolic" if ok is None else "pass" if ok else "FAIL"
        self.checks.append(ScaleCheck(name, status, detail))


def _elements_in(elems: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Row-wise membership of exact group elements."""
    both = np.concatenate([pool, elems])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    return np.isin(inv[len(pool):], inv[:len(pool)])


def validate_scales(s: Scenario, mode: str | None = None) -> ScaleReport:
    """List every containment and period check the downstream operations rely on."""
    rep = ScaleReport()
    try:
        w = build_scenario_window(s)
    except NilgeomError as exc:
        rep.add("window builds within budget", False, str(exc))
        return rep
    rep.add("window builds within budget", True, w.describe())
    charts: list[Chart | None] = []
    for k in range(1, len(s.levels) + 1):
        try:
            charts.append(level_chart(s, k))
            rep.add(f"level {k}: chart builds with 3.zee inside dom", True, f"zee {charts[-1].zee}")
        except (ChartError, NilgeomError) as exc:
            charts.append(None)
            rep.add(f"level {k}: chart builds with 3.zee inside dom", False, str(exc))
    ells = [c.ell if c is not None else 0 for c in charts]
    for k, c in enumerate(charts, start=1):
        if c is None:
            continue
        lv = s.levels[k - 1]
        lmode = mode or lv.mode
        prm = level_params(s, k, c, default_b(s, k, ells), lmode)
        gens = np.array(level_generators(s, k), dtype=np.int64)
        try:
            w.check_local_freeness(gens)
            rep.add(f"level {k}: generators act without fixed points", True)
        except FreenessError as exc:
            rep.add(f"level {k}: generators act without fixed points", False, str(exc))
        if lmode == "strict":
            big = scale(2 ** (40 * c.ell), prm.A)
            size = rects.cardinality(big)
            rep.add(f"level {k}: strict constants", None if size > s.budget else True,
                    f"unenumerable, symbolic-only (|2^(40l).A| = {size})" if size > s.budget else "")
        else:
            outer = outer_region(prm)
            size = rects.cardinality(outer)
            if size > s.budget:
                rep.add(f"level {k}: period {s.period} exceeds the diameter of 18p.A+1", None,
                        f"unenumerable, symbolic-only ({size} vectors)")
            elif not rects.contains(c.dom, outer):
                rep.add(f"level {k}: period {s.period} exceeds the diameter of 18p.A+1", False,
                        f"18p.A+1 = {outer} is not inside dom {c.dom}")
            else:
                try:
                    ChartAction(c, w, s.budget).check_injective(outer)
                    rep.add(f"level {k}: period {s.period} exceeds the diameter of 18p.A+1", True)
                except InjectivityError as exc:
                    rep.add(f"level {k}: period {s.period} exceeds the diameter of 18p.A+1", False, str(exc))
        for chk in check_parameters(c, prm).checks:
            rep.add(f"level {k}: {chk.name}", chk.ok if chk.counted else None, f"slack {chk.slack}")
    for k in range(1, len(s.levels)):
        lower, upper = charts[k - 1], charts[k]
        H = Subgroup(s.group, level_generators(s, k + 1))
        verdicts = [H.contains(g, bound=6) for g in level_generators(s, k)]
        rep.add(f"chain: G_{k} <= G_{k + 1}", None if None in verdicts and False not in verdicts
                else all(v is True for v in verdicts))
        if lower is None or upper is None:
            continue
        if rects.cardinality(lower.dom) > s.budget or rects.cardinality(upper.zee) > s.budget:
            rep.add(f"chain: Im(phi_{k}) and U_{k + 1} inside phi_{k + 1}(zee_{k + 1})", None,
                    "unenumerable, symbolic-only")
            continue
        pool = upper.phi_arr(rects.rect_array(upper.zee, s.budget))
        img = np.concatenate([lower.phi_arr(rects.rect_array(lower.dom, s.budget)),
                              np.array(level_generators(s, k + 1), dtype=np.int64)])
        inside = _elements_in(img, pool)
        detail = "" if inside.all() else f"{format_element(img[np.argmin(inside)])} is outside"
        rep.add(f"chain: Im(phi_{k}) and U_{k + 1} inside phi_{k + 1}(zee_{k + 1})", bool(inside.all()), detail)
    return rep
