"""Command-line entry point: ``nilgeom <subcommand> [flags]``.

Exit status is 0 when every assertion passes, 1 on the first failed
assertion (its witness is printed), and 2 when the input does not parse.
Artifacts are written to ``--out`` with no timestamps, so reruns with the
same scenario and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import rects
from .charts import verify_chart
from .errors import BudgetExceeded, NilgeomError, ParseError
from .groups import format_element, heisenberg, hx_subgroup, conjugator_search
from .markers import build_marker_set, symmetric_closure, verify_marker_set
from .ortho import q_upper_bound
from .pipeline import (agreement_threshold, build_free_array, e0_encode, orthogonal_sequence,
                       verify_eventual_agreement)
from .rects import scale, verify_rect_laws
from .scenario import (Scenario, build_scenario_window, default_b, level_chart, level_params,
                       load_scenario, validate_scales)
from .window import realize_chart

COMMANDS = ("verify-rects", "verify-chart", "markers", "orthogonalize", "free-array", "e0-encode",
            "conjugacy-demo", "check-params")
NEEDS_SCENARIO = {"verify-chart", "markers", "orthogonalize", "free-array", "e0-encode", "check-params"}
ENUMERATING = {"markers", "orthogonalize", "free-array", "e0-encode"}


class Outcome:
    """Collects artifacts and the first failed assertion."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}
        self.failure: str | None = None

    def write(self, name: str, text: str) -> None:
        self.files[name] = text

    def lines(self, name: str, lines: list[str]) -> None:
        self.write(name, "".join(f"{line}\n" for line in lines))

    def fail(self, message: str) -> None:
        if self.failure is None:
            self.failure = message

    def flush(self, command: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        digest = []
        for name in sorted(self.files):
            data = self.files[name].encode()
            (self.out / name).write_bytes(data)
            digest.append(f"{name} sha256 {hashlib.sha256(data).hexdigest()}")
        status = "ok" if self.failure is None else f"FAIL {self.failure}"
        summary = [f"command = {command}", f"status = {status}"] + digest
        (self.out / "summary.txt").write_text("".join(f"{line}\n" for line in summary))


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilgeom", description="Desk-scale rectangles, charts, markers, "
                                 "orthogonal relations, the diagonal array and E0 coding.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", help="scenario file (INI)")
    ap.add_argument("--out", default="out", help="artifact directory (default: out)")
    ap.add_argument("--seed", type=int, help="override the scenario seed")
    ap.add_argument("--strict-constants", action="store_true",
                    help="strict constants: symbolic checks only, no enumeration")
    ap.add_argument("--jobs", type=int, default=1, help="worker threads for chart sweeps")
    ap.add_argument("--budget", type=int, help="override the scenario point budget")
    ap.add_argument("--columns", type=int, help="array columns (default: scenario value)")
    ap.add_argument("--level", type=int, default=1, help="level for markers/orthogonalize")
    ap.add_argument("--count", type=int, help="relations to build in orthogonalize")
    ap.add_argument("--samples", type=int, default=1000, help="sampled points for agreement checks")
    ap.add_argument("--trials", type=int, default=10_000, help="random instances for verify-rects")
    ap.add_argument("--n", type=int, default=3, help="word length for conjugacy-demo")
    ap.add_argument("--bound", type=int, default=5, help="coordinate bound for conjugacy-demo")
    return ap


# -- subcommands -----------------------------------------------------------------------


def cmd_verify_rects(args, s: Scenario | None, res: Outcome) -> None:
    rep = verify_rect_laws(args.trials, args.seed or 0)
    res.lines("rect_laws.txt", rep.lines())
    if not rep.ok:
        name = next(k for k, v in rep.counterexamples.items() if v)
        res.fail(f"rectangle law {name}: {rep.counterexamples[name][0]}")


def cmd_verify_chart(args, s: Scenario, res: Outcome) -> None:
    for k in range(1, len(s.levels) + 1):
        c = level_chart(s, k)
        region = scale(3, c.zee)
        pairs = rects.cardinality(region) ** 2
        if pairs <= s.budget:
            rep = verify_chart(c, "exhaustive", budget=max(pairs, 1), jobs=args.jobs)
        else:
            rep = verify_chart(c, "sampled", trials=args.trials, seed=s.seed)
        res.lines(f"chart_level{k}.txt", c.certificate() + rep.lines())
        if not rep.ok:
            name, r, sv, _ = rep.counterexamples[0]
            res.fail(f"level {k} chart axiom {name} fails at r={r} s={sv}")


def _level_setup(s: Scenario, k: int):
    charts = [level_chart(s, j) for j in range(1, len(s.levels) + 1)]
    prm = level_params(s, k, charts[k - 1], default_b(s, k, [c.ell for c in charts]))
    return charts[k - 1], prm


def cmd_markers(args, s: Scenario, res: Outcome) -> None:
    c, prm = _level_setup(s, args.level)
    w = build_scenario_window(s)
    K = scale(Fraction(3 * prm.p_value, 4), prm.A)
    ca = realize_chart(c, w, K)
    F = symmetric_closure(w.group, ca.vectors_and_elements(K)[1])
    order = None if s.order == "index" else np.random.default_rng(s.seed).permutation(w.n_points)
    m = build_marker_set(w, F, ca.xh, order=order)
    ok, why = verify_marker_set(w, m)
    res.write("markers.txt", m.dump())
    res.lines("markers_report.txt", [f"window = {w.describe()}", f"K = phi({K})", f"|F| = {len(F)}",
                                     f"markers = {len(m.members)}", f"verified = {why}"])
    if not ok:
        res.fail(f"marker set: {why}")


def cmd_orthogonalize(args, s: Scenario, res: Outcome) -> None:
    run = orthogonal_sequence(s, args.level, args.count)
    res.lines("ortho_report.txt", run.lines())
    for j, (F, cert) in enumerate(zip(run.relations, run.certs), start=1):
        res.write(f"relation_{j}.txt", F.dump())
        res.lines(f"ortho_cert_{j}.txt", cert.lines())
    if not run.ok:
        res.fail(run.failure)


def _array(args, s: Scenario, res: Outcome):
    state = build_free_array(s, args.columns, strict=False)
    res.lines("array_report.txt", state.report_lines())
    for n, E in enumerate(state.bottom(), start=1):
        res.write(f"bottom_{n}.txt", E.dump())
    if not state.ok:
        res.fail(str(state.failure))
    return state


def cmd_free_array(args, s: Scenario, res: Outcome) -> None:
    state = _array(args, s, res)
    if state.columns:
        rep = verify_eventual_agreement(state, args.samples, s.seed)
        res.lines("agreement.txt", rep.lines())
        if not rep.ok:
            res.fail(rep.violations[0])


def cmd_e0_encode(args, s: Scenario, res: Outcome) -> None:
    state = _array(args, s, res)
    if not state.columns:
        res.fail("no columns were built, nothing to encode")
        return
    code = e0_encode(state)
    res.write("e0_codes.txt", code.dump())
    inj, clash = code.injective()
    lines = [f"points = {len(code.blocks)}", f"blocks = {code.blocks.shape[1]}",
             f"widths = {list(code.widths)}", f"injective = {inj}"]
    if not inj:
        res.fail(f"points {clash[0]} and {clash[1]} share a code")
    rng = np.random.default_rng(s.seed)
    w = state.window
    checked = agree = 0
    for lv in state.levels:
        for g in lv.generators:
            xs = np.sort(rng.choice(w.n_points, size=min(args.samples, w.n_points), replace=False))
            for x, y in zip(xs, w.act(g, xs)):
                m = agreement_threshold(state, int(x), int(y))
                if m is None:
                    continue
                checked += 1
                if np.array_equal(code.blocks[x, m + 1:], code.blocks[y, m + 1:]):
                    agree += 1
                else:
                    res.fail(f"pair {int(x)},{int(y)} agrees from column {m} but codes differ past it")
    lines += [f"F-equivalent sampled pairs = {checked}", f"agreeing past threshold m+1 = {agree}"]
    res.lines("e0_report.txt", lines)


def cmd_conjugacy_demo(args, s: Scenario | None, res: Outcome) -> None:
    n, bound = args.n, args.bound
    H = heisenberg()
    a, b, c = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    lhs = H.product([b, H.inv(a), H.inv(b)])
    rhs = H.mul(H.inv(a), c)
    lines = [f"b a^-1 b^-1 = {format_element(lhs)}", f"a^-1 c = {format_element(rhs)}",
             f"identity holds = {lhs == rhs}"]
    if lhs != rhs:
        res.fail("b a^-1 b^-1 != a^-1 c")
    for x in itertools.product((0, 1), repeat=n):
        for y in itertools.product((0, 1), repeat=n):
            r = conjugator_search(hx_subgroup(x), hx_subgroup(y), bound)
            expect = [0] * (3 * n)
            for i in range(n):
                expect[3 * i + 1] = y[i] - x[i]
            certified = all(v is True for _, v in r.checks)
            g = format_element(r.element) if r.element is not None else "-"
            line = f"x={''.join(map(str, x))} y={''.join(map(str, y))} status={r.status} g={g}"
            if (r.status == "found") != certified or (r.status == "found" and r.element != tuple(expect)):
                res.fail(f"conjugator for {x} -> {y} disagrees with prod b_i^(y(i)-x(i))")
            diff = [i for i in range(n) if x[i] != y[i]]
            if diff:
                cut = conjugator_search(hx_subgroup(x), hx_subgroup(y), bound,
                                        support=[i for i in range(n) if i != diff[0]])
                line += f" without factor {diff[0]}: {cut.status}"
                if cut.status != "none":
                    res.fail(f"support-restricted search for {x} -> {y} returned {cut.status}")
            lines.append(line)
    res.lines("conjugacy.txt", lines)


def cmd_check_params(args, s: Scenario, res: Outcome) -> None:
    rep = validate_scales(s, "strict" if args.strict_constants else None)
    lines = rep.lines() + [f"q bound for l=1, b=2: {q_upper_bound(1, 2)}"]
    res.lines("params.txt", lines)
    if not rep.ok:
        res.fail(rep.failed()[0].line())


HANDLERS = {"verify-rects": cmd_verify_rects, "verify-chart": cmd_verify_chart, "markers": cmd_markers,
            "orthogonalize": cmd_orthogonalize, "free-array": cmd_free_array, "e0-encode": cmd_e0_encode,
            "conjugacy-demo": cmd_conjugacy_demo, "check-params": cmd_check_params}


def run(argv: list[str] | None = None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    if args.command in NEEDS_SCENARIO and not args.scenario:
        ap.error(f"{args.command} needs --scenario")
    try:
        s = load_scenario(args.scenario) if args.scenario else None
        if s is not None:
            if args.seed is not None:
                s = replace(s, seed=args.seed)
            if args.budget is not None:
                s = replace(s, budget=args.budget)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    res = Outcome(Path(args.out))
    command = args.command
    try:
        if args.strict_constants and command in ENUMERATING:
            command = "check-params"
        HANDLERS[command](args, s, res)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (NilgeomError, BudgetExceeded) as exc:
        res.fail(f"{type(exc).__name__}: {exc}")
    res.flush(args.command)
    if res.failure is not None:
        print(f"FAIL: {res.failure}", file=sys.stderr)
        return 1
    print(f"ok: artifacts in {res.out}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
