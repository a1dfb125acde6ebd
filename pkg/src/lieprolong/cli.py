"""Command-line front end.

Every subcommand prints a short human-readable report and, with
``--json FILE`` (``-`` for stdout), writes a versioned JSON report.  Exit
codes: 0 pass, 1 failing verdict, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .liealg import StructureConstants
from .maurer_cartan import InvalidStructureConstants, build_a_matrix, mc_form, verify_mc_equation
from .prolongation import (
    ConnectionAnsatz,
    EvolutionPDE,
    HolonomyClosure,
    IdealConstructionError,
    PDEIdeal,
    ProlongationSolution,
    contact_ideal_from_pde,
    derive_determining,
    holonomy_close,
    holonomy_filtration,
    ideal_from_forms,
    solve_determining,
)
from .repsearch import (
    MatrixRep,
    UnverifiedRepresentation,
    assemble_lax,
    linear_problem_report,
    search_rep,
    verify_rep,
    verify_zero_curvature,
)
from .specfile import ProblemSpec, bundled_specs, load_bundled, parse_spec
from .syntax import Namespace, parse_poly
from .symscalar import Context, base, jet, parameter

SCHEMA_VERSION = 1

PRESETS = {
    "heisenberg": StructureConstants.heisenberg,
    "affine2": lambda: StructureConstants.from_brackets(2, {(0, 1): {1: Fraction(1, 2)}}),
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# stage helpers


def load_spec(ref: str) -> ProblemSpec:
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            return parse_spec(fh.read())
    name = ref[:-5] if ref.endswith(".spec") else ref
    if name in bundled_specs():
        return parse_spec(load_bundled(name))
    raise UsageError(f"spec file {ref!r} not found (bundled: {', '.join(bundled_specs())})")


def build_ideal(spec: ProblemSpec, max_degree: int | None = None) -> PDEIdeal:
    if spec.rhs is not None:
        return contact_ideal_from_pde(spec.pde, max_degree)
    return ideal_from_forms([f for _, f in spec.forms], spec.jets(), max_degree)


def solve_spec(spec: ProblemSpec, ideal: PDEIdeal):
    ansatz = ConnectionAnsatz.formal_ansatz(ideal.jets, spec.bx_degree, spec.bt_degree)
    system = derive_determining(ideal, ansatz)
    return system, solve_determining(system)


@dataclass
class Stage:
    name: str
    passed: bool
    data: dict
    notes: list[str] = field(default_factory=list)
    skipped: bool = False
    certificate: str | None = None  # why the stage failed, in text form

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "skipped": self.skipped,
               "notes": list(self.notes), **self.data}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out


@dataclass
class PipelineReport:
    stages: list[Stage] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)  # not serialized: run-dependent
    failed_stage: str | None = None

    @property
    def passed(self) -> bool:
        return self.failed_stage is None and all(s.passed for s in self.stages)

    def stage(self, name: str) -> Stage | None:
        return next((s for s in self.stages if s.name == name), None)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": "pipeline",
            "passed": self.passed,
            "failed_stage": self.failed_stage,
            "stages": [s.to_json() for s in self.stages],
        }


def _closure_for(spec: ProblemSpec, sol: ProlongationSolution, filtration) -> HolonomyClosure | None:
    if spec.expansions and filtration.level == 0:
        return holonomy_close(sol, filtration, spec.expansion_map(), spec.free_parameter)
    return None


def run_pipeline(spec: ProblemSpec, level: int | None = None, max_degree: int | None = None,
                 rep_dim: int | None = None) -> PipelineReport:
    """ideal, determining equations, solution, holonomy, representation, zero curvature."""
    report = PipelineReport()
    level = spec.holonomy_level if level is None else level

    def timed(name: str, fn: Callable):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            report.timings[name] = time.perf_counter() - t0

    def fail(stage: Stage) -> PipelineReport:
        report.stages.append(stage)
        report.failed_stage = stage.name
        return report

    try:
        ideal = timed("ideal", lambda: build_ideal(spec, max_degree))
        closure = ideal.closure
    except IdealConstructionError as e:
        closure = e.report
    st = Stage("ideal", closure.closed, closure.to_json())
    if not st.passed:
        st.certificate = "; ".join(
            f"d(alpha{k}) has remainder {c.remainder.to_text()}"
            for k, c in enumerate(closure.certificates, start=1) if not c.member)
        return fail(st)
    report.stages.append(st)

    system, sol = timed("solve", lambda: solve_spec(spec, ideal))
    report.stages.append(Stage("determining", True, system.to_json()))
    st = Stage("solution", sol.verified and not sol.unsolved, sol.to_json())
    if not st.passed:
        st.certificate = ("recombination failed" if not sol.verified else
                          "unsolved: " + "; ".join(f"{u.to_text()} = 0" for u in sol.unsolved))
        return fail(st)
    report.stages.append(st)

    filtration = timed("holonomy", lambda: holonomy_filtration(sol, level))
    closure = timed("closure", lambda: _closure_for(spec, sol, filtration))
    data = {"filtration": filtration.to_json()}
    notes = []
    if level >= 1:
        notes.append("expansion verification only: closure over this level is not attempted")
    if closure is not None:
        data["closure"] = closure.to_json()
    st = Stage("holonomy", closure is None or closure.closed, data, notes)
    if not st.passed:
        cj = closure.to_json()
        st.certificate = cj.get("certificate") or "unsolved: " + "; ".join(cj["unsolved"])
        return fail(st)
    report.stages.append(st)

    presentation = closure.presentation() if closure is not None else None
    if spec.has_representation:
        rep = MatrixRep(spec.rep_dim, spec.rep_map())
        checks = {"relations": verify_rep(sol.relations, rep).to_json()}
        if presentation is not None:
            checks["closed_algebra"] = verify_rep(presentation, rep).to_json()
        st = Stage("representation", all(c["passed"] for c in checks.values()),
                   {"source": "spec", "matrices": rep.to_json(), "checks": checks})
        bad = [f["relation"] for c in checks.values() for f in c["failures"]]
        if bad or not st.passed:
            st.certificate = "nonzero commutator residual for " + ", ".join(bad or ["missing matrices"])
    elif presentation is not None:
        found = timed("representation", lambda: search_rep(presentation, rep_dim or spec.rep_dim or 2, spec.rep_template))
        faithful = [c for c in found.candidates if c.faithful]
        rep = faithful[0].rep if faithful else None
        st = Stage("representation", rep is not None, {"source": "search", "search": found.to_json()})
        if rep is None:
            st.certificate = "no faithful representation of this shape"
    else:
        report.stages.append(Stage("representation", True, {"source": None},
                                   ["no matrices given and no closed algebra to search"], skipped=True))
        report.stages.append(Stage("lax", True, {}, ["no representation"], skipped=True))
        return report
    if not st.passed:
        return fail(st)
    report.stages.append(st)

    if spec.pde is None:
        report.stages.append(Stage("lax", True, {}, ["zero curvature needs an evolution equation"], skipped=True))
        return report
    pair = assemble_lax(sol, rep)
    zc = timed("lax", lambda: verify_zero_curvature(pair, spec.pde))
    data = {"pair": pair.to_json(), "zero_curvature": zc.to_json(), "linear_problem": linear_problem_report(pair).to_json()}
    st = Stage("lax", zc.passed, data)
    if not st.passed:
        st.certificate = f"{zc.convention} = {zc.residual.to_text()}"
        return fail(st)
    report.stages.append(st)
    return report


# ---------------------------------------------------------------------------
# commands


@dataclass
class Result:
    command: str
    passed: bool
    data: dict
    lines: list[str]

    def to_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "command": self.command, "passed": self.passed, **self.data}


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_ideal_check(args) -> Result:
    spec = load_spec(args.spec)
    try:
        ideal = build_ideal(spec, args.max_degree)
        closure = ideal.closure
    except IdealConstructionError as e:
        closure = e.report
    lines = ["generators:"] + [f"  {g.to_text()}" for g in closure.ideal.generators]
    for k, c in enumerate(closure.certificates, start=1):
        mults = ", ".join(m.to_text() for m in c.multipliers)
        lines.append(f"d(alpha{k}) = {c.form.to_text()}")
        lines.append(f"  multipliers: ({mults})  remainder: {c.remainder.to_text()}")
    lines.append(f"closed: {_verdict(closure.closed)}")
    return Result("ideal check", closure.closed, closure.to_json(), lines)


def _constants(args) -> StructureConstants:
    if args.algebra:
        return PRESETS[args.algebra]()
    if not args.constants:
        raise UsageError("give --constants or --algebra")
    raw = args.constants
    if not raw.lstrip().startswith("{"):
        with open(raw, encoding="utf-8") as fh:
            raw = fh.read()
    try:
        obj = json.loads(raw)
        dim = int(obj["dimension"])
        brackets = {}
        for key, res in obj.get("brackets", {}).items():
            i, j = (int(s) - 1 for s in key.split(","))
            brackets[(i, j)] = {int(k) - 1: Fraction(v) for k, v in res.items()}
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad structure constants: {e}") from None
    return StructureConstants.from_brackets(dim, brackets)


def cmd_mc_build(args) -> Result:
    sc = _constants(args)
    try:
        a = build_a_matrix(sc)
    except InvalidStructureConstants as e:
        return Result("mc build", False, {"validation": e.report.to_json()}, [str(e)])
    form = mc_form(sc, args.series_order)
    lines = [f"A = {a.matrix.to_text()}", f"W = {form.w.matrix.to_text()}",
             f"exact: {form.exact}" + (f" (A^{form.w.nilpotency} = 0)" if form.exact else f" (truncated at order {form.w.order})")]
    lines += [f"omega{j + 1} = {c.to_text()}" for j, c in enumerate(form.components)]
    return Result("mc build", True, {"A": a.matrix.to_json(), **form.to_json()}, lines)


def cmd_mc_verify(args) -> Result:
    sc = _constants(args)
    try:
        form = mc_form(sc, args.series_order)
    except InvalidStructureConstants as e:
        return Result("mc verify", False, {"validation": e.report.to_json()}, [str(e)])
    rep = verify_mc_equation(form, sc)
    lines = [f"residual{j + 1} = {r.to_text()}" for j, r in enumerate(rep.residuals)]
    lines.append(f"exact: {rep.exact}; lowest residual degree: {rep.min_degree}")
    lines.append(f"Maurer-Cartan equation: {_verdict(rep.passed)}")
    return Result("mc verify", rep.passed, rep.to_json(), lines)


def _prolong(args):
    spec = load_spec(args.spec)
    ideal = build_ideal(spec, args.max_degree)
    return spec, ideal, *solve_spec(spec, ideal)


def cmd_prolong_derive(args) -> Result:
    spec = load_spec(args.spec)
    ideal = build_ideal(spec, args.max_degree)
    ansatz = ConnectionAnsatz.formal_ansatz(ideal.jets, spec.bx_degree, spec.bt_degree)
    system = derive_determining(ideal, ansatz)
    lines = system.lines()
    lines += ["multipliers:"] + [f"  {g.name} = {v.to_text()}" for g, v in system.g_values.items()]
    lines += ["after eliminating multipliers:"] + [f"  {e}" for e in system.residual_lines()]
    return Result("prolong derive", True, system.to_json(), lines)


def cmd_prolong_solve(args) -> Result:
    _, _, _, sol = _prolong(args)
    ok = sol.verified and not sol.unsolved
    lines = [f"bx = {sol.bx.to_text()}", f"bt = {sol.bt.to_text()}", "relations:"]
    lines += [f"  {r.to_text()} = 0" for r in sol.relations]
    if sol.unsolved:
        lines += ["unsolved:"] + [f"  {u.to_text()} = 0" for u in sol.unsolved]
    lines.append(f"recombination: {_verdict(sol.verified)}")
    return Result("prolong solve", ok, sol.to_json(), lines)


def cmd_holonomy(args) -> Result:
    spec, _, _, sol = _prolong(args)
    level = spec.holonomy_level if args.holonomy_level is None else args.holonomy_level
    filt = holonomy_filtration(sol, level)
    lines = [f"level {level} basis ({len(filt.basis)} elements):"]
    for b in filt.basis:
        d = f" = [{b.definition[0]},{b.definition[1]}]" if b.definition else ""
        text = b.element.to_text()
        lines.append(f"  {b.name}{d}" + (f" = {text}" if text != d[3:] and text != b.name else ""))
    lines.append("modulo relations: " + ", ".join(r.to_text() for r in filt.reduced_basis))
    lines.append(f"perfect: {filt.perfect}")
    lines += [f"note: {n}" for n in filt.notes]
    data = {"filtration": filt.to_json()}
    ok = True
    closure = _closure_for(spec, sol, filt)
    if closure is not None:
        data["closure"] = closure.to_json()
        ok = closure.closed
        if closure.consistent:
            lines += ["closure:"] + [f"  {c.name} = {v.to_text()}" for c, v in
                                     sorted(closure.q_values.items(), key=lambda kv: kv[0].name)]
            lines += [f"  {x}" for x in closure.bracket_lines() + closure.expansion_lines()]
            lines += [f"  unsolved: {u.to_text()} = 0" for u in closure.unsolved]
        else:
            lines.append(f"closure inconsistent: {closure.to_json().get('certificate')}")
    elif level >= 1:
        lines.append("note: expansion verification only: closure over this level is not attempted")
        data["notes"] = ["expansion verification only"]
    return Result("holonomy", ok, data, lines)


def _closed_presentation(spec, sol):
    filt = holonomy_filtration(sol, 0)
    closure = _closure_for(spec, sol, filt)
    if closure is None or not closure.closed:
        return None
    return closure.presentation()


def cmd_rep_verify(args) -> Result:
    spec, _, _, sol = _prolong(args)
    if not spec.has_representation:
        raise UsageError("the spec has no [representation] matrices")
    rep = MatrixRep(spec.rep_dim, spec.rep_map())
    checks = {"relations": verify_rep(sol.relations, rep)}
    pres = _closed_presentation(spec, sol)
    if pres is not None:
        checks["closed_algebra"] = verify_rep(pres, rep)
    lines = rep.lines()
    for name, c in checks.items():
        lines.append(f"{name}: {_verdict(c.passed)} ({len(c.residuals)} relations)")
        for r, m in c.failures():
            lines.append(f"  {r.to_text()} -> {m.to_text()}")
        if c.missing:
            lines.append(f"  missing matrices: {', '.join(c.missing)}")
    ok = all(c.passed for c in checks.values())
    return Result("rep verify", ok, {k: c.to_json() for k, c in checks.items()}, lines)


def cmd_rep_search(args) -> Result:
    spec, _, _, sol = _prolong(args)
    pres = _closed_presentation(spec, sol)
    if pres is None:
        raise UsageError("rep search needs holonomy expansions that close at level 0")
    dim = args.rep_dim or spec.rep_dim or 2
    res = search_rep(pres, dim, spec.rep_template)
    lines = [f"{len(res.candidates)} families found (dim {dim}, {res.template} template)"]
    for k, c in enumerate(res.candidates, start=1):
        extra = f"; {', '.join(f'{a} = {v}' for a, v in c.assumptions.items())}" if c.assumptions else ""
        lines.append(f"family {k} (faithful: {c.faithful}; free: {', '.join(f.name for f in c.free) or '-'}{extra})")
        lines += [f"  {x}" for x in c.rep.lines()]
    lines += [f"note: {n}" for n in res.notes]
    return Result("rep search", res.found, res.to_json(), lines)


def cmd_lax_verify(args) -> Result:
    spec, _, _, sol = _prolong(args)
    if spec.has_representation:
        rep = MatrixRep(spec.rep_dim, spec.rep_map())
    else:
        pres = _closed_presentation(spec, sol)
        found = search_rep(pres, args.rep_dim or 2, spec.rep_template) if pres else None
        cands = [c for c in (found.candidates if found else []) if c.faithful]
        if not cands:
            raise UsageError("no representation in the spec and none found by search")
        rep = cands[0].rep
    pde = spec.pde
    if args.pde_rhs:
        ctx = Context([base("x", 0), base("t", 1)] + [jet(spec.variable, i) for i in range(6)]
                      + [parameter(n) for n in spec.parameters])
        pde = EvolutionPDE.from_rhs(spec.variable, parse_poly(args.pde_rhs, Namespace(ctx, allow_generators=False)))
    if pde is None:
        raise UsageError("lax verify needs an evolution equation ([pde] or --pde-rhs)")
    try:
        pair = assemble_lax(sol, rep)
    except UnverifiedRepresentation as e:
        lines = ["representation fails the relations:"]
        lines += [f"  {r.to_text()} -> {m.to_text()}" for r, m in e.report.failures()]
        return Result("lax verify", False, {"representation": e.report.to_json()}, lines)
    zc = verify_zero_curvature(pair, pde)
    lines = [f"U = {pair.u.to_text()}", f"V = {pair.v.to_text()}", f"equation: {zc.pde}",
             f"{zc.convention} = {zc.residual.to_text()}", f"zero curvature: {_verdict(zc.passed)}"]
    if zc.passed:
        lines += linear_problem_report(pair).lines()
    data = {"pair": pair.to_json(), "zero_curvature": zc.to_json(), "linear_problem": linear_problem_report(pair).to_json()}
    return Result("lax verify", zc.passed, data, lines)


def cmd_pipeline(args) -> Result:
    spec = load_spec(args.spec)
    rep = run_pipeline(spec, args.holonomy_level, args.max_degree, args.rep_dim)
    lines = []
    for s in rep.stages:
        lines.append(f"{s.name}: {'SKIP' if s.skipped else _verdict(s.passed)}")
        lines += [f"  note: {n}" for n in s.notes]
        if s.certificate:
            lines.append(f"  certificate: {s.certificate}")
    if rep.failed_stage:
        lines.append(f"stopped at stage {rep.failed_stage!r}")
    if args.timings:
        lines += [f"time {k}: {v:.3f}s" for k, v in rep.timings.items()]
    lines.append(f"verdict: {_verdict(rep.passed)}")
    data = rep.to_json()
    data.pop("schema_version")
    data.pop("command")
    data.pop("passed")
    return Result("pipeline", rep.passed, data, lines)


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, spec: bool = True):
    if spec:
        p.add_argument("--spec", required=True, help="problem spec file or bundled name (e.g. burgers)")
    p.add_argument("--json", metavar="OUT", help="write the JSON report to OUT ('-' for stdout)")
    p.add_argument("--max-degree", type=int, default=None, help="coefficient degree bound for ideal membership")
    p.add_argument("--holonomy-level", type=int, default=None, help="filtration level (overrides the spec)")
    p.add_argument("--series-order", type=int, default=None, help="truncation order of the Maurer-Cartan series")
    p.add_argument("--rep-dim", type=int, default=None, help="matrix size for representation search")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized checks (recorded only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lieprolong", description="Prolongation structures and Lax pairs for evolution equations.")
    sub = parser.add_subparsers(dest="group", required=True)

    ideal = sub.add_parser("ideal", help="ideal of 2-forms").add_subparsers(dest="action", required=True)
    p = ideal.add_parser("check", help="check closure of the ideal")
    _common(p)
    p.set_defaults(func=cmd_ideal_check)

    mc = sub.add_parser("mc", help="Maurer-Cartan forms").add_subparsers(dest="action", required=True)
    for name, fn in (("build", cmd_mc_build), ("verify", cmd_mc_verify)):
        p = mc.add_parser(name)
        _common(p, spec=False)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--constants", help='JSON text or file: {"dimension": 3, "brackets": {"1,2": {"3": "1"}}}')
        g.add_argument("--algebra", choices=sorted(PRESETS), help="built-in algebra")
        p.set_defaults(func=fn)

    pro = sub.add_parser("prolong", help="determining equations").add_subparsers(dest="action", required=True)
    for name, fn in (("derive", cmd_prolong_derive), ("solve", cmd_prolong_solve)):
        p = pro.add_parser(name)
        _common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("holonomy", help="holonomy filtration and closure")
    _common(p)
    p.set_defaults(func=cmd_holonomy)

    rep = sub.add_parser("rep", help="matrix representations").add_subparsers(dest="action", required=True)
    for name, fn in (("verify", cmd_rep_verify), ("search", cmd_rep_search)):
        p = rep.add_parser(name)
        _common(p)
        p.set_defaults(func=fn)

    lax = sub.add_parser("lax", help="Lax pair").add_subparsers(dest="action", required=True)
    p = lax.add_parser("verify", help="zero-curvature check of the assembled pair")
    _common(p)
    p.add_argument("--pde-rhs", help="check against u_t = RHS instead of the spec's equation")
    p.set_defaults(func=cmd_lax_verify)

    p = sub.add_parser("pipeline", help="run every stage")
    _common(p)
    p.add_argument("--timings", action="store_true", help="print stage timings")
    p.set_defaults(func=cmd_pipeline)
    return parser


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (UsageError, OSError, ValueError) as e:  # ParseError is a ValueError
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = sys.stdout
    # with JSON on stdout the human-readable report moves to stderr
    human = sys.stderr if args.json == "-" else out
    for line in result.lines:
        print(line, file=human)
    if args.json:
        text = dumps(result.to_json())
        if args.json == "-":
            out.write(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
