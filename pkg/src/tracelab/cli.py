"""``tracelab`` command-line front end.

Exit codes: 0 success/accepted, 1 parse error, 2 well-formedness error,
3 length budget exhausted with no traces, 4 refuted (a witness is printed),
5 bounds or oracle insufficient.
"""
from __future__ import annotations

import argparse
import json
import random
import re
import sys
from pathlib import Path
from typing import Iterable

from . import __version__
from .calculus import (
    ProofFailure, check_proof, count_rule, entails_bounded, prove_judgment, prove_stf, tree_from_json,
    tree_to_json, valid_judgment_bounded,
)
from .canon import canon, galois_check
from .denotational import eval_stm_detailed
from .errors import BoundsInsufficient, ParseError, RestrictionError, TracelabError, WellFormednessError
from .laws import check_laws
from .parser import parse_formula, parse_program
from .sos import RunStats, run_traces
from .stf import mes, prune_unused_binders, stf
from .syntax import (
    Formula, Program, formula_vars, has_unique_binders, program_vars, rename_recursion_vars,
    show_formula, show_program,
)
from .traces import Bounds, dump, format_trace, normalize_set

SCHEMA_VERSION = 1
DEFAULT_MAX_LEN = 32

EXIT_OK, EXIT_PARSE, EXIT_WF, EXIT_BUDGET, EXIT_REFUTED, EXIT_INSUFFICIENT = range(6)

_INIT_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(-?\d+)(?:\.\.(-?\d+))?$")


class UsageError(TracelabError):
    pass


def parse_init(spec: str) -> tuple[str, list[int]]:
    m = _INIT_RE.match(spec.strip())
    if not m:
        raise UsageError(f"bad --init {spec!r}; expected VAR=LO..HI or VAR=N")
    lo = int(m.group(2))
    hi = int(m.group(3)) if m.group(3) is not None else lo
    return m.group(1), list(range(lo, hi + 1))


class Report:
    """Collects text lines and a structured payload for one command."""

    def __init__(self, args, command: str):
        self.args = args
        self.lines: list[str] = []
        self.payload: dict = {"schema_version": SCHEMA_VERSION, "command": command}

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def emit(self) -> None:
        if self.args.format == "structured":
            text = json.dumps(self.payload, indent=2, sort_keys=True) + "\n"
        else:
            text = "".join(line + "\n" for line in self.lines)
        if self.args.out and not getattr(self.args, "out_is_artifact", False):
            Path(self.args.out).write_text(text)
        else:
            sys.stdout.write(text)


def build_bounds(args, variables: Iterable[str], report: Report) -> Bounds:
    ranges: dict[str, list[int]] = {}
    for spec in args.init or []:
        name, values = parse_init(spec)
        ranges[name] = values
    defaulted = sorted(set(variables) - set(ranges))
    for v in defaulted:
        ranges[v] = [0]
    max_len = args.max_len if args.max_len is not None else DEFAULT_MAX_LEN
    if max_len < 2:
        raise UsageError("--max-len must be at least 2")
    bounds = Bounds.grid(ranges, max_len)
    parts = []
    for v in bounds.variables:
        vals = ranges[v]
        if not vals:
            rng = "(empty)"
        elif len(vals) == 1:
            rng = str(vals[0])
        else:
            rng = f"{vals[0]}..{vals[-1]}"
        parts.append(f"{v}={rng}" + (" (default)" if v in defaulted else ""))
    suffix = "" if args.max_len is not None else " (default)"
    report.line(f"# bounds: {', '.join(parts) or '(no variables)'}; max-len={max_len}{suffix}")
    report.payload["bounds"] = bounds.to_json()
    report.payload["defaulted"] = defaulted
    return bounds


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def load_program(path: str) -> Program:
    return parse_program(_read(path))


def load_formula(path: str) -> Formula:
    return parse_formula(_read(path))


def _trace_json(t):
    return None if t is None else [list(s) for s in t]


def _verdict(report: Report, claim: str, accepted: bool, witness, variables, label="bounded") -> int:
    verdict = "accepted" if accepted else "refuted"
    report.payload["verdict"] = {"claim": claim, "verdict": verdict, "mode": label,
                                 "witness": _trace_json(witness)}
    report.line(f"claim: {claim}")
    report.line(f"verdict: {verdict} ({label})")
    if witness is not None:
        report.line(f"witness: {format_trace(witness, variables)}")
    return EXIT_OK if accepted else EXIT_REFUTED


# ---------------------------------------------------------------------------
# Commands


def cmd_traces(args, report: Report, sos_only: bool = False) -> int:
    program = load_program(args.program)
    bounds = build_bounds(args, program_vars(program), report)
    engine = "sos" if sos_only else args.engine
    if engine == "sos":
        stats = RunStats()
        traces = run_traces(program.main, program.table, bounds, stats)
        truncated = stats.pruned_runs > 0
        if sos_only:
            report.line(f"# pruned runs: {stats.pruned_runs}")
            report.payload["pruned_runs"] = stats.pruned_runs
    else:
        ev = eval_stm_detailed(program.main, program.table, bounds)
        traces, truncated = ev.traces, ev.truncated
    if getattr(args, "modulo_stutter", False):
        traces = normalize_set(traces)
    text = dump(traces, bounds.variables)
    if text:
        report.lines.append(text.rstrip("\n"))
    report.payload["traces"] = [_trace_json(t) for t in sorted(traces)]
    report.payload["truncated"] = truncated
    if not traces and truncated:
        print("no trace terminated within the length budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_run(args, report: Report) -> int:
    return cmd_traces(args, report, sos_only=True)


def cmd_stf(args, report: Report) -> int:
    program = load_program(args.program)
    phi = stf(program.main, program.table)
    if args.prune:
        phi = prune_unused_binders(phi)
    report.payload["formula"] = show_formula(phi)
    report.line(show_formula(phi))
    if args.mes:
        system = mes(rename_recursion_vars(phi) if not has_unique_binders(phi) else phi)
        report.payload["mes"] = {"root": show_formula(system.root),
                                 "equations": [[x, show_formula(f)] for x, f in system.equations]}
        report.line(f"root: {show_formula(system.root)}")
        for x, f in system.equations:
            report.line(f"{x} = {show_formula(f)}")
    return EXIT_OK


def cmd_canon(args, report: Report) -> int:
    phi = load_formula(args.formula)
    if not has_unique_binders(phi):
        phi = rename_recursion_vars(phi)
    program = canon(phi)
    text = show_program(program)
    report.payload["program"] = text
    report.lines.append(text.rstrip("\n"))
    return EXIT_OK


def cmd_entails(args, report: Report) -> int:
    lhs, rhs = load_formula(args.premise), load_formula(args.conclusion)
    bounds = build_bounds(args, set(formula_vars(lhs)) | set(formula_vars(rhs)), report)
    try:
        cert = entails_bounded(lhs, rhs, bounds)
    except RestrictionError as exc:
        report.line(f"oracle cannot enumerate the premise: {exc}")
        report.payload["verdict"] = {"verdict": "insufficient", "reason": str(exc)}
        return EXIT_INSUFFICIENT
    report.payload["checked_traces"] = cert.checked
    return _verdict(report, f"{show_formula(lhs)} |= {show_formula(rhs)}", cert.accepted,
                    cert.counterexample, bounds.variables)


def cmd_valid(args, report: Report) -> int:
    program = load_program(args.program)
    phi = load_formula(args.formula)
    bounds = build_bounds(args, program_vars(program) | set(formula_vars(phi)), report)
    v = valid_judgment_bounded(program.main, program.table, phi, bounds)
    return _verdict(report, f"|= main : {show_formula(phi)}", v.accepted, v.counterexample,
                    bounds.variables)


def cmd_prove(args, report: Report) -> int:
    program = load_program(args.program)
    target = None if args.target == "stf" else load_formula(args.target)
    variables = program_vars(program) | (set(formula_vars(target)) if target is not None else set())
    bounds = build_bounds(args, variables, report)
    try:
        if target is None:
            tree = prove_stf(program.main, program.table, bounds, program.loops)
        else:
            tree = prove_judgment(program.main, program.table, target, bounds, program.loops)
    except ProofFailure as exc:
        report.line(f"# proof search stopped at: {exc.sequent}")
        cert = exc.certificate
        claim = f"{show_formula(cert.premise)} |= {show_formula(cert.conclusion)}"
        return _verdict(report, claim, False, cert.counterexample, bounds.variables)
    result = check_proof(tree, program.table, replay=True)
    proof = {"schema_version": SCHEMA_VERSION, "bounds": bounds.to_json(), "tree": tree_to_json(tree)}
    if args.out:
        Path(args.out).write_text(json.dumps(proof, indent=2) + "\n")
        report.line(f"# proof written to {args.out}")
    else:
        report.payload["proof"] = proof
    stats = {rule: count_rule(tree, rule) for rule in ("Call", "Cons", "Unfold", "While")}
    report.payload["rule_counts"] = stats
    report.line("# rules: " + ", ".join(f"{k}={v}" for k, v in stats.items()))
    if args.format == "text" and not args.out:
        report.lines.append(json.dumps(proof, indent=2))
    claim = str(tree.conclusion)
    return _verdict(report, claim, result.fully_checked, None, bounds.variables, "bounded oracle")


def cmd_check_proof(args, report: Report) -> int:
    data = json.loads(_read(args.proof))
    program = load_program(args.program)
    tree = tree_from_json(data["tree"] if "tree" in data else data)
    result = check_proof(tree, program.table, replay=args.replay)
    for err in result.errors:
        report.line(f"error: {err}")
    report.payload["errors"] = [{"path": list(e.path), "rule": e.rule, "message": e.message}
                                for e in result.errors]
    report.payload["certificates"] = len(result.certificates)
    mode = "replayed certificates" if args.replay else "bounded oracle"
    refuted = [c for c in result.certificates if not c.accepted]
    witness = refuted[0].counterexample if refuted else None
    variables = refuted[0].bounds.variables if refuted else ()
    return _verdict(report, str(tree.conclusion), result.fully_checked, witness, variables, mode)


def cmd_galois(args, report: Report) -> int:
    program = load_program(args.program)
    phi = load_formula(args.formula)
    if not has_unique_binders(phi):
        phi = rename_recursion_vars(phi)
    bounds = build_bounds(args, program_vars(program) | set(formula_vars(phi)), report)
    try:
        rep = galois_check(program.main, program.table, phi, bounds)
    except BoundsInsufficient as exc:
        report.line(f"bounds insufficient: {exc}")
        report.payload["verdict"] = {"verdict": "insufficient", "reason": str(exc)}
        return EXIT_INSUFFICIENT
    v = bounds.variables
    report.line(f"# horizon: stutter-free traces of length <= {rep.horizon}")
    for name, ok, w in (("stf(S) |=~ phi", rep.entails, rep.entails_witness),
                        ("S <=~ canon(phi)", rep.refines, rep.refines_witness)):
        report.line(f"{name}: {'holds' if ok else 'fails'}"
                    + (f"  witness: {format_trace(w, v)}" if w is not None else ""))
    report.payload["directions"] = {
        "entails": {"holds": rep.entails, "witness": _trace_json(rep.entails_witness)},
        "refines": {"holds": rep.refines, "witness": _trace_json(rep.refines_witness)},
    }
    return _verdict(report, "stf(S) |=~ phi  <=>  S <=~ canon(phi)", rep.agree, None, v)


def cmd_check_laws(args, report: Report) -> int:
    results = check_laws(random.Random(args.seed), args.samples)
    failed = 0
    for name, failures in results.items():
        report.line(f"{name}: {'ok' if not failures else f'{len(failures)} failures'}")
        failed += len(failures)
    report.payload["laws"] = {k: len(v) for k, v in results.items()}
    report.payload["seed"] = args.seed
    return _verdict(report, f"trace-set laws on {args.samples} samples", failed == 0, None, ())


# ---------------------------------------------------------------------------


def _add_bounds(p):
    p.add_argument("--init", action="append", metavar="VAR=LO..HI",
                   help="initial values (repeatable; cartesian product); unlisted variables start at 0")
    p.add_argument("--max-len", type=int, default=None, help=f"raw trace-length budget (default {DEFAULT_MAX_LEN})")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracelab", description="Finite-trace semantics workbench")
    parser.add_argument("--version", action="version", version=f"tracelab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--out", metavar="PATH")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("traces", parents=[common], help="enumerate the traces of a program")
    p.add_argument("program")
    p.add_argument("--engine", choices=("sos", "denot"), default="sos")
    p.add_argument("--modulo-stutter", action="store_true")
    _add_bounds(p)
    p.set_defaults(fn=cmd_traces)

    p = sub.add_parser("run", parents=[common], help="run the operational interpreter with statistics")
    p.add_argument("program")
    p.add_argument("--modulo-stutter", action="store_true")
    _add_bounds(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("stf", parents=[common], help="print the strongest trace formula of main")
    p.add_argument("program")
    p.add_argument("--prune", action="store_true", help="drop binders whose variable is unused")
    p.add_argument("--mes", action="store_true", help="also print the modal equation system")
    p.set_defaults(fn=cmd_stf)

    p = sub.add_parser("canon", parents=[common], help="print the canonical program of a formula")
    p.add_argument("formula")
    p.set_defaults(fn=cmd_canon)

    p = sub.add_parser("entails", parents=[common], help="bounded entailment check")
    p.add_argument("premise")
    p.add_argument("conclusion")
    _add_bounds(p)
    p.set_defaults(fn=cmd_entails)

    p = sub.add_parser("valid", parents=[common], help="bounded validity of main : formula")
    p.add_argument("program")
    p.add_argument("formula")
    _add_bounds(p)
    p.set_defaults(fn=cmd_valid)

    p = sub.add_parser("prove", parents=[common], help="generate and check a proof")
    p.add_argument("program")
    p.add_argument("--target", default="stf", help="'stf' or a .tfl file")
    _add_bounds(p)
    p.set_defaults(fn=cmd_prove, out_is_artifact=True)

    p = sub.add_parser("check-proof", parents=[common], help="check a proof.json against a program")
    p.add_argument("proof")
    p.add_argument("program")
    p.add_argument("--replay", action="store_true", help="trust stored certificate verdicts")
    p.set_defaults(fn=cmd_check_proof)

    p = sub.add_parser("galois", parents=[common], help="check both sides of the program/formula adjunction")
    p.add_argument("program")
    p.add_argument("formula")
    _add_bounds(p)
    p.set_defaults(fn=cmd_galois)

    p = sub.add_parser("check-laws", parents=[common], help="property-test the trace-set algebra")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(fn=cmd_check_laws)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    report = Report(args, args.command)
    try:
        code = args.fn(args, report)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (WellFormednessError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WF
    except BoundsInsufficient as exc:
        print(f"bounds insufficient: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except TracelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WF
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report.payload["exit_code"] = code
    report.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
