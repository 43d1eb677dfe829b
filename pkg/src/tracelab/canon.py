"""Canonical programs for restricted formulas and stutter-modulo comparisons."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .denotational import (
    eval_formula_detailed, eval_formula_stutter_free, eval_stm_detailed, eval_stm_stutter_free,
)
from .errors import BoundsInsufficient, RestrictionError, WellFormednessError
from .parser import check_well_formed
from .sos import run_traces
from .syntax import (
    ABORT, And, Assign, Call, Chop, Formula, IdRel, If, IfStar, Mu, Or, Proc, Program, Rel, RVar,
    Sb, Seq, Skip, Statement, StatePred, binders, find_unrestricted, free_rvars, show_formula,
)
from .stf import stf
from .traces import Bounds, Trace, TraceSet, normalize_set

# Each canonical-program construct adds at most two stuttering states per formula operator.
STUTTER_FACTOR = 3
# How far the raw budget may be doubled before giving up.
MAX_WIDENING = 16


def proc_for(rvar: str) -> str:
    return f"m_{rvar}"


def canon(phi: Formula) -> Program:
    if free_rvars(phi):
        raise WellFormednessError(f"formula is not closed: {sorted(free_rvars(phi))}")
    bad = find_unrestricted(phi)
    if bad is not None:
        raise RestrictionError(f"no canonical program for {show_formula(bad)}", bad)
    names = binders(phi)
    if len(names) != len(set(names)):
        dup = next(n for n in names if names.count(n) > 1)
        raise WellFormednessError(
            f"recursion variable {dup!r} is bound twice; rename recursion variables first")

    procs: list[Proc] = []
    uses_abort = False

    def go(f: Formula) -> Statement:
        nonlocal uses_abort
        match f:
            case Rel(IdRel()):
                return Skip()
            case Rel(Sb(x, a)):
                return Assign(x, a)
            case And(StatePred(b), rest):
                uses_abort = True
                return If(b, go(rest), Call(ABORT))
            case Or(a, b):
                return IfStar(go(a), go(b))
            case Chop(a, b):
                return Seq(go(a), go(b))
            case Mu(x, body):
                stmt = go(body)
                procs.append(Proc(proc_for(x), stmt))
                return Call(proc_for(x))
            case RVar(x):
                return Call(proc_for(x))
        raise TypeError(f)

    main = go(phi)
    if uses_abort:
        procs.append(Proc(ABORT, Call(ABORT)))
    program = Program(main, tuple(procs))
    check_well_formed(program)
    return program


def stutter_equal_bounded(a: TraceSet, b: TraceSet) -> bool:
    return normalize_set(a) == normalize_set(b)


def _cut(traces: TraceSet, k: int) -> TraceSet:
    return frozenset(t for t in traces if len(t) <= k)


@dataclass
class StutterView:
    """Normalized traces of one side, validated against its raw enumeration."""
    traces: TraceSet
    raw_budget: int
    widenings: int


def _validated(exact: TraceSet, raw_at, k: int, max_len: int) -> StutterView:
    budget, widenings = max_len, 0
    while True:
        raw = raw_at(budget)
        if _cut(normalize_set(raw), k) == exact:
            return StutterView(exact, budget, widenings)
        if budget >= max_len * MAX_WIDENING:
            raise BoundsInsufficient(
                f"raw budget {budget} does not reproduce all stutter-free traces up to length {k}")
        budget *= 2
        widenings += 1


def stutter_view_stm(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
                     engine: str = "sos") -> StutterView:
    k = bounds.max_len // STUTTER_FACTOR
    exact = eval_stm_stutter_free(stmt, table, bounds, k)
    if engine == "sos":
        def raw_at(n):
            return run_traces(stmt, table, bounds.with_max_len(n))
    else:
        def raw_at(n):
            return eval_stm_detailed(stmt, table, bounds.with_max_len(n)).traces
    return _validated(exact, raw_at, k, bounds.max_len)


def stutter_view_formula(phi: Formula, bounds: Bounds) -> StutterView:
    k = bounds.max_len // STUTTER_FACTOR
    exact = eval_formula_stutter_free(phi, bounds, k)
    return _validated(exact, lambda n: eval_formula_detailed(phi, bounds.with_max_len(n)).traces,
                      k, bounds.max_len)


@dataclass
class RefinementVerdict:
    holds: bool
    witness: Trace | None
    bounds: Bounds
    modulo_stutter: bool
    # normalized-length horizon and raw budgets reached, when comparing modulo stuttering
    horizon: int | None = None
    raw_budgets: tuple[int, int] | None = None
    notes: list[str] = field(default_factory=list)


def _first_missing(left: TraceSet, right: TraceSet) -> Trace | None:
    missing = sorted(left - right)
    return missing[0] if missing else None


def refines_bounded(s1: Statement, t1: Mapping[str, Statement], s2: Statement,
                    t2: Mapping[str, Statement], bounds: Bounds,
                    modulo_stutter: bool = False) -> RefinementVerdict:
    """Bounded check of ``[[s1]] <= [[s2]]``, optionally after stutter normalization."""
    if not modulo_stutter:
        left = eval_stm_detailed(s1, t1, bounds).traces
        right = eval_stm_detailed(s2, t2, bounds).traces
        w = _first_missing(left, right)
        return RefinementVerdict(w is None, w, bounds, False)
    lv = stutter_view_stm(s1, t1, bounds)
    rv = stutter_view_stm(s2, t2, bounds)
    w = _first_missing(lv.traces, rv.traces)
    return RefinementVerdict(w is None, w, bounds, True, bounds.max_len // STUTTER_FACTOR,
                             (lv.raw_budget, rv.raw_budget))


@dataclass
class GaloisReport:
    entails: bool
    entails_witness: Trace | None
    refines: bool
    refines_witness: Trace | None
    bounds: Bounds
    horizon: int

    @property
    def agree(self) -> bool:
        return self.entails == self.refines


def entails_modulo_stutter(lhs: Formula, rhs: Formula, bounds: Bounds) -> tuple[bool, Trace | None]:
    left = stutter_view_formula(lhs, bounds).traces
    right = stutter_view_formula(rhs, bounds).traces
    w = _first_missing(left, right)
    return w is None, w


def galois_check(stmt: Statement, table: Mapping[str, Statement], phi: Formula,
                 bounds: Bounds) -> GaloisReport:
    """Both sides of ``stf(S) |=~ phi  <=>  S <=~ canon(phi)``, each with its own witness."""
    ok_left, w_left = entails_modulo_stutter(stf(stmt, table), phi, bounds)
    program = canon(phi)
    verdict = refines_bounded(stmt, table, program.main, program.table, bounds, modulo_stutter=True)
    return GaloisReport(ok_left, w_left, verdict.holds, verdict.witness, bounds,
                        bounds.max_len // STUTTER_FACTOR)
