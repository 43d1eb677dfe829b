"""Compositional trace semantics of statements and formulas.

Two evaluation modes are offered:

* enumeration: the finite set of traces of length at most ``max_len`` starting in
  one of the initial states, computed by Kleene iteration over a demand-driven
  system of unknowns (procedures, fixed-point binders) indexed by start state;
* membership: whether a given trace satisfies a formula, by labelling every
  interval of the trace (full formula grammar, including ``Dec`` and named
  actions).

Statements and restricted formulas compile to the same small operator language
(step, chop, guard, sharp, union, reference), so one solver serves both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import RestrictionError, SemanticsError, WellFormednessError
from .expr import assignment, compile_relation, state_pred
from .syntax import (
    And, Assign, Call, Chop, Formula, IdRel, If, IfStar, Mu, Or, Rel, RVar, Sb, Seq, Skip,
    Statement, StatePred, StmtVar, rename_recursion_vars, show_formula, unfold,
)
from .traces import Bounds, State, Trace, TraceSet

__all__ = [
    "Evaluation", "eval_stm", "eval_stm_detailed", "eval_formula_enum", "eval_formula_detailed",
    "eval_stm_stutter_free", "eval_formula_stutter_free", "models", "Membership", "unfold",
]

EMPTY: TraceSet = frozenset()
ROOT = "<root>"


# ---------------------------------------------------------------------------
# Operator language


class _Node:
    __slots__ = ()


class _Step(_Node):
    __slots__ = ("fn",)

    def __init__(self, fn: Callable[[State], State]):
        self.fn = fn


class _Seq(_Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b


class _Guard(_Node):
    __slots__ = ("pred", "body")

    def __init__(self, pred, body):
        self.pred, self.body = pred, body


class _Sharp(_Node):
    __slots__ = ("body",)

    def __init__(self, body):
        self.body = body


class _Union(_Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b


class _Ref(_Node):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name


class _Fixed(_Node):
    __slots__ = ("by_start",)

    def __init__(self, traces):
        self.by_start: dict[State, list[Trace]] = {}
        for t in traces:
            self.by_start.setdefault(t[0], []).append(t)


def _identity(s):
    return s


@dataclass
class Evaluation:
    traces: TraceSet
    # some derivation was cut short by the length budget
    truncated: bool = False
    # per-round snapshots of every unknown, when requested
    approximants: list[dict] = field(default_factory=list)


class _Solver:
    def __init__(self, defs: Mapping[str, _Node], stutter_free: bool):
        self.defs = dict(defs)
        self.stutter_free = stutter_free
        self.min_len = 1 if stutter_free else 2

    def solve(self, root: _Node, initial_states: Sequence[State], budget: int,
              record: bool = False) -> Evaluation:
        defs = dict(self.defs)
        defs[ROOT] = root
        demand: dict[tuple[str, State], int] = {(ROOT, s): budget for s in initial_states}
        values: dict[tuple[str, State], TraceSet] = {}
        budgets: dict[tuple[str, State], int] = {}
        snapshots = []
        while True:
            self.prev, self.prev_budget = values, budgets
            self.demand = dict(demand)
            self.memo: dict = {}
            self.cut = False
            new = {key: frozenset(self.ev(defs[key[0]], key[1], L)) for key, L in demand.items()}
            stable = new == values and self.demand == demand
            values, budgets, demand = new, dict(demand), self.demand
            if record:
                snapshots.append(dict(values))
            if stable:
                break
        out = frozenset().union(*(values[(ROOT, s)] for s in initial_states)) if initial_states else EMPTY
        return Evaluation(out, self.cut, snapshots)

    def ev(self, node: _Node, s: State, L: int) -> TraceSet:
        if L < self.min_len:
            if not self.stutter_free:
                self.cut = True
            return EMPTY
        key = (id(node), s, L)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._ev(node, s, L)
        self.memo[key] = out
        return out

    def _ev(self, node: _Node, s: State, L: int) -> TraceSet:
        kind = type(node)
        if kind is _Step:
            t = node.fn(s)
            if self.stutter_free and t == s:
                return frozenset({(s,)})
            # a real move needs two states even when stutter steps are free
            return frozenset({(s, t)}) if L >= 2 else EMPTY
        if kind is _Seq:
            out = set()
            for ta in self.ev(node.a, s, L):
                for tb in self.ev(node.b, ta[-1], L - len(ta) + 1):
                    out.add(ta + tb[1:])
            return frozenset(out)
        if kind is _Guard:
            return self.ev(node.body, s, L) if node.pred(s) else EMPTY
        if kind is _Sharp:
            if self.stutter_free:
                return self.ev(node.body, s, L)
            return frozenset((s,) + t for t in self.ev(node.body, s, L - 1))
        if kind is _Union:
            return self.ev(node.a, s, L) | self.ev(node.b, s, L)
        if kind is _Ref:
            key = (node.name, s)
            if self.demand.get(key, 0) < L:
                self.demand[key] = L
            got = self.prev.get(key, EMPTY)
            if self.prev_budget.get(key, 0) <= L:
                return got
            return frozenset(t for t in got if len(t) <= L)
        if kind is _Fixed:
            return frozenset(t for t in node.by_start.get(s, ()) if len(t) <= L)
        raise TypeError(node)


# ---------------------------------------------------------------------------
# Compilation


def _compile_stmt(stmt: Statement, index, procs, interp) -> _Node:
    match stmt:
        case Skip():
            return _Step(_identity)
        case Assign(x, a):
            return _Step(assignment(x, a, index))
        case Seq(a, b):
            return _Seq(_compile_stmt(a, index, procs, interp), _compile_stmt(b, index, procs, interp))
        case If(b, s1, s2):
            pred = state_pred(b, index)
            return _Union(
                _Guard(pred, _Sharp(_compile_stmt(s1, index, procs, interp))),
                _Guard(lambda s: not pred(s), _Sharp(_compile_stmt(s2, index, procs, interp))),
            )
        case IfStar(s1, s2):
            return _Union(_Sharp(_compile_stmt(s1, index, procs, interp)),
                          _Sharp(_compile_stmt(s2, index, procs, interp)))
        case Call(m):
            if m not in procs:
                raise WellFormednessError(f"call to undeclared procedure {m!r}")
            return _Ref(m)
        case StmtVar(y):
            if interp is None or y not in interp:
                raise SemanticsError(f"no interpretation for statement variable {y!r}")
            return _Fixed(interp[y])
    raise TypeError(stmt)


def _stmt_solver(table: Mapping[str, Statement], index, interp, stutter_free) -> _Solver:
    defs = {m: _Sharp(_compile_stmt(body, index, table, interp)) for m, body in table.items()}
    return _Solver(defs, stutter_free)


def eval_stm_detailed(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
                      interp: Mapping[str, TraceSet] | None = None, record: bool = False,
                      stutter_free: bool = False, budget: int | None = None) -> Evaluation:
    index = bounds.index()
    solver = _stmt_solver(table, index, interp, stutter_free)
    root = _compile_stmt(stmt, index, table, interp)
    return solver.solve(root, bounds.initial_states, bounds.max_len if budget is None else budget,
                        record)


def eval_stm(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
             interp: Mapping[str, TraceSet] | None = None) -> TraceSet:
    """Traces of ``stmt`` of length at most ``bounds.max_len`` from the initial states."""
    return eval_stm_detailed(stmt, table, bounds, interp).traces


def eval_stm_stutter_free(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
                          max_norm_len: int) -> TraceSet:
    """Stutter-normalized traces of normalized length at most ``max_norm_len``.

    Exact: normalization commutes with chop, sharp, restriction and union, so the
    solver can work on normalized traces throughout.
    """
    return eval_stm_detailed(stmt, table, bounds, stutter_free=True, budget=max_norm_len).traces


class _FormulaCompiler:
    def __init__(self, index, valuation):
        self.index = index
        self.valuation = valuation or {}
        self.defs: dict[str, _Node] = {}

    def compile(self, phi: Formula, bound: frozenset) -> _Node:
        match phi:
            case Rel(IdRel()):
                return _Step(_identity)
            case Rel(Sb(x, a)):
                return _Step(assignment(x, a, self.index))
            case Rel(_):
                raise RestrictionError(
                    f"relation {show_formula(phi)} cannot be enumerated; use membership checking", phi)
            case StatePred():
                raise RestrictionError(
                    f"bare state predicate {show_formula(phi)} cannot be enumerated", phi)
            case And(StatePred(b), rest):
                return _Guard(state_pred(b, self.index), self.compile(rest, bound))
            case And():
                raise RestrictionError(
                    f"general conjunction {show_formula(phi)} cannot be enumerated", phi)
            case Or(a, b):
                return _Union(self.compile(a, bound), self.compile(b, bound))
            case Chop(a, b):
                return _Seq(self.compile(a, bound), self.compile(b, bound))
            case RVar(x):
                if x in bound:
                    return _Ref(x)
                if x in self.valuation:
                    return _Fixed(self.valuation[x])
                raise SemanticsError(f"unbound recursion variable {x!r}")
            case Mu(x, body):
                # binders are unique after renaming, so simultaneous solving is sound
                self.defs[x] = self.compile(body, bound | {x})
                return _Ref(x)
        raise TypeError(phi)


def eval_formula_detailed(phi: Formula, bounds: Bounds, valuation: Mapping[str, TraceSet] | None = None,
                          record: bool = False, stutter_free: bool = False,
                          budget: int | None = None) -> Evaluation:
    renamed = rename_recursion_vars(phi)
    comp = _FormulaCompiler(bounds.index(), valuation)
    root = comp.compile(renamed, frozenset())
    solver = _Solver(comp.defs, stutter_free)
    return solver.solve(root, bounds.initial_states, bounds.max_len if budget is None else budget,
                        record)


def eval_formula_enum(phi: Formula, bounds: Bounds,
                      valuation: Mapping[str, TraceSet] | None = None) -> TraceSet:
    """Traces of ``phi`` of length at most ``bounds.max_len`` from the initial states."""
    return eval_formula_detailed(phi, bounds, valuation).traces


def eval_formula_stutter_free(phi: Formula, bounds: Bounds, max_norm_len: int) -> TraceSet:
    return eval_formula_detailed(phi, bounds, stutter_free=True, budget=max_norm_len).traces


def solve_equations(root: Formula, equations: Sequence[tuple[str, Formula]], bounds: Bounds) -> TraceSet:
    """Enumerate a system of mutually recursive equations directly."""
    comp = _FormulaCompiler(bounds.index(), None)
    names = frozenset(x for x, _ in equations)
    for x, rhs in equations:
        comp.defs[x] = comp.compile(rhs, names)
    node = comp.compile(root, names)
    return _Solver(comp.defs, False).solve(node, bounds.initial_states, bounds.max_len).traces


# ---------------------------------------------------------------------------
# Membership


class Membership:
    """Decides ``trace |= phi`` for a fixed closed formula by interval labelling.

    Interval sets are stored per start index as bitmasks over end indices, so the
    chop of two labellings is a union of shifted rows.
    """

    def __init__(self, phi: Formula, variables: Sequence[str]):
        self.phi = phi
        self.index = {v: i for i, v in enumerate(variables)}
        renamed = rename_recursion_vars(phi)
        self.equations: dict[str, Callable] = {}
        self.root = self._compile(renamed, frozenset())

    def _compile(self, phi: Formula, bound: frozenset):
        match phi:
            case StatePred(b):
                pred = state_pred(b, self.index)

                def sp(trace, n, env):
                    full = (1 << n) - 1
                    return tuple((full >> i) << i if pred(trace[i]) else 0 for i in range(n))
                return sp
            case Rel(atom):
                rel = compile_relation(atom, self.index)

                def r(trace, n, env):
                    return tuple(1 << (i + 1) if i + 1 < n and rel(trace[i], trace[i + 1]) else 0
                                 for i in range(n))
                return r
            case And(a, b) | Or(a, b):
                f, g = self._compile(a, bound), self._compile(b, bound)
                if isinstance(phi, And):
                    return lambda trace, n, env: tuple(x & y for x, y in zip(f(trace, n, env), g(trace, n, env)))
                return lambda trace, n, env: tuple(x | y for x, y in zip(f(trace, n, env), g(trace, n, env)))
            case Chop(a, b):
                f, g = self._compile(a, bound), self._compile(b, bound)

                def ch(trace, n, env):
                    left, right = f(trace, n, env), g(trace, n, env)
                    out = []
                    for row in left:
                        acc = 0
                        while row:
                            low = row & -row
                            acc |= right[low.bit_length() - 1]
                            row ^= low
                        out.append(acc)
                    return tuple(out)
                return ch
            case RVar(x):
                if x not in bound:
                    raise SemanticsError(f"unbound recursion variable {x!r}")
                return lambda trace, n, env: env[x]
            case Mu(x, body):
                self.equations[x] = self._compile(body, bound | {x})
                return lambda trace, n, env: env[x]
        raise TypeError(phi)

    def labels(self, trace: Sequence[State]) -> tuple[int, ...]:
        n = len(trace)
        env = {x: (0,) * n for x in self.equations}
        while True:
            new = {x: eq(trace, n, env) for x, eq in self.equations.items()}
            if new == env:
                break
            env = new
        return self.root(trace, n, env)

    def __call__(self, trace: Sequence[State]) -> bool:
        if not trace:
            raise ValueError("traces are non-empty")
        return bool(self.labels(trace)[0] >> (len(trace) - 1) & 1)


def models(trace: Sequence[State], phi: Formula, variables: Sequence[str]) -> bool:
    return Membership(phi, variables)(trace)


def restrict_bexp(traces, b, variables) -> TraceSet:
    pred = state_pred(b, {v: i for i, v in enumerate(variables)})
    return frozenset(t for t in traces if pred(t[0]))
