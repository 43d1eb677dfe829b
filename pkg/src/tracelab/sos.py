"""Small-step operational semantics and the trace sets it induces."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .errors import SemanticsError, WellFormednessError
from .expr import assignment, state_pred
from .syntax import Assign, Call, If, IfStar, Seq, Skip, Statement, StmtVar
from .traces import Bounds, State, TraceSet


@dataclass(frozen=True)
class Intermediate:
    stmt: Statement
    state: State


@dataclass(frozen=True)
class Final:
    state: State


Configuration = Union[Intermediate, Final]


@dataclass
class RunStats:
    pruned_runs: int = 0
    steps: int = 0


class Machine:
    """Caches compiled guards and assignments for one variable layout."""

    def __init__(self, table: Mapping[str, Statement], variables):
        self.table = table
        self.index = {v: i for i, v in enumerate(variables)}
        self._cache: dict[int, object] = {}

    def _compiled(self, node, make):
        key = id(node)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not node:
            hit = (node, make())
            self._cache[key] = hit
        return hit[1]

    def step(self, stmt: Statement, s: State) -> frozenset[Configuration]:
        match stmt:
            case Skip():
                return frozenset({Final(s)})
            case Assign(x, a):
                fn = self._compiled(stmt, lambda: assignment(x, a, self.index))
                return frozenset({Final(fn(s))})
            case Seq(first, second):
                out = set()
                for c in self.step(first, s):
                    if isinstance(c, Final):
                        out.add(Intermediate(second, c.state))
                    else:
                        out.add(Intermediate(Seq(c.stmt, second), c.state))
                return frozenset(out)
            case If(b, then, orelse):
                pred = self._compiled(stmt, lambda: state_pred(b, self.index))
                return frozenset({Intermediate(then if pred(s) else orelse, s)})
            case IfStar(left, right):
                return frozenset({Intermediate(left, s), Intermediate(right, s)})
            case Call(m):
                if m not in self.table:
                    raise WellFormednessError(f"call to undeclared procedure {m!r}")
                return frozenset({Intermediate(self.table[m], s)})
            case StmtVar(y):
                raise SemanticsError(f"statement variable {y!r} has no operational meaning")
        raise TypeError(stmt)


def step(c: Configuration, table: Mapping[str, Statement], variables) -> frozenset[Configuration]:
    if isinstance(c, Final):
        return frozenset()
    return Machine(table, variables).step(c.stmt, c.state)


def run_traces(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
               stats: RunStats | None = None) -> TraceSet:
    """All traces of maximal terminating runs within the length budget."""
    machine = Machine(table, bounds.variables)
    stats = stats if stats is not None else RunStats()
    done = set()
    frontier = {(Intermediate(stmt, s), (s,)) for s in bounds.initial_states}
    while frontier:
        nxt = set()
        for config, trace in frontier:
            if len(trace) >= bounds.max_len:
                stats.pruned_runs += 1
                continue
            for succ in machine.step(config.stmt, config.state):
                stats.steps += 1
                extended = trace + (succ.state,)
                if isinstance(succ, Final):
                    done.add(extended)
                else:
                    nxt.add((succ, extended))
        frontier = nxt
    return frozenset(done)
