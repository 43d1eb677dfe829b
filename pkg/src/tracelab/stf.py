"""Strongest trace formulas and modal equation systems."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .denotational import solve_equations
from .errors import SemanticsError, WellFormednessError
from .syntax import (
    ID, And, Assign, Call, Chop, Formula, If, IfStar, Mu, Or, Rel, RVar, Sb, Seq, Skip, Statement,
    StatePred, StmtVar, binders, free_rvars, negate,
)
from .traces import Bounds, TraceSet


def rvar_for(proc: str) -> str:
    return f"X_{proc}"


def stf_hat(stmt: Statement, table: Mapping[str, Statement], visited: frozenset[str]) -> Formula:
    match stmt:
        case Skip():
            return ID
        case Assign(x, a):
            return Rel(Sb(x, a))
        case Seq(a, b):
            return Chop(stf_hat(a, table, visited), stf_hat(b, table, visited))
        case If(b, s1, s2):
            return Or(
                And(StatePred(b), Chop(ID, stf_hat(s1, table, visited))),
                And(StatePred(negate(b)), Chop(ID, stf_hat(s2, table, visited))),
            )
        case IfStar(s1, s2):
            return Or(Chop(ID, stf_hat(s1, table, visited)), Chop(ID, stf_hat(s2, table, visited)))
        case Call(m):
            if m not in table:
                raise WellFormednessError(f"call to undeclared procedure {m!r}")
            if m in visited:
                return Chop(ID, RVar(rvar_for(m)))
            return Chop(ID, Mu(rvar_for(m), stf_hat(table[m], table, visited | {m})))
        case StmtVar(y):
            raise SemanticsError(f"statement variable {y!r} has no strongest trace formula")
    raise TypeError(stmt)


def stf(stmt: Statement, table: Mapping[str, Statement]) -> Formula:
    return stf_hat(stmt, table, frozenset())


def prune_unused_binders(phi: Formula) -> Formula:
    """Drop ``mu X.`` wherever ``X`` does not occur free in the body."""
    match phi:
        case And(a, b):
            return And(prune_unused_binders(a), prune_unused_binders(b))
        case Or(a, b):
            return Or(prune_unused_binders(a), prune_unused_binders(b))
        case Chop(a, b):
            return Chop(prune_unused_binders(a), prune_unused_binders(b))
        case Mu(x, body):
            body = prune_unused_binders(body)
            return Mu(x, body) if x in free_rvars(body) else body
    return phi


@dataclass(frozen=True)
class ModalEquationSystem:
    root: Formula
    equations: tuple[tuple[str, Formula], ...]

    def as_dict(self) -> dict[str, Formula]:
        return dict(self.equations)


def mes(phi: Formula) -> ModalEquationSystem:
    names = binders(phi)
    if len(names) != len(set(names)):
        dup = next(n for n in names if names.count(n) > 1)
        raise WellFormednessError(
            f"recursion variable {dup!r} is bound twice; rename recursion variables first")
    equations: list[tuple[str, Formula]] = []

    def go(f: Formula) -> Formula:
        match f:
            case And(a, b):
                return And(go(a), go(b))
            case Or(a, b):
                return Or(go(a), go(b))
            case Chop(a, b):
                return Chop(go(a), go(b))
            case Mu(x, body):
                slot = len(equations)
                equations.append((x, body))
                equations[slot] = (x, go(body))
                return RVar(x)
        return f

    root = go(phi)
    return ModalEquationSystem(root, tuple(equations))


def expand(system: ModalEquationSystem) -> Formula:
    """Rebuild a fixed-point formula from an equation system."""
    eqs = system.as_dict()

    def go(f: Formula, open_: frozenset[str]) -> Formula:
        match f:
            case RVar(x) if x in eqs and x not in open_:
                return Mu(x, go(eqs[x], open_ | {x}))
            case And(a, b):
                return And(go(a, open_), go(b, open_))
            case Or(a, b):
                return Or(go(a, open_), go(b, open_))
            case Chop(a, b):
                return Chop(go(a, open_), go(b, open_))
            case Mu(x, body):
                return Mu(x, go(body, open_ | {x}))
        return f

    return go(system.root, frozenset())


def eval_mes(system: ModalEquationSystem, bounds: Bounds) -> TraceSet:
    return solve_equations(system.root, system.equations, bounds)
