"""Compile expressions and relation atoms to closures over tuple states."""
from __future__ import annotations

import operator
from typing import Callable, Mapping

from .syntax import (
    AExp, BAnd, BExp, BinOp, BOr, BoolLit, Cmp, Dec, IdRel, NamedRel, Not, Num, RelationAtom, Sb,
    Var,
)
from .traces import State, update

_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_CMP = {"=": operator.eq, "!=": operator.ne, "<": operator.lt,
        "<=": operator.le, ">": operator.gt, ">=": operator.ge}

# Closures take the current state and, for relation bodies, the next state.
Arith = Callable[[State, State], int]
Pred = Callable[[State, State], bool]


class UnknownVariable(KeyError):
    pass


def _slot(name: str, index: Mapping[str, int]) -> tuple[int, bool]:
    primed = name.endswith("'")
    base = name[:-1] if primed else name
    if base not in index:
        raise UnknownVariable(f"variable {base!r} is not among the state variables {sorted(index)}")
    return index[base], primed


def compile_aexp(a: AExp, index: Mapping[str, int]) -> Arith:
    match a:
        case Num(v):
            return lambda s, t=None: v
        case Var(name):
            i, primed = _slot(name, index)
            if primed:
                return lambda s, t=None: t[i]
            return lambda s, t=None: s[i]
        case BinOp(op, l, r):
            f, g, fn = compile_aexp(l, index), compile_aexp(r, index), _ARITH[op]
            return lambda s, t=None: fn(f(s, t), g(s, t))
    raise TypeError(a)


def compile_bexp(b: BExp, index: Mapping[str, int]) -> Pred:
    match b:
        case BoolLit(v):
            return lambda s, t=None: v
        case Cmp(op, l, r):
            f, g, fn = compile_aexp(l, index), compile_aexp(r, index), _CMP[op]
            return lambda s, t=None: fn(f(s, t), g(s, t))
        case Not(x):
            f = compile_bexp(x, index)
            return lambda s, t=None: not f(s, t)
        case BAnd(l, r):
            f, g = compile_bexp(l, index), compile_bexp(r, index)
            return lambda s, t=None: f(s, t) and g(s, t)
        case BOr(l, r):
            f, g = compile_bexp(l, index), compile_bexp(r, index)
            return lambda s, t=None: f(s, t) or g(s, t)
    raise TypeError(b)


def state_pred(b: BExp, index: Mapping[str, int]) -> Callable[[State], bool]:
    f = compile_bexp(b, index)
    return lambda s: f(s, None)


def assignment(var: str, a: AExp, index: Mapping[str, int]) -> Callable[[State], State]:
    i, _ = _slot(var, index)
    f = compile_aexp(a, index)
    return lambda s: update(s, i, f(s, None))


def compile_relation(atom: RelationAtom, index: Mapping[str, int]) -> Pred:
    match atom:
        case IdRel():
            return lambda s, t: s == t
        case Sb(x, a):
            step = assignment(x, a, index)
            return lambda s, t: step(s) == t
        case Dec(a):
            f = compile_aexp(a, index)
            return lambda s, t: f(t, None) <= f(s, None)
        case NamedRel(_, body):
            return compile_bexp(body, index)
    raise TypeError(atom)
