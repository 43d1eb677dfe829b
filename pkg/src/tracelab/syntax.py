"""Abstract syntax for Rec* programs and trace formulas, plus printing.

Every node is an immutable, hashable dataclass.  Printers emit the concrete
syntax accepted by :mod:`tracelab.parser`, so ``parse(show(t)) == t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    # a trailing prime ("x'") refers to the second state of a relation pair
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    left: AExp
    right: AExp


AExp = Union[Num, Var, BinOp]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # "=", "!=", "<", "<=", ">", ">="
    left: AExp
    right: AExp


@dataclass(frozen=True)
class Not:
    arg: BExp


@dataclass(frozen=True)
class BAnd:
    left: BExp
    right: BExp


@dataclass(frozen=True)
class BOr:
    left: BExp
    right: BExp


BExp = Union[BoolLit, Cmp, Not, BAnd, BOr]

ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
_CMP_NEGATION = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def negate(b: BExp) -> BExp:
    """Syntactic negation that keeps guards readable (``not x > 0`` becomes ``x <= 0``)."""
    match b:
        case BoolLit(v):
            return BoolLit(not v)
        case Cmp(op, left, right):
            return Cmp(_CMP_NEGATION[op], left, right)
        case Not(arg):
            return arg
        case _:
            return Not(b)


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: AExp


@dataclass(frozen=True)
class Seq:
    first: Statement
    second: Statement


@dataclass(frozen=True)
class If:
    cond: BExp
    then: Statement
    orelse: Statement


@dataclass(frozen=True)
class IfStar:
    left: Statement
    right: Statement


@dataclass(frozen=True)
class Call:
    proc: str


@dataclass(frozen=True)
class StmtVar:
    name: str


Statement = Union[Skip, Assign, Seq, If, IfStar, Call, StmtVar]

ABORT = "abort"


def diverge() -> Call:
    return Call(ABORT)


def svar_for(proc: str) -> str:
    """Name of the statement variable standing for the continuation of ``proc``."""
    return f"Y_{proc}"


@dataclass(frozen=True)
class Proc:
    name: str
    body: Statement


@dataclass(frozen=True)
class Program:
    main: Statement
    procs: tuple[Proc, ...] = ()
    # names of procedures introduced by desugaring `while`; not printed
    loops: tuple[str, ...] = field(default=(), compare=False)

    @property
    def table(self) -> dict[str, Statement]:
        return {p.name: p.body for p in self.procs}


def seq(*stmts: Statement) -> Statement:
    """Right-nested sequence, the shape the parser produces."""
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def calls(stmt: Statement) -> Iterator[str]:
    match stmt:
        case Call(p):
            yield p
        case Seq(a, b) | IfStar(a, b) | If(_, a, b):
            yield from calls(a)
            yield from calls(b)


def svars(stmt: Statement) -> Iterator[str]:
    match stmt:
        case StmtVar(n):
            yield n
        case Seq(a, b) | IfStar(a, b) | If(_, a, b):
            yield from svars(a)
            yield from svars(b)


def substitute_calls(stmt: Statement, procs) -> Statement:
    """Replace every ``m()`` with ``m`` in *procs* by ``skip; Y_m``."""
    match stmt:
        case Call(p) if p in procs:
            return Seq(Skip(), StmtVar(svar_for(p)))
        case Seq(a, b):
            return Seq(substitute_calls(a, procs), substitute_calls(b, procs))
        case If(c, a, b):
            return If(c, substitute_calls(a, procs), substitute_calls(b, procs))
        case IfStar(a, b):
            return IfStar(substitute_calls(a, procs), substitute_calls(b, procs))
        case _:
            return stmt


# ---------------------------------------------------------------------------
# Trace formulas


@dataclass(frozen=True)
class IdRel:
    pass


@dataclass(frozen=True)
class Sb:
    var: str
    expr: AExp


@dataclass(frozen=True)
class Dec:
    expr: AExp


@dataclass(frozen=True)
class NamedRel:
    name: str
    body: BExp  # over plain and primed variables


RelationAtom = Union[IdRel, Sb, Dec, NamedRel]


@dataclass(frozen=True)
class StatePred:
    cond: BExp


@dataclass(frozen=True)
class Rel:
    atom: RelationAtom


@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Chop:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Mu:
    var: str
    body: Formula


Formula = Union[StatePred, Rel, RVar, And, Or, Chop, Mu]

ID = Rel(IdRel())


def chop(*parts: Formula) -> Formula:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Chop(p, out)
    return out


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    match phi:
        case And(a, b) | Or(a, b) | Chop(a, b):
            yield from subformulas(a)
            yield from subformulas(b)
        case Mu(_, body):
            yield from subformulas(body)


def free_rvars(phi: Formula) -> frozenset[str]:
    match phi:
        case RVar(n):
            return frozenset({n})
        case And(a, b) | Or(a, b) | Chop(a, b):
            return free_rvars(a) | free_rvars(b)
        case Mu(x, body):
            return free_rvars(body) - {x}
        case _:
            return frozenset()


def is_closed(phi: Formula) -> bool:
    return not free_rvars(phi)


def binders(phi: Formula) -> list[str]:
    return [f.var for f in subformulas(phi) if isinstance(f, Mu)]


def _fresh(base: str, taken: set[str]) -> str:
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def substitute(phi: Formula, var: str, repl: Formula) -> Formula:
    """Capture-avoiding ``phi[repl / var]``."""
    repl_free = free_rvars(repl)

    def go(f: Formula) -> Formula:
        match f:
            case RVar(n):
                return repl if n == var else f
            case And(a, b):
                return And(go(a), go(b))
            case Or(a, b):
                return Or(go(a), go(b))
            case Chop(a, b):
                return Chop(go(a), go(b))
            case Mu(x, body):
                if x == var or var not in free_rvars(body):
                    return f
                if x in repl_free:
                    taken = set(repl_free) | free_rvars(body) | set(binders(body)) | {var}
                    y = _fresh(x, taken)
                    body = substitute(body, x, RVar(y))
                    x = y
                return Mu(x, go(body))
            case _:
                return f

    return go(phi)


def unfold(phi: Formula) -> Formula:
    """One fixed-point unfolding: ``mu X. psi`` becomes ``psi[mu X. psi / X]``."""
    if not isinstance(phi, Mu):
        raise TypeError(f"unfold expects a fixed-point formula, got {show_formula(phi)}")
    return substitute(phi.body, phi.var, phi)


def rename_recursion_vars(phi: Formula) -> Formula:
    """Alpha-rename so that every binder introduces a distinct fresh name.

    ``mu X. (Id \\/ X)`` becomes ``mu X1. (Id \\/ X1)``; a second binder of the same
    base name gets ``X2`` and so on.
    """
    taken = set(free_rvars(phi))

    def go(f: Formula, env: dict[str, str]) -> Formula:
        match f:
            case RVar(n):
                return RVar(env.get(n, n))
            case And(a, b):
                return And(go(a, env), go(b, env))
            case Or(a, b):
                return Or(go(a, env), go(b, env))
            case Chop(a, b):
                return Chop(go(a, env), go(b, env))
            case Mu(x, body):
                y = _fresh(x, taken)
                taken.add(y)
                return Mu(y, go(body, {**env, x: y}))
            case _:
                return f

    return go(phi, {})


def has_unique_binders(phi: Formula) -> bool:
    names = binders(phi)
    return len(names) == len(set(names)) and not (set(names) & free_rvars(phi))


def find_unrestricted(phi: Formula) -> Formula | None:
    """First node (pre-order) outside the grammar canonical programs accept, else None.

    Allowed: Id, Sb, X, p /\\ phi, phi \\/ psi, phi ^ psi, mu X. phi.
    """
    match phi:
        case Rel(IdRel() | Sb()) | RVar():
            return None
        case And(StatePred(), rest):
            return find_unrestricted(rest)
        case Or(a, b) | Chop(a, b):
            return find_unrestricted(a) or find_unrestricted(b)
        case Mu(_, body):
            return find_unrestricted(body)
        case _:
            return phi


def check_restricted(phi: Formula) -> bool:
    return find_unrestricted(phi) is None


# ---------------------------------------------------------------------------
# Variables


def aexp_vars(a: AExp) -> Iterator[str]:
    match a:
        case Var(n):
            yield n.rstrip("'")
        case BinOp(_, l, r):
            yield from aexp_vars(l)
            yield from aexp_vars(r)


def bexp_vars(b: BExp) -> Iterator[str]:
    match b:
        case Cmp(_, l, r):
            yield from aexp_vars(l)
            yield from aexp_vars(r)
        case Not(a):
            yield from bexp_vars(a)
        case BAnd(l, r) | BOr(l, r):
            yield from bexp_vars(l)
            yield from bexp_vars(r)


def stmt_vars(stmt: Statement) -> Iterator[str]:
    match stmt:
        case Assign(x, a):
            yield x
            yield from aexp_vars(a)
        case Seq(a, b) | IfStar(a, b):
            yield from stmt_vars(a)
            yield from stmt_vars(b)
        case If(c, a, b):
            yield from bexp_vars(c)
            yield from stmt_vars(a)
            yield from stmt_vars(b)


def formula_vars(phi: Formula) -> Iterator[str]:
    for f in subformulas(phi):
        match f:
            case StatePred(b) | Rel(NamedRel(_, b)):
                yield from bexp_vars(b)
            case Rel(Sb(x, a)):
                yield x
                yield from aexp_vars(a)
            case Rel(Dec(a)):
                yield from aexp_vars(a)


def program_vars(program: Program) -> set[str]:
    out = set(stmt_vars(program.main))
    for p in program.procs:
        out.update(stmt_vars(p.body))
    return out


# ---------------------------------------------------------------------------
# Printing

_ARITH_PREC = {"+": 1, "-": 1, "*": 2}


def show_aexp(a: AExp) -> str:
    match a:
        case Num(v):
            return str(v)
        case Var(n):
            return n
        case BinOp(op, l, r):
            p = _ARITH_PREC[op]
            ls = show_aexp(l)
            rs = show_aexp(r)
            if isinstance(l, BinOp) and _ARITH_PREC[l.op] < p:
                ls = f"({ls})"
            if isinstance(r, BinOp) and _ARITH_PREC[r.op] <= p:
                rs = f"({rs})"
            return f"{ls} {op} {rs}"
    raise TypeError(a)


def _bprec(b: BExp) -> int:
    return {BOr: 1, BAnd: 2, Not: 3}.get(type(b), 4)


def show_bexp(b: BExp) -> str:
    match b:
        case BoolLit(v):
            return "true" if v else "false"
        case Cmp(op, l, r):
            return f"{show_aexp(l)} {op} {show_aexp(r)}"
        case Not(a):
            inner = show_bexp(a)
            return f"not {inner}" if isinstance(a, BoolLit) else f"not ({inner})"
        case BAnd(l, r) | BOr(l, r):
            p = _bprec(b)
            word = "and" if isinstance(b, BAnd) else "or"
            ls, rs = show_bexp(l), show_bexp(r)
            if _bprec(l) <= p:
                ls = f"({ls})"
            if _bprec(r) < p:
                rs = f"({rs})"
            return f"{ls} {word} {rs}"
    raise TypeError(b)


def show_stmt(stmt: Statement) -> str:
    match stmt:
        case Skip():
            return "skip"
        case Assign(x, a):
            return f"{x} := {show_aexp(a)}"
        case Seq(a, b):
            left = show_stmt(a)
            if isinstance(a, (If, IfStar, Seq)):
                left = f"{{ {left} }}"
            return f"{left}; {show_stmt(b)}"
        case If(c, a, b):
            return f"if {show_bexp(c)} then {show_stmt(a)} else {show_stmt(b)}"
        case IfStar(a, b):
            return f"if * then {show_stmt(a)} else {show_stmt(b)}"
        case Call(p):
            return "diverge" if p == ABORT else f"{p}()"
        case StmtVar(n):
            return n
    raise TypeError(stmt)


def show_program(program: Program) -> str:
    lines = []
    for p in program.procs:
        if p.name == ABORT and p.body == Call(ABORT):
            continue  # re-injected by the parser for `diverge`
        lines.append(f"proc {p.name} {{ {show_stmt(p.body)} }}")
    lines.append(f"main {{ {show_stmt(program.main)} }}")
    return "\n".join(lines) + "\n"


def _fprec(phi: Formula) -> int:
    return {Or: 1, And: 2, Chop: 3}.get(type(phi), 4)


def show_atom(atom: RelationAtom) -> str:
    match atom:
        case IdRel():
            return "Id"
        case Sb(x, a):
            return f"Sb[{x}:={show_aexp(a)}]"
        case Dec(a):
            return f"Dec({show_aexp(a)})"
        case NamedRel(name, body):
            return f"Act[{name}: {show_bexp(body)}]"
    raise TypeError(atom)


def show_formula(phi: Formula) -> str:
    match phi:
        case StatePred(b):
            return f"{{{show_bexp(b)}}}"
        case Rel(atom):
            return show_atom(atom)
        case RVar(n):
            return n
        case Mu(x, body):
            inner = show_formula(body)
            return f"mu {x}. {inner}" if _fprec(body) == 4 else f"mu {x}. ({inner})"
        case And(l, r) | Or(l, r) | Chop(l, r):
            p = _fprec(phi)
            sym = {And: "/\\", Or: "\\/", Chop: "^"}[type(phi)]
            ls, rs = show_formula(l), show_formula(r)
            # conjunctions under a disjunction are bracketed for readability
            if _fprec(l) <= p or (p == 1 and isinstance(l, And)):
                ls = f"({ls})"
            if _fprec(r) < p or (p == 1 and isinstance(r, And)):
                rs = f"({rs})"
            return f"{ls} {sym} {rs}"
    raise TypeError(phi)
