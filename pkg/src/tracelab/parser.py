"""Recursive-descent parsers for `.rec` programs and `.tfl` formulas."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, WellFormednessError
from .syntax import (
    ABORT,
    AExp,
    And,
    Assign,
    BAnd,
    BExp,
    BinOp,
    BOr,
    BoolLit,
    Call,
    Chop,
    Cmp,
    Dec,
    Formula,
    ID,
    If,
    IfStar,
    Mu,
    NamedRel,
    Not,
    Num,
    Or,
    Proc,
    Program,
    Rel,
    RVar,
    Sb,
    Seq,
    Skip,
    Statement,
    StatePred,
    StmtVar,
    Var,
    calls,
    free_rvars,
    svars,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<op>:=|<=|>=|!=|\\/|/\\|[-+*;{}()\[\]=<>^.:,])
    """,
    re.VERBOSE,
)

PROGRAM_KEYWORDS = {"skip", "if", "then", "else", "proc", "main", "while", "do",
                    "diverge", "true", "false", "not", "and", "or"}
FORMULA_KEYWORDS = {"mu", "Id", "Sb", "Dec", "Act", "true", "false", "not", "and", "or"}
CMP_TOKENS = ("=", "!=", "<", "<=", ">", ">=")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, keywords: set[str]):
        self.toks = tokenize(text)
        self.i = 0
        self.keywords = keywords

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident")

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "ident" or t.text in self.keywords:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.advance()
        return t.text

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- expressions -------------------------------------------------------
    def aexp(self, primes: bool = False) -> AExp:
        left = self.term(primes)
        while self.at("+") or self.at("-"):
            op = self.advance().text
            left = BinOp(op, left, self.term(primes))
        return left

    def term(self, primes: bool) -> AExp:
        left = self.factor(primes)
        while self.at("*"):
            self.advance()
            left = BinOp("*", left, self.factor(primes))
        return left

    def factor(self, primes: bool) -> AExp:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(int(t.text))
        if self.accept("-"):
            inner = self.factor(primes)
            if isinstance(inner, Num):
                return Num(-inner.value)
            return BinOp("-", Num(0), inner)
        if self.accept("("):
            inner = self.aexp(primes)
            self.expect(")")
            return inner
        name = self.ident("expression")
        if name.endswith("'") and not primes:
            raise self.error("primed variables are only allowed inside Act[...]", t)
        return Var(name)

    def bexp(self, primes: bool = False) -> BExp:
        left = self.band(primes)
        if self.accept("or"):
            return BOr(left, self.bexp(primes))
        return left

    def band(self, primes: bool) -> BExp:
        left = self.bnot(primes)
        if self.accept("and"):
            return BAnd(left, self.band(primes))
        return left

    def bnot(self, primes: bool) -> BExp:
        if self.accept("not"):
            return Not(self.bnot(primes))
        return self.batom(primes)

    def batom(self, primes: bool) -> BExp:
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.at("("):
            # could be a parenthesised boolean or the start of an arithmetic operand
            save = self.i
            try:
                self.advance()
                inner = self.bexp(primes)
                self.expect(")")
                if self.tok.text not in CMP_TOKENS + ("+", "-", "*"):
                    return inner
            except ParseError:
                pass
            self.i = save
        left = self.aexp(primes)
        if self.tok.text not in CMP_TOKENS:
            raise self.error("expected comparison operator")
        op = self.advance().text
        return Cmp(op, left, self.aexp(primes))


class _ProgramParser(_Parser):
    def __init__(self, text: str, allow_svars: bool):
        super().__init__(text, PROGRAM_KEYWORDS)
        self.allow_svars = allow_svars
        self.loops: list[tuple[str, BExp, Statement]] = []

    def seq(self) -> Statement:
        first = self.simple()
        if self.accept(";"):
            return Seq(first, self.seq())
        return first

    def simple(self) -> Statement:
        t = self.tok
        if self.accept("skip"):
            return Skip()
        if self.accept("diverge"):
            return Call(ABORT)
        if self.accept("{"):
            body = self.seq()
            self.expect("}")
            return body
        if self.accept("if"):
            if self.accept("*"):
                self.expect("then")
                left = self.seq()
                self.expect("else")
                return IfStar(left, self.seq())
            cond = self.bexp()
            self.expect("then")
            then = self.seq()
            self.expect("else")
            return If(cond, then, self.seq())
        if self.accept("while"):
            cond = self.bexp()
            self.expect("do")
            body = self.seq()
            placeholder = f"\0loop{len(self.loops)}"
            self.loops.append((placeholder, cond, body))
            return Call(placeholder)
        name = self.ident("statement")
        if name.endswith("'"):
            raise self.error("primed names are not allowed in programs", t)
        if self.accept(":="):
            return Assign(name, self.aexp())
        if self.accept("("):
            self.expect(")")
            if name == ABORT:
                raise ParseError(f"{ABORT!r} is reserved; use 'diverge'", t.line, t.col)
            return Call(name)
        if self.allow_svars:
            return StmtVar(name)
        raise ParseError(f"statement variable {name!r} is not allowed in source programs", t.line, t.col)

    def program(self) -> Program:
        procs: list[Proc] = []
        seen: set[str] = set()
        while self.at("proc"):
            self.advance()
            nt = self.tok
            name = self.ident("procedure name")
            if name == ABORT:
                raise WellFormednessError(f"{nt.line}:{nt.col}: procedure name {ABORT!r} is reserved")
            if name in seen:
                raise WellFormednessError(f"{nt.line}:{nt.col}: duplicate procedure {name!r}")
            seen.add(name)
            self.expect("{")
            body = self.seq()
            self.expect("}")
            procs.append(Proc(name, body))
        self.expect("main")
        self.expect("{")
        main = self.seq()
        self.expect("}")
        self.expect_eof()
        return _finish_program(main, procs, self.loops)


def _rename_calls(stmt: Statement, mapping: dict[str, str]) -> Statement:
    match stmt:
        case Call(p) if p in mapping:
            return Call(mapping[p])
        case Seq(a, b):
            return Seq(_rename_calls(a, mapping), _rename_calls(b, mapping))
        case If(c, a, b):
            return If(c, _rename_calls(a, mapping), _rename_calls(b, mapping))
        case IfStar(a, b):
            return IfStar(_rename_calls(a, mapping), _rename_calls(b, mapping))
    return stmt


def _finish_program(main: Statement, procs: list[Proc], loops) -> Program:
    taken = {p.name for p in procs}
    mapping = {}
    n = 1
    for placeholder, _, _ in loops:
        while f"while_{n}" in taken:
            n += 1
        mapping[placeholder] = f"while_{n}"
        taken.add(f"while_{n}")
    for placeholder, cond, body in loops:
        name = mapping[placeholder]
        procs.append(Proc(name, If(cond, Seq(body, Call(name)), Skip())))
    procs = [Proc(p.name, _rename_calls(p.body, mapping)) for p in procs]
    main = _rename_calls(main, mapping)
    program = Program(main, tuple(procs), loops=tuple(mapping[p] for p, _, _ in loops))
    if any(p == ABORT for p in _all_calls(program)):
        program = Program(program.main, program.procs + (Proc(ABORT, Call(ABORT)),), program.loops)
    check_well_formed(program)
    return program


def _all_calls(program: Program):
    yield from calls(program.main)
    for p in program.procs:
        yield from calls(p.body)


def check_well_formed(program: Program) -> None:
    names = [p.name for p in program.procs]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise WellFormednessError(f"duplicate procedure {sorted(dupes)[0]!r}")
    declared = set(names)
    for where, stmt in [("main", program.main)] + [(p.name, p.body) for p in program.procs]:
        for c in calls(stmt):
            if c not in declared:
                raise WellFormednessError(f"call to undeclared procedure {c!r} in {where}")
        for y in svars(stmt):
            raise WellFormednessError(f"statement variable {y!r} in {where}")


def parse_program(text: str) -> Program:
    return _ProgramParser(text, allow_svars=False).program()


def parse_statement(text: str, allow_svars: bool = True) -> Statement:
    """Parse a bare statement, as used for proof subjects. Loops are not supported here."""
    p = _ProgramParser(text, allow_svars=allow_svars)
    stmt = p.seq()
    p.expect_eof()
    if p.loops:
        raise ParseError("while loops need a program context", 1, 1)
    return stmt


class _FormulaParser(_Parser):
    def __init__(self, text: str):
        super().__init__(text, FORMULA_KEYWORDS)

    def formula(self) -> Formula:
        left = self.conj()
        if self.accept("\\/"):
            return Or(left, self.formula())
        return left

    def conj(self) -> Formula:
        left = self.chop()
        if self.accept("/\\"):
            return And(left, self.conj())
        return left

    def chop(self) -> Formula:
        left = self.unary()
        if self.accept("^"):
            return Chop(left, self.chop())
        return left

    def unary(self) -> Formula:
        if self.accept("mu"):
            var = self.ident("recursion variable")
            self.expect(".")
            return Mu(var, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        if self.accept("Id"):
            return ID
        if self.accept("Sb"):
            self.expect("[")
            var = self.ident("variable")
            self.expect(":=")
            expr = self.aexp()
            self.expect("]")
            return Rel(Sb(var, expr))
        if self.accept("Dec"):
            self.expect("(")
            expr = self.aexp()
            self.expect(")")
            return Rel(Dec(expr))
        if self.accept("Act"):
            self.expect("[")
            name = self.ident("action name")
            self.expect(":")
            body = self.bexp(primes=True)
            self.expect("]")
            return Rel(NamedRel(name, body))
        if self.accept("{"):
            cond = self.bexp()
            self.expect("}")
            return StatePred(cond)
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            return inner
        return RVar(self.ident("formula"))


def parse_formula(text: str, closed: bool = True) -> Formula:
    p = _FormulaParser(text)
    phi = p.formula()
    p.expect_eof()
    if closed:
        free = free_rvars(phi)
        if free:
            raise WellFormednessError(f"unbound recursion variable {sorted(free)[0]!r}")
    return phi
