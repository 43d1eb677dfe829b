"""Sequent calculus for judgments ``S : phi``: proof objects, checker, generator.

Entailment side conditions (the ``Cons`` rule) are discharged by a bounded
semantic oracle: the premise formula is enumerated over a finite initial-state
corpus and length budget, and every trace is membership-checked against the
conclusion.  Accepted certificates are evidence over those bounds, not proofs.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .denotational import Membership, eval_formula_enum, eval_stm
from .errors import RestrictionError, TracelabError, WellFormednessError
from .parser import parse_formula, parse_statement
from .syntax import (
    ID, Call, Chop, Formula, If, IfStar, Mu, Not, Or, Seq, Skip, Statement, StatePred, StmtVar,
    Assign, Rel, Sb, And, find_unrestricted, free_rvars, negate, show_formula, show_stmt,
    substitute_calls, svar_for, unfold,
)
from .stf import stf, stf_hat
from .traces import Bounds, Trace

RULE_ARITY = {
    "Skip": 0, "Assign": 0, "Axiom": 0,
    "Unfold": 1, "Cons": 1, "OrIntro": 1, "Call": 1,
    "Seq": 2, "If": 2, "IfStar": 2, "While": 2,
}


@dataclass(frozen=True)
class Judgment:
    subject: Statement
    formula: Formula

    def __str__(self) -> str:
        return f"{show_stmt(self.subject)} : {show_formula(self.formula)}"


@dataclass(frozen=True)
class Sequent:
    antecedent: frozenset[Judgment]
    succedent: Judgment

    def __str__(self) -> str:
        gamma = ", ".join(sorted(str(j) for j in self.antecedent))
        return f"{gamma} |- {self.succedent}" if gamma else f"|- {self.succedent}"


@dataclass(frozen=True)
class OracleCertificate:
    premise: Formula
    conclusion: Formula
    bounds: Bounds
    accepted: bool
    counterexample: Trace | None = None
    mode: str = "bounded"
    checked: int = 0


@dataclass(frozen=True)
class ProofTree:
    rule: str
    conclusion: Sequent
    premises: tuple["ProofTree", ...] = ()
    data: Mapping[str, Any] = field(default_factory=dict, hash=False, compare=False)

    def nodes(self, path: tuple[int, ...] = ()):
        yield path, self
        for i, p in enumerate(self.premises):
            yield from p.nodes(path + (i,))


def count_rule(tree: ProofTree, rule: str) -> int:
    return sum(1 for _, node in tree.nodes() if node.rule == rule)


def certificates(tree: ProofTree) -> list[OracleCertificate]:
    return [n.data["certificate"] for _, n in tree.nodes() if n.rule == "Cons"]


# ---------------------------------------------------------------------------
# Oracles


@functools.lru_cache(maxsize=4096)
def entails_bounded(premise: Formula, conclusion: Formula, bounds: Bounds) -> OracleCertificate:
    """Bounded check of ``premise |= conclusion``.

    The premise must be enumerable (closed and in the restricted grammar); the
    conclusion may use the full grammar.
    """
    for side in (premise, conclusion):
        if free_rvars(side):
            raise WellFormednessError(f"formula is not closed: {show_formula(side)}")
    bad = find_unrestricted(premise)
    if bad is not None:
        raise RestrictionError(f"premise is not enumerable at {show_formula(bad)}", bad)
    member = Membership(conclusion, bounds.variables)
    traces = sorted(eval_formula_enum(premise, bounds))
    for t in traces:
        if not member(t):
            return OracleCertificate(premise, conclusion, bounds, False, t, checked=len(traces))
    return OracleCertificate(premise, conclusion, bounds, True, checked=len(traces))


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    counterexample: Trace | None
    bounds: Bounds
    mode: str = "bounded"
    checked: int = 0


def valid_judgment_bounded(stmt: Statement, table: Mapping[str, Statement], phi: Formula,
                           bounds: Bounds) -> Verdict:
    if free_rvars(phi):
        raise WellFormednessError(f"formula is not closed: {show_formula(phi)}")
    member = Membership(phi, bounds.variables)
    traces = sorted(eval_stm(stmt, table, bounds))
    for t in traces:
        if not member(t):
            return Verdict(False, t, bounds, checked=len(traces))
    return Verdict(True, None, bounds, checked=len(traces))


# ---------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class NodeError:
    path: tuple[int, ...]
    rule: str
    message: str

    def __str__(self) -> str:
        where = ".".join(map(str, self.path)) or "root"
        return f"[{where}] {self.rule}: {self.message}"


@dataclass
class ProofCheck:
    accepted: bool
    errors: list[NodeError]
    certificates: list[OracleCertificate]

    @property
    def fully_checked(self) -> bool:
        return self.accepted and all(c.accepted for c in self.certificates)


def _svar_procs(gamma, table) -> set[str]:
    out = set()
    for j in gamma:
        if isinstance(j.subject, StmtVar) and j.subject.name.startswith("Y_"):
            name = j.subject.name[2:]
            if name in table:
                out.add(name)
    return out


def loop_shape(body: Statement, proc: str):
    """``(b, S)`` when ``body`` is ``if b then S; proc() else skip``, else None."""
    match body:
        case If(b, Seq(s, Call(m)), Skip()) if m == proc:
            return b, s
    return None


class _Checker:
    def __init__(self, table: Mapping[str, Statement], replay: bool):
        self.table = table
        self.replay = replay
        self.errors: list[NodeError] = []
        self.certs: list[OracleCertificate] = []

    def fail(self, path, rule, message):
        self.errors.append(NodeError(path, rule, message))

    def expect(self, path, rule, premise: ProofTree, gamma, subject, formula, which="premise"):
        want = Sequent(gamma, Judgment(subject, formula))
        got = premise.conclusion
        if got == want:
            return
        if got.antecedent != gamma:
            self.fail(path, rule, f"{which} antecedent differs from the expected one")
        elif got.succedent.subject != subject:
            self.fail(path, rule, f"{which} subject: expected {show_stmt(subject)}, "
                                  f"found {show_stmt(got.succedent.subject)}")
        else:
            self.fail(path, rule, f"{which} formula: expected {show_formula(formula)}, "
                                  f"found {show_formula(got.succedent.formula)}")

    def check(self, tree: ProofTree, path=()):
        rule = tree.rule
        if rule not in RULE_ARITY:
            self.fail(path, rule, "unknown rule")
            return
        if len(tree.premises) != RULE_ARITY[rule]:
            self.fail(path, rule, f"expected {RULE_ARITY[rule]} premises, found {len(tree.premises)}")
            return
        gamma = tree.conclusion.antecedent
        subject = tree.conclusion.succedent.subject
        phi = tree.conclusion.succedent.formula
        ok = True
        for j in gamma:
            if not isinstance(j.subject, StmtVar):
                self.fail(path, rule, f"antecedent judgment {j} is not about a statement variable")
                ok = False
            if free_rvars(j.formula):
                self.fail(path, rule, f"antecedent formula {show_formula(j.formula)} is not closed")
                ok = False
        if free_rvars(phi):
            self.fail(path, rule, f"formula {show_formula(phi)} is not closed")
            ok = False
        if ok:
            getattr(self, f"rule_{rule}")(tree, path, gamma, subject, phi)
        for i, p in enumerate(tree.premises):
            self.check(p, path + (i,))

    def rule_Skip(self, tree, path, gamma, subject, phi):
        if subject != Skip():
            self.fail(path, "Skip", f"subject must be skip, found {show_stmt(subject)}")
        elif phi != ID:
            self.fail(path, "Skip", f"formula must be Id, found {show_formula(phi)}")

    def rule_Assign(self, tree, path, gamma, subject, phi):
        if not isinstance(subject, Assign):
            self.fail(path, "Assign", f"subject must be an assignment, found {show_stmt(subject)}")
        elif phi != Rel(Sb(subject.var, subject.expr)):
            self.fail(path, "Assign", f"formula must be Sb[{subject.var}:=...] matching the "
                                      f"assignment, found {show_formula(phi)}")

    def rule_Seq(self, tree, path, gamma, subject, phi):
        if not isinstance(subject, Seq):
            self.fail(path, "Seq", f"subject must be a sequence, found {show_stmt(subject)}")
        elif not isinstance(phi, Chop):
            self.fail(path, "Seq", f"formula must be a chop, found {show_formula(phi)}")
        else:
            self.expect(path, "Seq", tree.premises[0], gamma, subject.first, phi.left, "left premise")
            self.expect(path, "Seq", tree.premises[1], gamma, subject.second, phi.right, "right premise")

    def rule_If(self, tree, path, gamma, subject, phi):
        if not isinstance(subject, If):
            self.fail(path, "If", f"subject must be a conditional, found {show_stmt(subject)}")
            return
        b = subject.cond
        first = tree.premises[0].conclusion.succedent.formula
        neg = StatePred(negate(b))
        if first == Or(StatePred(Not(b)), phi):
            neg = StatePred(Not(b))
        self.expect(path, "If", tree.premises[0], gamma, Seq(Skip(), subject.then), Or(neg, phi),
                    "then premise")
        self.expect(path, "If", tree.premises[1], gamma, Seq(Skip(), subject.orelse),
                    Or(StatePred(b), phi), "else premise")

    def rule_IfStar(self, tree, path, gamma, subject, phi):
        if not isinstance(subject, IfStar):
            self.fail(path, "IfStar", f"subject must be a choice, found {show_stmt(subject)}")
            return
        self.expect(path, "IfStar", tree.premises[0], gamma, Seq(Skip(), subject.left), phi, "left premise")
        self.expect(path, "IfStar", tree.premises[1], gamma, Seq(Skip(), subject.right), phi, "right premise")

    def rule_Unfold(self, tree, path, gamma, subject, phi):
        if not isinstance(phi, Mu):
            self.fail(path, "Unfold", f"formula must be a fixed point, found {show_formula(phi)}")
            return
        self.expect(path, "Unfold", tree.premises[0], gamma, subject, unfold(phi))

    def rule_Cons(self, tree, path, gamma, subject, phi):
        premise = tree.premises[0].conclusion
        if premise.antecedent != gamma or premise.succedent.subject != subject:
            self.fail(path, "Cons", "premise must share antecedent and subject with the conclusion")
            return
        weaker = premise.succedent.formula
        cert = tree.data.get("certificate")
        if not isinstance(cert, OracleCertificate):
            self.fail(path, "Cons", "missing oracle certificate")
            return
        if cert.premise != weaker or cert.conclusion != phi:
            self.fail(path, "Cons", "certificate claim does not match the node "
                                    f"({show_formula(cert.premise)} |= {show_formula(cert.conclusion)})")
            return
        if not self.replay:
            try:
                cert = entails_bounded(cert.premise, cert.conclusion, cert.bounds)
            except TracelabError as exc:
                self.fail(path, "Cons", f"oracle could not run: {exc}")
                return
        self.certs.append(cert)
        if not cert.accepted:
            self.fail(path, "Cons", "oracle refuted the entailment")

    def _call_common(self, path, rule, gamma, subject, phi):
        if not isinstance(subject, Call):
            self.fail(path, rule, f"subject must be a call, found {show_stmt(subject)}")
            return None
        m = subject.proc
        if m not in self.table:
            self.fail(path, rule, f"procedure {m!r} is not declared")
            return None
        y = StmtVar(svar_for(m))
        if any(j.subject == y for j in gamma):
            self.fail(path, rule, f"side condition violated: {y.name} already in the antecedent")
            return None
        if not (isinstance(phi, Chop) and phi.left == ID):
            self.fail(path, rule, f"formula must have the shape Id ^ phi_m, found {show_formula(phi)}")
            return None
        procs = _svar_procs(gamma, self.table) | {m}
        return m, y, phi.right, procs

    def rule_Call(self, tree, path, gamma, subject, phi):
        got = self._call_common(path, "Call", gamma, subject, phi)
        if got is None:
            return
        m, y, phi_m, procs = got
        body = substitute_calls(self.table[m], procs)
        self.expect(path, "Call", tree.premises[0], gamma | {Judgment(y, phi_m)}, body, phi_m)

    def rule_While(self, tree, path, gamma, subject, phi):
        got = self._call_common(path, "While", gamma, subject, phi)
        if got is None:
            return
        m, y, phi_m, procs = got
        shape = loop_shape(self.table[m], m)
        if shape is None:
            self.fail(path, "While", f"procedure {m!r} is not a loop")
            return
        b, s = shape
        self.expect(path, "While", tree.premises[0], gamma, Seq(Skip(), Skip()),
                    Or(StatePred(b), phi_m), "exit premise")
        body = Seq(Skip(), substitute_calls(Seq(s, Call(m)), procs))
        self.expect(path, "While", tree.premises[1], gamma | {Judgment(y, phi_m)}, body,
                    Or(StatePred(negate(b)), phi_m), "body premise")

    def rule_Axiom(self, tree, path, gamma, subject, phi):
        if tree.conclusion.succedent not in gamma:
            self.fail(path, "Axiom", f"{tree.conclusion.succedent} is not in the antecedent")

    def rule_OrIntro(self, tree, path, gamma, subject, phi):
        if not isinstance(phi, Or):
            self.fail(path, "OrIntro", f"formula must be a disjunction, found {show_formula(phi)}")
            return
        side = tree.data.get("side")
        if side not in (0, 1):
            self.fail(path, "OrIntro", "data must name side 0 or 1")
            return
        self.expect(path, "OrIntro", tree.premises[0], gamma, subject, (phi.left, phi.right)[side])


def check_proof(tree: ProofTree, table: Mapping[str, Statement], replay: bool = False) -> ProofCheck:
    """Rule-by-rule check; ``Cons`` certificates are re-run unless ``replay`` is set."""
    checker = _Checker(table, replay)
    checker.check(tree)
    return ProofCheck(not checker.errors, checker.errors, checker.certs)


# ---------------------------------------------------------------------------
# Generation


class ProofFailure(TracelabError):
    def __init__(self, message: str, sequent: Sequent, certificate: OracleCertificate):
        super().__init__(message)
        self.sequent = sequent
        self.certificate = certificate


class _Generator:
    def __init__(self, table, bounds, loops):
        self.table = table
        self.bounds = bounds
        self.loops = set(loops)

    def cons(self, gamma, subject, weaker: Formula, target: Formula, sub: ProofTree) -> ProofTree:
        cert = entails_bounded(weaker, target, self.bounds)
        concl = Sequent(gamma, Judgment(subject, target))
        if not cert.accepted:
            raise ProofFailure(f"oracle refuted {show_formula(weaker)} |= {show_formula(target)}",
                               concl, cert)
        return ProofTree("Cons", concl, (sub,), {"certificate": cert})

    def leaf_skip(self, gamma) -> ProofTree:
        return ProofTree("Skip", Sequent(gamma, Judgment(Skip(), ID)))

    def gen(self, gamma, stmt: Statement, psi: Formula) -> ProofTree:
        concl = Sequent(gamma, Judgment(stmt, psi))
        match stmt, psi:
            case Skip(), _ if psi == ID:
                return ProofTree("Skip", concl)
            case Assign(x, a), Rel(Sb(x2, a2)) if (x, a) == (x2, a2):
                return ProofTree("Assign", concl)
            case Seq(s1, s2), Chop(p1, p2):
                return ProofTree("Seq", concl, (self.gen(gamma, s1, p1), self.gen(gamma, s2, p2)))
            case If(b, s1, s2), Or(And(StatePred(), Chop(_, p1)), And(StatePred(), Chop(_, p2))):
                branches = []
                for s, p, guard in ((s1, p1, negate(b)), (s2, p2, b)):
                    subj = Seq(Skip(), s)
                    inner = ProofTree("Seq", Sequent(gamma, Judgment(subj, Chop(ID, p))),
                                      (self.leaf_skip(gamma), self.gen(gamma, s, p)))
                    branches.append(self.cons(gamma, subj, Chop(ID, p), Or(StatePred(guard), psi), inner))
                return ProofTree("If", concl, tuple(branches))
            case IfStar(s1, s2), Or(Chop(_, p1), Chop(_, p2)):
                branches = []
                for side, (s, p) in enumerate(((s1, p1), (s2, p2))):
                    subj = Seq(Skip(), s)
                    inner = ProofTree("Seq", Sequent(gamma, Judgment(subj, Chop(ID, p))),
                                      (self.leaf_skip(gamma), self.gen(gamma, s, p)))
                    branches.append(ProofTree("OrIntro", Sequent(gamma, Judgment(subj, psi)), (inner,),
                                              {"side": side}))
                return ProofTree("IfStar", concl, tuple(branches))
            case StmtVar(y), _:
                assumed = [j for j in gamma if j.subject == stmt]
                if not assumed:
                    raise WellFormednessError(f"statement variable {y!r} has no assumption")
                axiom = ProofTree("Axiom", Sequent(gamma, assumed[0]))
                if assumed[0].formula == psi:
                    return axiom
                return self.cons(gamma, stmt, assumed[0].formula, psi, axiom)
            case Call(m), _:
                target = stf(stmt, self.table)
                node = self.call(gamma, m, target.right)
                if psi == target:
                    return node
                return self.cons(gamma, stmt, target, psi, node)
        raise WellFormednessError(
            f"formula {show_formula(psi)} does not follow the shape of {show_stmt(stmt)}")

    def call(self, gamma, m: str, phi_m: Formula) -> ProofTree:
        y = StmtVar(svar_for(m))
        if any(j.subject == y for j in gamma):
            raise WellFormednessError(f"call to {m!r} while {y.name} is already assumed")
        gamma2 = gamma | {Judgment(y, phi_m)}
        procs = _svar_procs(gamma, self.table) | {m}
        concl = Sequent(gamma, Judgment(Call(m), Chop(ID, phi_m)))
        data = {"proc": m, "substitution": {p: svar_for(p) for p in sorted(procs)}}
        shape = loop_shape(self.table[m], m)
        if m in self.loops and shape is not None:
            return self.while_(gamma, gamma2, m, phi_m, shape, procs, concl, data)
        body = substitute_calls(self.table[m], procs)
        inner = self.gen(gamma2, body, unfold(phi_m))
        unfold_node = ProofTree("Unfold", Sequent(gamma2, Judgment(body, phi_m)), (inner,))
        return ProofTree("Call", concl, (unfold_node,), data)

    def while_(self, gamma, gamma2, m, phi_m, shape, procs, concl, data) -> ProofTree:
        b, s = shape
        exit_subj = Seq(Skip(), Skip())
        exit_inner = ProofTree("Seq", Sequent(gamma, Judgment(exit_subj, Chop(ID, ID))),
                               (self.leaf_skip(gamma), self.leaf_skip(gamma)))
        exit_node = self.cons(gamma, exit_subj, Chop(ID, ID), Or(StatePred(b), phi_m), exit_inner)
        # the guarded disjunct of the unfolded loop formula is  b /\ Id ^ (stf(S) ^ Id ^ phi_m)
        unfolded = unfold(phi_m)
        iteration = unfolded.left.right.right
        loop_body = substitute_calls(Seq(s, Call(m)), procs)
        body_subj = Seq(Skip(), loop_body)
        body_inner = ProofTree("Seq", Sequent(gamma2, Judgment(body_subj, Chop(ID, iteration))),
                               (self.leaf_skip(gamma2), self.gen(gamma2, loop_body, iteration)))
        body_node = self.cons(gamma2, body_subj, Chop(ID, iteration),
                              Or(StatePred(negate(b)), phi_m), body_inner)
        return ProofTree("While", concl, (exit_node, body_node), data)


def prove_stf(stmt: Statement, table: Mapping[str, Statement], bounds: Bounds,
              loops: Sequence[str] = ()) -> ProofTree:
    """Canonical proof of ``|- stmt : stf(stmt)``.

    Procedures listed in ``loops`` (desugared ``while`` loops) are handled by the
    derived loop rule instead of ``Call``.
    """
    return _Generator(table, bounds, loops).gen(frozenset(), stmt, stf(stmt, table))


def prove_judgment(stmt: Statement, table: Mapping[str, Statement], phi: Formula, bounds: Bounds,
                   loops: Sequence[str] = ()) -> ProofTree:
    """Proof of ``|- stmt : phi`` by one consequence step on top of the canonical proof."""
    gen = _Generator(table, bounds, loops)
    target = stf(stmt, table)
    tree = gen.gen(frozenset(), stmt, target)
    if phi == target:
        return tree
    return gen.cons(frozenset(), stmt, target, phi, tree)


# ---------------------------------------------------------------------------
# Serialization


def _judgment_json(j: Judgment) -> list[str]:
    return [show_stmt(j.subject), show_formula(j.formula)]


def _trace_json(t):
    return None if t is None else [list(s) for s in t]


def certificate_to_json(c: OracleCertificate) -> dict:
    return {
        "claim": [show_formula(c.premise), show_formula(c.conclusion)],
        "mode": c.mode,
        "bounds": c.bounds.to_json(),
        "accepted": c.accepted,
        "counterexample": _trace_json(c.counterexample),
        "checked": c.checked,
    }


def certificate_from_json(d: Mapping) -> OracleCertificate:
    cx = d.get("counterexample")
    return OracleCertificate(
        parse_formula(d["claim"][0]), parse_formula(d["claim"][1]), Bounds.from_json(d["bounds"]),
        bool(d["accepted"]), None if cx is None else tuple(tuple(s) for s in cx),
        d.get("mode", "bounded"), int(d.get("checked", 0)))


def tree_to_json(tree: ProofTree) -> dict:
    data = {}
    for k, v in tree.data.items():
        data[k] = certificate_to_json(v) if isinstance(v, OracleCertificate) else v
    return {
        "rule": tree.rule,
        "antecedent": sorted(_judgment_json(j) for j in tree.conclusion.antecedent),
        "subject": show_stmt(tree.conclusion.succedent.subject),
        "formula": show_formula(tree.conclusion.succedent.formula),
        "data": data,
        "premises": [tree_to_json(p) for p in tree.premises],
    }


def tree_from_json(d: Mapping) -> ProofTree:
    gamma = frozenset(Judgment(parse_statement(s), parse_formula(f, closed=False))
                      for s, f in d.get("antecedent", []))
    concl = Sequent(gamma, Judgment(parse_statement(d["subject"]),
                                    parse_formula(d["formula"], closed=False)))
    data = dict(d.get("data", {}))
    if "certificate" in data:
        data["certificate"] = certificate_from_json(data["certificate"])
    return ProofTree(d["rule"], concl, tuple(tree_from_json(p) for p in d.get("premises", [])), data)
