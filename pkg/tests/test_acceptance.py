"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run directly with ``python3 tests/test_acceptance.py`` or as part of pytest; the
lines are repeated in the terminal summary.
"""
import functools
import random
import sys

import pytest

from conftest import ACCEPTANCE_LINES, load_formula, load_program
from generators import mutate_proof, random_mu, random_restricted
from oracle import Oracle, random_trace
from tracelab import parse_formula, show_formula, show_program
from tracelab.calculus import (
    ProofFailure, certificates, check_proof, count_rule, entails_bounded, prove_judgment,
    prove_stf, valid_judgment_bounded,
)
from tracelab.canon import (
    STUTTER_FACTOR, canon, galois_check, stutter_equal_bounded, stutter_view_formula,
    stutter_view_stm,
)
from tracelab.denotational import Membership, eval_formula_enum, eval_stm
from tracelab.laws import check_laws
from tracelab.sos import run_traces
from tracelab.stf import stf
from tracelab.syntax import ID, And, Mu, Or, StatePred, subformulas, unfold
from tracelab.traces import Bounds, normalize_set

CORPUS = ["decrement.rec", "even.rec", "down.rec", "down_from_two.rec", "walk.rec", "coin.rec",
          "countdown.rec"]
CORPUS_BOUNDS = Bounds.grid({"x": range(-2, 7), "y": [0]}, 40)

EVEN_STF = ("Id ^ mu X_even. (({x = 0} /\\ Id ^ Sb[y:=1]) \\/ ({x != 0} /\\ Id ^ Sb[x:=x - 1] ^ Id ^ "
            "mu X_odd. (({x = 0} /\\ Id ^ Sb[y:=0]) \\/ ({x != 0} /\\ Id ^ Sb[x:=x - 1] ^ Id ^ X_even))))")
DOWN_STF = "Id ^ mu X_down. (({x > 0} /\\ Id ^ Sb[x:=x - 2] ^ Id ^ X_down) \\/ ({x <= 0} /\\ Id ^ Id))"
COUNT_PROGRAM = ["proc m_X { if * then skip else y := y + 1; m_X() }", "main { y := 0; m_X() }"]

_notes: dict[int, str] = {}


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                _record(number, title, False, f"{type(exc).__name__}: {exc}".splitlines()[0])
                raise
            _record(number, title, True, _notes.get(number, ""))
        return run
    return wrap


def _record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {number:>2}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def _squash(text):
    return "".join(text.split())


@criterion(1, "SOS and denotational semantics agree")
def test_semantics_agreement():
    total = 0
    for name in CORPUS:
        prog = load_program(name)
        sos = run_traces(prog.main, prog.table, CORPUS_BOUNDS)
        denot = eval_stm(prog.main, prog.table, CORPUS_BOUNDS)
        assert sos == denot, name
        reference = Oracle(CORPUS_BOUNDS.variables).program_traces(
            prog.main, prog.table, CORPUS_BOUNDS.initial_states, CORPUS_BOUNDS.max_len)
        assert sos == reference, name
        total += len(sos)
    prog = load_program("down_from_two.rec")
    golden = run_traces(prog.main, prog.table, Bounds(("x",), ((7,),), 10))
    assert golden == {tuple((v,) for v in (7, 2, 2, 2, 0, 0, 0, 0))}
    _notes[1] = f"{len(CORPUS)} programs, {total} traces, golden run reproduced"


@criterion(2, "stf characterises trace semantics")
def test_stf_characterisation():
    for name in CORPUS:
        prog = load_program(name)
        phi = stf(prog.main, prog.table)
        assert eval_formula_enum(phi, CORPUS_BOUNDS) == eval_stm(prog.main, prog.table, CORPUS_BOUNDS), name
    even, down = load_program("even.rec"), load_program("down.rec")
    assert _squash(show_formula(stf(even.main, even.table))) == _squash(EVEN_STF)
    assert _squash(show_formula(stf(down.main, down.table))) == _squash(DOWN_STF)
    _notes[2] = f"{len(CORPUS)} programs, both golden formulas match"


@criterion(3, "fixed-point unfolding preserves semantics")
def test_fixed_point_unfolding():
    rng = random.Random(20240601)
    bounds = Bounds(("x",), ((0,), (1,), (2,)), 8)
    checked = 0
    for _ in range(200):
        phi = random_mu(rng, 5)
        assert isinstance(phi, Mu)
        assert eval_formula_enum(unfold(phi), bounds) == eval_formula_enum(phi, bounds), show_formula(phi)
        a, b = Membership(phi, ("x",)), Membership(unfold(phi), ("x",))
        for _ in range(50):
            t = random_trace(rng, max_len=7)
            assert a(t) == b(t), (show_formula(phi), t)
            checked += 1
    _notes[3] = f"200 formulas, {checked} membership checks"


@criterion(4, "calculus soundness end to end, mutations rejected")
def test_calculus_soundness():
    proofs = []
    for name in CORPUS:
        prog = load_program(name)
        for loops in {(), prog.loops}:
            tree = prove_stf(prog.main, prog.table, CORPUS_BOUNDS, loops)
            check = check_proof(tree, prog.table)
            assert check.fully_checked, (name, [str(e) for e in check.errors])
            phi = tree.conclusion.succedent.formula
            assert valid_judgment_bounded(prog.main, prog.table, phi, CORPUS_BOUNDS).accepted, name
            proofs.append((prog, tree))
    rng = random.Random(11)
    caught = 0
    for _ in range(50):
        prog, tree = rng.choice(proofs)
        path, mutant = mutate_proof(rng, tree)
        rejected = not check_proof(mutant, prog.table).accepted
        if not rejected:
            root = mutant.conclusion.succedent
            rejected = not valid_judgment_bounded(prog.main, prog.table, root.formula, CORPUS_BOUNDS).accepted
        assert rejected, path
        caught += 1
    _notes[4] = f"{len(proofs)} proofs accepted and valid, {caught}/50 mutants rejected"


@criterion(5, "canonical proofs exist with one Call per procedure")
def test_canonical_proofs():
    even, down = load_program("even.rec"), load_program("down.rec")
    bounds = Bounds.grid({"x": range(0, 5), "y": [0]}, 40)
    tree = prove_stf(even.main, even.table, bounds)
    assert check_proof(tree, even.table).fully_checked
    assert count_rule(tree, "Call") == 2
    certs = certificates(tree)
    assert certs and all(c.accepted for c in certs)
    tree = prove_stf(down.main, down.table, bounds)
    assert check_proof(tree, down.table).fully_checked
    assert count_rule(tree, "Call") == 1
    _notes[5] = f"even: 2 Call, {len(certs)} Cons certificates accepted; down: 1 Call"


def _guard_weakenings(phi):
    """Copies of ``phi`` with one guard, or every guard, replaced by true."""
    def drop(f, target):
        match f:
            case And(StatePred(), rest) if target is None or f is target:
                return drop(rest, target)
            case And(a, b):
                return And(drop(a, target), drop(b, target))
            case Or(a, b):
                return Or(drop(a, target), drop(b, target))
            case Mu(x, body):
                return Mu(x, drop(body, target))
            case _ if hasattr(f, "left"):
                return type(f)(drop(f.left, target), drop(f.right, target))
        return f
    guards = [f for f in subformulas(phi) if isinstance(f, And) and isinstance(f.left, StatePred)]
    return [drop(phi, g) for g in guards] + [drop(phi, None)]


def _disjunct_drops(phi):
    """Copies of ``phi`` with one disjunct removed."""
    out = []

    def go(f, rebuild):
        match f:
            case Or(a, b):
                out.append(rebuild(a))
                out.append(rebuild(b))
                go(a, lambda g: rebuild(Or(g, b)))
                go(b, lambda g: rebuild(Or(a, g)))
            case Mu(x, body):
                go(body, lambda g: rebuild(Mu(x, g)))
            case _ if hasattr(f, "left"):
                go(f.left, lambda g: rebuild(type(f)(g, f.right)))
                go(f.right, lambda g: rebuild(type(f)(f.left, g)))
    go(phi, lambda g: g)
    return out


@criterion(6, "bounded-valid judgments get proofs through Cons")
def test_relative_completeness():
    down, even = load_program("down.rec"), load_program("even.rec")
    dec_bounds = Bounds.grid({"x": range(0, 11)}, 40)
    tree = prove_judgment(down.main, down.table, load_formula("dec.tfl"), dec_bounds)
    assert tree.rule == "Cons" and check_proof(tree, down.table).fully_checked

    bounds = Bounds.grid({"x": range(0, 5), "y": [0]}, 40)
    base = stf(even.main, even.table)
    candidates = [(c, "weakened") for c in _guard_weakenings(base)]
    candidates += [(c, "dropped") for c in _disjunct_drops(base)]
    proved = refuted = 0
    for phi, kind in candidates:
        valid = valid_judgment_bounded(even.main, even.table, phi, bounds).accepted
        if valid:
            tree = prove_judgment(even.main, even.table, phi, bounds)
            assert check_proof(tree, even.table).fully_checked, show_formula(phi)
            proved += 1
        else:
            with pytest.raises(ProofFailure):
                prove_judgment(even.main, even.table, phi, bounds)
            refuted += 1
        if kind == "weakened":
            assert valid, show_formula(phi)
    assert proved >= len(_guard_weakenings(base))
    _notes[6] = f"down/Dec+ proved; even: {proved} valid candidates proved, {refuted} invalid refuted"


@criterion(7, "canonical programs are stutter-equal to their formulas")
def test_canonical_programs():
    down, even = load_program("down.rec"), load_program("even.rec")
    formulas = [
        load_formula("count_up.tfl"),
        stf(down.main, down.table),
        stf(even.main, even.table),
        parse_formula("{x > 0} /\\ Id"),
        parse_formula("Id \\/ Sb[x:=1]"),
    ]
    bounds = Bounds.grid({"x": range(0, 5), "y": [0, 1]}, 30)
    horizon = bounds.max_len // STUTTER_FACTOR
    widened = []
    for phi in formulas:
        program = canon(phi)
        pv = stutter_view_stm(program.main, program.table, bounds)
        fv = stutter_view_formula(phi, bounds)
        assert pv.traces == fv.traces, show_formula(phi)
        # the validated raw enumerations themselves agree up to the horizon
        raw_p = eval_stm(program.main, program.table, bounds.with_max_len(pv.raw_budget))
        raw_f = eval_formula_enum(phi, bounds.with_max_len(fv.raw_budget))
        assert stutter_equal_bounded({t for t in normalize_set(raw_p) if len(t) <= horizon},
                                     {t for t in normalize_set(raw_f) if len(t) <= horizon})
        widened.append(pv.widenings)
    assert show_program(canon(formulas[0])).strip().splitlines() == COUNT_PROGRAM
    _notes[7] = f"5 formulas, horizon {horizon}, program-side widenings {widened}"


@criterion(8, "Galois connection holds on the 5x5 grid")
def test_galois_grid():
    statements = [load_program(n) for n in ("decrement.rec", "even.rec", "down.rec", "walk.rec",
                                            "countdown.rec")]
    down, even = load_program("down.rec"), load_program("even.rec")
    formulas = [
        load_formula("count_up.tfl"),
        stf(down.main, down.table),
        stf(even.main, even.table),
        parse_formula("{x > 0} /\\ Id"),
        parse_formula("Id \\/ Sb[x:=1]"),
    ]
    bounds = Bounds.grid({"x": range(0, 5), "y": [0]}, 30)
    asymmetric, holding = [], 0
    for prog in statements:
        for phi in formulas:
            rep = galois_check(prog.main, prog.table, phi, bounds)
            if not rep.agree:
                asymmetric.append((show_program(prog), show_formula(phi),
                                   rep.entails_witness, rep.refines_witness))
            holding += rep.entails
    for cell in asymmetric:
        print("asymmetric cell:", *cell, sep="\n  ")
    assert not asymmetric
    _notes[8] = f"25 cells agree, {holding} with both sides holding"


@criterion(9, "diverge has no traces")
def test_diverge():
    prog = load_program("diverge.rec")
    for n in (2, 10, 100):
        bounds = Bounds((), ((),), n)
        assert eval_stm(prog.main, prog.table, bounds) == frozenset()
        assert run_traces(prog.main, prog.table, bounds) == frozenset()
    _notes[9] = "max-len 2, 10, 100"


@criterion(10, "entailment oracle accepts the decreasing claim, refutes a false one")
def test_entailment_oracle():
    down = load_program("down.rec")
    phi = stf(down.main, down.table)
    bounds = Bounds.grid({"x": range(0, 11)}, 40)
    cert = entails_bounded(phi, load_formula("dec.tfl"), bounds)
    assert cert.accepted and cert.mode == "bounded"
    bad = entails_bounded(phi, ID, bounds)
    assert not bad.accepted and bad.counterexample is not None
    assert bad.counterexample in eval_formula_enum(phi, bounds)
    assert not Membership(ID, ("x",))(bad.counterexample)
    _notes[10] = f"{cert.checked} traces checked, witness of length {len(bad.counterexample)}"


@criterion(11, "trace-set laws and membership/enumeration cross-validation")
def test_laws_and_cross_validation():
    failures = check_laws(random.Random(1), 1000)
    assert all(not v for v in failures.values()), {k: len(v) for k, v in failures.items()}
    rng = random.Random(5)
    disagreements = 0
    for _ in range(500):
        phi = random_restricted(rng, rng.randint(1, 5))
        t = random_trace(rng, max_len=6)
        bounds = Bounds(("x",), (t[0],), max(len(t), 2))
        if Membership(phi, ("x",))(t) != (t in eval_formula_enum(phi, bounds)):
            disagreements += 1
    assert disagreements == 0
    _notes[11] = "5 laws x 1000 samples, 500 membership samples, 0 disagreements"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
