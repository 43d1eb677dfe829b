import pytest
from hypothesis import given, settings

from conftest import load_formula, load_program
from generators import restricted_formulas
from tracelab import parse_formula, parse_program, parse_statement, show_program
from tracelab.canon import (
    canon, refines_bounded, stutter_equal_bounded, stutter_view_formula, stutter_view_stm,
)
from tracelab.denotational import eval_stm
from tracelab.errors import RestrictionError, WellFormednessError
from tracelab.stf import stf
from tracelab.syntax import ID, Call, Chop, Cmp, If, Mu, Num, Program, Skip, Var
from tracelab.traces import Bounds, stutter_normalize


def tr(*xs):
    return tuple((v,) for v in xs)


def test_canon_id():
    assert canon(ID) == Program(Skip(), ())


def test_canon_count_up():
    program = canon(load_formula("count_up.tfl"))
    assert show_program(program).strip().splitlines() == [
        "proc m_X { if * then skip else y := y + 1; m_X() }",
        "main { y := 0; m_X() }",
    ]
    assert program == parse_program("""
        proc m_X { if * then skip else { y := y + 1; m_X() } }
        main { y := 0; m_X() }
    """)


def test_canon_guard_uses_diverge():
    program = canon(parse_formula("{x > 0} /\\ Id"))
    assert program.main == If(Cmp(">", Var("x"), Num(0)), Skip(), Call("abort"))
    assert program.table == {"abort": Call("abort")}
    bounds = Bounds(("x",), ((0,), (1,)), 10)
    # nothing survives from x=0
    assert eval_stm(program.main, program.table, bounds) == {tr(1, 1, 1)}


def test_canon_errors():
    with pytest.raises(RestrictionError):
        canon(parse_formula("Id ^ Dec(x)"))
    with pytest.raises(WellFormednessError):
        canon(Chop(Mu("X", ID), Mu("X", ID)))


def test_stutter_equal_examples():
    assert stutter_equal_bounded({tr(1, 1, 2)}, {tr(1, 2, 2)})
    assert not stutter_equal_bounded({tr(1, 2)}, {tr(2, 1)})
    a = {tr(1, 2, 2, 3)}
    assert stutter_equal_bounded(a, a)


def test_refines_reflexive():
    assert refines_bounded(Skip(), {}, Skip(), {}, Bounds(("x",), ((0,),), 5)).holds


def test_down_and_its_canonical_program(down):
    bounds = Bounds(("x",), ((0,), (2,), (4,)), 20)
    program = canon(stf(down.main, down.table))
    forward = refines_bounded(down.main, down.table, program.main, program.table, bounds, True)
    backward = refines_bounded(program.main, program.table, down.main, down.table, bounds, True)
    assert forward.holds and backward.holds
    assert forward.horizon == 20 // 3


def test_choice_refinement_modulo_stutter():
    bounds = Bounds(("x",), ((0,), (5,)), 10)
    one = parse_statement("x := 1")
    choice = parse_statement("if * then x := 1 else x := 2")
    assert refines_bounded(one, {}, choice, {}, bounds, modulo_stutter=True).holds
    verdict = refines_bounded(choice, {}, one, {}, bounds, modulo_stutter=True)
    assert not verdict.holds
    s = verdict.witness[0]
    assert stutter_normalize(verdict.witness) == (s, (2,))


def test_plain_refinement_sees_stutter():
    bounds = Bounds(("x",), ((0,),), 10)
    one = parse_statement("x := 1")
    choice = parse_statement("if * then x := 1 else x := 2")
    verdict = refines_bounded(one, {}, choice, {}, bounds)
    assert not verdict.holds and verdict.witness == tr(0, 1)


@pytest.mark.parametrize("name", ["even.rec", "down.rec", "walk.rec", "countdown.rec"])
def test_canonical_program_of_stf_is_stutter_equal(name):
    prog = load_program(name)
    bounds = Bounds.grid({"x": range(0, 4), "y": [0]}, 30)
    phi = stf(prog.main, prog.table)
    program = canon(phi)
    assert parse_program(show_program(program)) == program
    left = stutter_view_stm(program.main, program.table, bounds)
    right = stutter_view_stm(prog.main, prog.table, bounds)
    assert left.traces == right.traces


@settings(max_examples=60, deadline=None)
@given(restricted_formulas())
def test_canon_characterisation_on_random_formulas(phi):
    program = canon(phi)
    assert parse_program(show_program(program)) == program
    bounds = Bounds(("x",), ((0,), (1,), (2,)), 18)
    program_view = stutter_view_stm(program.main, program.table, bounds)
    formula_view = stutter_view_formula(phi, bounds)
    assert program_view.traces == formula_view.traces
