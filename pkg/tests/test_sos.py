import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_program
from generators import programs
from oracle import Oracle
from tracelab.errors import SemanticsError, WellFormednessError
from tracelab.parser import parse_statement
from tracelab.sos import Final, Intermediate, RunStats, run_traces, step
from tracelab.syntax import Assign, BinOp, Call, If, IfStar, Num, Seq, Skip, StmtVar, Var, program_vars
from tracelab.traces import Bounds

VARS = ("x", "y")
dec_x = Assign("x", BinOp("-", Var("x"), Num(1)))


def xs(trace):
    return [s[0] for s in trace]


def test_step_seq_skip():
    c = Intermediate(Seq(Skip(), dec_x), (4, 0))
    assert step(c, {}, VARS) == {Intermediate(dec_x, (4, 0))}


def test_step_assignment_finishes():
    assert step(Intermediate(dec_x, (4, 0)), {}, VARS) == {Final((3, 0))}


def test_step_call_unfolds(down):
    c = Intermediate(Call("down"), (0, 0))
    assert step(c, down.table, VARS) == {Intermediate(down.table["down"], (0, 0))}


def test_step_identical_choice_collapses():
    c = Intermediate(IfStar(Skip(), Skip()), (0, 0))
    assert step(c, {}, VARS) == {Intermediate(Skip(), (0, 0))}


def test_step_choice_has_two_successors():
    c = Intermediate(IfStar(Skip(), dec_x), (0, 0))
    assert len(step(c, {}, VARS)) == 2


def test_step_errors():
    with pytest.raises(WellFormednessError):
        step(Intermediate(Call("nowhere"), (0, 0)), {}, VARS)
    with pytest.raises(SemanticsError):
        step(Intermediate(StmtVar("Y_p"), (0, 0)), {}, VARS)


def test_skip_then_decrement():
    bounds = Bounds(("x",), ((5,),), 10)
    out = run_traces(parse_statement("skip; x := x - 1"), {}, bounds)
    assert [xs(t) for t in out] == [[5, 5, 4]]


def test_golden_run_from_seven():
    prog = load_program("down_from_two.rec")
    out = run_traces(prog.main, prog.table, Bounds(("x",), ((7,),), 10))
    assert [xs(t) for t in out] == [[7, 2, 2, 2, 0, 0, 0, 0]]


def test_even_from_three_ends_with_y_zero(even):
    out = run_traces(even.main, even.table, Bounds(("x", "y"), ((3, 0),), 40))
    assert len(out) == 1
    (trace,) = out
    assert trace[-1][1] == 0
    assert trace == next(iter(Oracle(("x", "y")).traces(even.main, even.table, (3, 0), 40)))


def test_pruning_is_counted(down):
    stats = RunStats()
    assert run_traces(down.main, down.table, Bounds(("x",), ((9,),), 6), stats) == frozenset()
    assert stats.pruned_runs == 1


def test_diverge_never_terminates():
    prog = load_program("diverge.rec")
    for n in (2, 10, 100):
        stats = RunStats()
        assert run_traces(prog.main, prog.table, Bounds((), ((),), n), stats) == frozenset()
        assert stats.pruned_runs == 1


def _bounds_for(prog, max_len):
    names = sorted(program_vars(prog) | {"x"})
    return Bounds.grid({v: ([0, 1] if v == "x" else [0]) for v in names}, max_len)


@settings(max_examples=60, deadline=None)
@given(programs(), st.integers(2, 9))
def test_sos_matches_reference(prog, max_len):
    bounds = _bounds_for(prog, max_len)
    expected = Oracle(bounds.variables).program_traces(
        prog.main, prog.table, bounds.initial_states, max_len)
    assert run_traces(prog.main, prog.table, bounds) == expected


@settings(max_examples=60, deadline=None)
@given(programs(), st.integers(2, 8))
def test_budget_monotone_and_prefix_closed(prog, max_len):
    bounds = _bounds_for(prog, max_len)
    small = run_traces(prog.main, prog.table, bounds)
    assert small <= run_traces(prog.main, prog.table, bounds.with_max_len(max_len + 3))
    # each reported trace is a path of single steps through the machine
    for trace in small:
        frontier = {Intermediate(prog.main, trace[0])}
        for i, s in enumerate(trace[1:], start=1):
            succ = {c for f in frontier for c in step(f, prog.table, bounds.variables) if c.state == s}
            if i == len(trace) - 1:
                assert Final(s) in succ
            frontier = {c for c in succ if isinstance(c, Intermediate)}
            assert frontier or i == len(trace) - 1


def _deterministic(stmt):
    match stmt:
        case IfStar():
            return False
        case Seq(a, b) | If(_, a, b):
            return _deterministic(a) and _deterministic(b)
    return True


@settings(max_examples=60, deadline=None)
@given(programs())
def test_rec_programs_step_deterministically(prog):
    if not (_deterministic(prog.main) and all(_deterministic(p.body) for p in prog.procs)):
        return
    variables = _bounds_for(prog, 2).variables
    frontier = [Intermediate(prog.main, (0,) * len(variables))]
    for _ in range(15):
        if not frontier:
            break
        (succ,) = step(frontier[0], prog.table, variables)
        frontier = [succ] if isinstance(succ, Intermediate) else []
