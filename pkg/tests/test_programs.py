"""Hybrid program interpreter and falsifier."""

import random
from fractions import Fraction

import pytest

from rssforge.programs import (
    Assign,
    DWhile,
    HoareQuadruple,
    If,
    Program,
    RunResult,
    Seq,
    SimCfg,
    Skip,
    While,
    assign_block,
    falsify_quadruple,
    parse_program,
    program_to_sexpr,
    run_program,
    seq,
    trace_to_csv,
)
from rssforge.symbolic import Term, conj, eq, ge, gt, le, lt

x, v, t = Term.var("x"), Term.var("v"), Term.var("t")

# dwhile (x > 0) { x' = -1 }; x := x - 1
DECAY = seq(
    DWhile(gt(x, 0), (("x", Term.const(-1)),)),
    Assign("x", x - 1),
)


def test_decay_program_converges():
    r = run_program(DECAY, {"x": 2.0})
    assert r.outcome == "converged"
    assert abs(r.store["x"] - (-1.0)) < 1e-6
    # the dwhile exits at time 2
    assert abs(r.time - 2.0) < 1e-6


def test_decay_skips_dwhile_when_guard_false():
    r = run_program(DECAY, {"x": -3.0})
    assert r.outcome == "converged"
    assert r.store["x"] == -4.0 and r.time == 0.0


def test_while_and_if():
    # discrete countdown
    p = While(gt(x, 0), If(ge(x, 2), Assign("x", x - 2), Assign("x", x - 1)))
    r = run_program(p, {"x": 7.0})
    assert r.outcome == "converged" and r.store["x"] == 0.0


def test_dwhile_timeout():
    p = DWhile(lt(x, 10), (("x", Term.const(0)),))
    r = run_program(p, {"x": 0.0}, SimCfg(dt=0.01, horizon=1.0))
    assert r.outcome == "timeout"


def test_dwhile_guard_must_be_open():
    with pytest.raises(ValueError):
        DWhile(ge(x, 0), (("x", Term.const(1)),))


def test_trace_is_monotone_in_time():
    r = run_program(DECAY, {"x": 1.5})
    times = [ti for ti, _ in r.trace]
    assert times == sorted(times)
    csv = trace_to_csv(r.trace)
    assert csv.splitlines()[0].startswith("t")


def test_assign_block_is_sequential():
    p = assign_block([("x", v), ("v", x + 1)])
    r = run_program(p, {"x": 1.0, "v": 2.0})
    assert r.store == {"x": 2.0, "v": 3.0}


def test_cfg_validation():
    with pytest.raises(ValueError):
        SimCfg(dt=-1)
    with pytest.raises(ValueError):
        SimCfg(dt=0.001, event_tol=0.01)


# --- falsifier -------------------------------------------------------------------


def _sampler(seed=0):
    rng = random.Random(seed)
    return lambda: {"x": rng.uniform(0.0, 5.0)}


def test_falsifier_finds_postcondition_violation():
    q = HoareQuadruple(pre=ge(x, 0), prog=DECAY, post=gt(x, 0), safety=ge(x, -2))
    verdict = falsify_quadruple(q, _sampler(), n=50)
    assert verdict.found
    assert verdict.counterexample is not None


def test_falsifier_passes_true_quadruple():
    tol = Fraction(1, 10**6)
    q = HoareQuadruple(
        pre=ge(x, 0),
        prog=DECAY,
        post=conj(ge(x, Fraction(-1) - tol), le(x, Fraction(-1) + tol)),
        safety=ge(x, -2),
    )
    verdict = falsify_quadruple(q, _sampler(1), n=50)
    assert not verdict.found


# --- s-expression round trip -------------------------------------------------------


def test_program_sexpr_roundtrip():
    p = seq(
        Skip(),
        If(lt(x, 0), Assign("x", Term.const(0)), Skip()),
        While(gt(x, 0), seq(Assign("x", x - 1), Skip())),
        DWhile(conj(gt(x, 0), lt(t, 10)), (("x", v * -1), ("t", Term.const(1)))),
    )
    assert parse_program(program_to_sexpr(p)) == p
