"""Hybrid-program AST, numeric interpreter, and quadruple falsification.

Programs are imperative trees extended with ``dwhile`` clauses that run an
ODE for as long as an open guard holds.  The interpreter executes discrete
constructs exactly and integrates ``dwhile`` bodies with fixed-step RK4,
locating the first guard-falsification instant by bisection.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .symbolic import (
    Assertion,
    Term,
    classify_topology,
    BOTH,
    OPEN,
    satisfies,
    term_to_sexpr,
    to_sexpr,
    _assertion_from_sexpr,
    _read,
    _term_from_sexpr,
    _tokenize,
)

# AST ---------------------------------------------------------------------------


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class Assign(Program):
    var: str
    expr: Term


@dataclass(frozen=True)
class If(Program):
    cond: Assertion
    then: Program
    orelse: Program


@dataclass(frozen=True)
class While(Program):
    cond: Assertion
    body: Program


@dataclass(frozen=True)
class DWhile(Program):
    guard: Assertion
    odes: tuple  # ordered tuple of (var, Term) pairs with distinct variables

    def __post_init__(self):
        names = [v for v, _ in self.odes]
        if len(set(names)) != len(names):
            raise ValueError("dwhile ODE variables must be distinct")
        if classify_topology(self.guard) not in (OPEN, BOTH):
            raise ValueError("dwhile guard must be an open assertion")


def seq(*progs: Program) -> Program:
    progs = [p for p in progs if not isinstance(p, Skip)]
    if not progs:
        return Skip()
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = Seq(p, out)
    return out


def assign_block(assignments: Iterable[tuple]) -> Program:
    return seq(*[Assign(v, e) for v, e in assignments])


# Quadruples and configuration ----------------------------------------------------


@dataclass(frozen=True)
class HoareQuadruple:
    pre: Assertion
    prog: Program
    post: Assertion
    safety: Assertion


@dataclass(frozen=True)
class SimCfg:
    dt: float = 0.001
    horizon: float = 60.0
    event_tol: float = 1e-9
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.event_tol >= self.dt:
            raise ValueError("event_tol must be below dt")


CONVERGED = "converged"
TIMEOUT = "timeout"
STUCK = "stuck"  # kept for forward compatibility; unreachable for this AST


@dataclass
class RunResult:
    outcome: str
    store: dict
    time: float
    trace: list = field(default_factory=list)  # (time, store) pairs


# Interpreter ----------------------------------------------------------------------


def _rk4_step(store: dict, odes: Sequence[tuple], h: float) -> dict:
    def deriv(s: Mapping[str, float]) -> dict:
        return {v: float(rhs.eval(s)) for v, rhs in odes}

    k1 = deriv(store)
    s2 = dict(store)
    for v in k1:
        s2[v] = store[v] + 0.5 * h * k1[v]
    k2 = deriv(s2)
    s3 = dict(store)
    for v in k2:
        s3[v] = store[v] + 0.5 * h * k2[v]
    k3 = deriv(s3)
    s4 = dict(store)
    for v in k3:
        s4[v] = store[v] + h * k3[v]
    k4 = deriv(s4)
    out = dict(store)
    for v in k1:
        out[v] = store[v] + (h / 6.0) * (k1[v] + 2 * k2[v] + 2 * k3[v] + k4[v])
    return out


def _integrate_dwhile(node: DWhile, store: dict, t0: float, cfg: SimCfg, trace: list):
    """Advance until the guard is falsified; returns (store, time, timed_out)."""
    if not satisfies(store, node.guard):
        return store, t0, False
    t = t0
    cur = store
    while t < cfg.horizon:
        h = min(cfg.dt, cfg.horizon - t)
        nxt = _rk4_step(cur, node.odes, h)
        if satisfies(nxt, node.guard):
            cur, t = nxt, t + h
            trace.append((t, dict(cur)))
            continue
        # bisect within [t, t+h]: guard true at lo, false at hi
        lo, hi = 0.0, h
        while hi - lo > cfg.event_tol:
            mid = 0.5 * (lo + hi)
            probe = _rk4_step(cur, node.odes, mid)
            if satisfies(probe, node.guard):
                lo = mid
            else:
                hi = mid
        out = _rk4_step(cur, node.odes, hi)
        t_exit = t + hi
        trace.append((t_exit, dict(out)))
        return out, t_exit, False
    return cur, t, True


def run_program(p: Program, store0: Mapping[str, float], cfg: SimCfg | None = None,
                keep_trace: bool = True) -> RunResult:
    """Execute a hybrid program from a store; pure in (p, store0, cfg)."""
    cfg = cfg or SimCfg()
    store = {k: float(v) for k, v in store0.items()}
    trace = [(0.0, dict(store))] if keep_trace else []
    t = 0.0
    stack: list[Program] = [p]
    steps = 0
    while stack:
        steps += 1
        if steps > cfg.max_steps:
            return RunResult(TIMEOUT, store, t, trace)
        node = stack.pop()
        if isinstance(node, Skip):
            continue
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
            continue
        if isinstance(node, Assign):
            store[node.var] = float(node.expr.eval(store))
            if keep_trace:
                trace.append((t, dict(store)))
            continue
        if isinstance(node, If):
            stack.append(node.then if satisfies(store, node.cond) else node.orelse)
            continue
        if isinstance(node, While):
            if satisfies(store, node.cond):
                stack.append(node)
                stack.append(node.body)
            continue
        if isinstance(node, DWhile):
            local_trace: list = []
            store, t, timed_out = _integrate_dwhile(node, store, t, cfg, local_trace)
            if keep_trace:
                trace.extend(local_trace)
            if timed_out:
                return RunResult(TIMEOUT, store, t, trace)
            continue
        raise TypeError(f"unknown program node {node!r}")
    return RunResult(CONVERGED, store, t, trace)


# Falsification ---------------------------------------------------------------------


@dataclass(frozen=True)
class FalsifyVerdict:
    counterexample: dict | None
    kind: str | None  # "nonconvergence" | "postcondition" | "safety"
    samples: int

    @property
    def found(self) -> bool:
        return self.counterexample is not None


def falsify_quadruple(q: HoareQuadruple, sampler: Callable[[], Mapping[str, float]],
                      n: int, cfg: SimCfg | None = None) -> FalsifyVerdict:
    """Search for a store satisfying the precondition that breaks the quadruple."""
    cfg = cfg or SimCfg()
    for i in range(n):
        store = dict(sampler())
        if not satisfies(store, q.pre):
            raise ValueError("sampler produced a store violating the precondition")
        result = run_program(q.prog, store, cfg)
        if result.outcome != CONVERGED:
            return FalsifyVerdict(store, "nonconvergence", i + 1)
        for _, snap in result.trace:
            if not satisfies(snap, q.safety):
                return FalsifyVerdict(store, "safety", i + 1)
        if not satisfies(result.store, q.post):
            return FalsifyVerdict(store, "postcondition", i + 1)
    return FalsifyVerdict(None, None, n)


# Trace export ------------------------------------------------------------------------


def trace_to_csv(trace: Sequence[tuple]) -> str:
    """CSV with header t,<var1>,<var2>,... — one row per accepted step/event."""
    if not trace:
        return "t\n"
    variables = sorted(trace[0][1])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + variables)
    for t, snap in trace:
        writer.writerow([repr(t)] + [repr(snap[v]) for v in variables])
    return buf.getvalue()

# Program serialization -----------------------------------------------------------


def program_to_sexpr(p: Program) -> str:
    """S-expression form of a program; inverse of :func:`parse_program`."""
    if isinstance(p, Skip):
        return "(skip)"
    if isinstance(p, Seq):
        return f"(seq {program_to_sexpr(p.first)} {program_to_sexpr(p.second)})"
    if isinstance(p, Assign):
        return f"(assign {p.var} {term_to_sexpr(p.expr)})"
    if isinstance(p, If):
        return (f"(if {to_sexpr(p.cond)} {program_to_sexpr(p.then)} "
                f"{program_to_sexpr(p.orelse)})")
    if isinstance(p, While):
        return f"(while {to_sexpr(p.cond)} {program_to_sexpr(p.body)})"
    if isinstance(p, DWhile):
        odes = " ".join(f"({v} {term_to_sexpr(t)})" for v, t in p.odes)
        return f"(dwhile {to_sexpr(p.guard)} ({odes}))"
    raise TypeError(f"not a program node: {p!r}")


def _program_from_sexpr(node) -> Program:
    if not isinstance(node, list) or not node:
        raise ValueError(f"malformed program {node!r}")
    head = node[0]
    if head == "skip":
        return Skip()
    if head == "seq":
        return Seq(_program_from_sexpr(node[1]), _program_from_sexpr(node[2]))
    if head == "assign":
        return Assign(node[1], _term_from_sexpr(node[2]))
    if head == "if":
        return If(_assertion_from_sexpr(node[1]), _program_from_sexpr(node[2]),
                  _program_from_sexpr(node[3]))
    if head == "while":
        return While(_assertion_from_sexpr(node[1]), _program_from_sexpr(node[2]))
    if head == "dwhile":
        odes = tuple((v, _term_from_sexpr(t)) for v, t in node[2])
        return DWhile(_assertion_from_sexpr(node[1]), odes)
    raise ValueError(f"unknown program head {head!r}")


def parse_program(text: str) -> Program:
    tokens = _tokenize(text)
    node, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ValueError("trailing input after program")
    return _program_from_sexpr(node)
