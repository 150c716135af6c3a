"""Closed-form solving of nilpotent-affine ODE systems.

A flow is a map from variables to polynomial right-hand sides.  When the
dependency graph among variables is acyclic (each derivative only mentions
variables strictly lower in some topological order, with constants at the
sources), the solution is obtained by iterated polynomial integration along
that order.  Every location flow of the built-in driving models is of this
shape: timers (``dt/dT = 1``), velocities (constant acceleration), and
positions (``dx/dT = v``).

The solution is expressed in a fresh time symbol with the state variables
standing for their values at time zero, so composing an assertion with a
solution is a plain polynomial substitution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Mapping

from .symbolic import Term

TIME = "_T"


class UnsolvableFlowError(Exception):
    """The ODE system is outside the nilpotent-affine class."""


def term_derivative(t: Term, var: str) -> Term:
    """d/d var of a polynomial term."""
    out: dict = {}
    for mono, c in t.coeffs.items():
        for k, (v, e) in enumerate(mono):
            if v != var:
                continue
            rest = mono[:k] + ((v, e - 1),) + mono[k + 1 :] if e > 1 else mono[:k] + mono[k + 1 :]
            out[rest] = out.get(rest, Fraction(0)) + c * e
    return Term(out)


def term_integral(t: Term, var: str) -> Term:
    """Antiderivative in ``var`` with zero constant of integration."""
    out: dict = {}
    for mono, c in t.coeffs.items():
        e0 = 0
        rest = []
        for v, e in mono:
            if v == var:
                e0 = e
            else:
                rest.append((v, e))
        new = tuple(sorted(rest + [(var, e0 + 1)]))
        out[new] = out.get(new, Fraction(0)) + c / (e0 + 1)
    return Term(out)


@dataclass(frozen=True)
class FlowSolution:
    """Exact solutions x_i(T), with state variables denoting initial values."""

    flow: Mapping[str, Term]
    solutions: Mapping[str, Term] = field(default_factory=dict)
    time: str = TIME

    def compose_term(self, t: Term, at: Term) -> Term:
        """Evaluate a state polynomial along the flow at time ``at``."""
        mapping = {v: sol.subst({self.time: at}) for v, sol in self.solutions.items()}
        return t.subst(mapping)

    def verify(self) -> bool:
        """Symbolically check d/dT sol(x) == f(sol) for every variable."""
        for v, rhs in self.flow.items():
            lhs = term_derivative(self.solutions[v], self.time)
            if lhs != rhs.subst(dict(self.solutions)):
                return False
        return True


def solve_flow(flow: Mapping[str, Term], time: str = TIME) -> FlowSolution:
    """Solve an acyclic polynomial ODE system by iterated integration.

    Raises UnsolvableFlowError when a right-hand side depends (directly or
    through a cycle) on its own variable, or mentions ``time``.
    """
    deps: dict[str, set[str]] = {}
    for v, rhs in flow.items():
        if time in rhs.variables():
            raise UnsolvableFlowError(f"flow for {v!r} mentions the time symbol")
        deps[v] = {u for u in rhs.variables() if u in flow}
    try:
        order = list(TopologicalSorter(deps).static_order())
    except CycleError as exc:
        raise UnsolvableFlowError(f"cyclic dependency among flow variables: {exc}") from None

    solutions: dict[str, Term] = {}
    for v in order:
        rhs = flow[v].subst(solutions)
        solutions[v] = Term.var(v) + term_integral(rhs, time)

    sol = FlowSolution(flow=dict(flow), solutions=solutions, time=time)
    if not sol.verify():  # pragma: no cover - guards against integration bugs
        raise UnsolvableFlowError("solution failed the symbolic derivative check")
    return sol
