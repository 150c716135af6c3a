"""Backward Hoare-annotation synthesis over acyclic product hCFGs.

For every reachable location (in reverse topological order) an annotation
γ(l) is computed as the disjunction of edge-wise preconditions: C_{l,i}
holds at a store exactly when, running the flow of l from that store, the
i-th guard is the first to fire (ties between simultaneously enabled
guards resolve to the lowest-ordered edge, matching the dispatch order of
the translated program), the successor's annotation (pulled back through
the edge's assignments) holds on arrival, and the safety condition holds
throughout the dwell.  The quantifiers over the exit time and the dwell
parameter are eliminated eagerly by virtual substitution, so annotations
stay quantifier-free.

A forward linear pre-pass over the constant-derivative fragment of the
dynamics (timers, velocities, and symbolic parameters) computes a convex
over-approximation of the states that can occur at each location.  It is
used in exactly two sound ways: edges whose firing conditions contradict
it are dead (removed), and disjuncts of γ that contradict it are dropped
(strengthening γ, which Hoare-annotation validity always permits).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import qe, smt
from .flows import FlowSolution, solve_flow
from .hcfg import HCFG, Edge, reachable_and_acyclic, topological_order
from .qe import DegreeError
from .symbolic import (
    Assertion,
    FALSE,
    TRUE,
    Term,
    conj,
    disj,
    exists,
    forall,
    ge,
    implies,
    le,
    lt,
    neg,
    substitute,
    to_sexpr,
)

EXIT_TIME = "_te"
DWELL_TIME = "_tu"


# ---------------------------------------------------------------------------
# Forward linear analysis (polyhedral over the constant-derivative fragment)
# ---------------------------------------------------------------------------

Polyhedron = tuple  # of qe.LinCon


def _negate_con(con: qe.LinCon) -> qe.LinCon:
    coeffs, const, strict = con
    return ({v: -c for v, c in coeffs.items()}, -const, not strict)


def _entails(poly: Polyhedron, con: qe.LinCon) -> bool:
    return not qe.lin_feasible(list(poly) + [_negate_con(con)])


def _eliminate_var(cons: list, var: str) -> list | None:
    lows, highs, rest = [], [], []
    for coeffs, const, strict in cons:
        a = coeffs.get(var, Fraction(0))
        if a > 0:
            highs.append((coeffs, const, strict, a))
        elif a < 0:
            lows.append((coeffs, const, strict, a))
        else:
            rest.append((coeffs, const, strict))
    out = rest
    for lc, lk, ls, la in lows:
        for hc, hk, hs, ha in highs:
            coeffs = {}
            for v in set(lc) | set(hc):
                if v == var:
                    continue
                c = lc.get(v, Fraction(0)) * ha - hc.get(v, Fraction(0)) * la
                if c:
                    coeffs[v] = c
            out.append((coeffs, lk * ha - hk * la, ls or hs))
    if len(out) > qe._FM_LIMIT:
        return None
    return out


def _dedupe_cons(cons: Sequence[qe.LinCon]) -> Polyhedron:
    seen = []
    keys = set()
    for coeffs, const, strict in cons:
        if not coeffs and (const < 0 or (const == 0 and not strict)):
            continue  # trivially true
        key = (tuple(sorted(coeffs.items())), const, strict)
        if key not in keys:
            keys.add(key)
            seen.append((dict(coeffs), const, strict))
    return tuple(seen)


_ELAPSE = "_dt"


def elapse(poly: Polyhedron, flow: Mapping[str, Term]) -> Polyhedron:
    """States reachable by flowing for any t >= 0, projected onto the
    variables whose derivative is constant (others are forgotten)."""
    rates: dict[str, Fraction] = {}
    for v, rhs in flow.items():
        rates[v] = rhs.constant_value() if rhs.is_constant() else None
    shifted = []
    for coeffs, const, strict in poly:
        rate_sum = Fraction(0)
        ok = True
        for v, c in coeffs.items():
            r = rates.get(v, Fraction(0))  # parameters flow at rate 0
            if r is None:
                ok = False
                break
            rate_sum += c * r
        if not ok:
            continue
        # the constraint holds of the entry state x0 = x - rate*t, so the
        # elapsed form picks up a -rate coefficient on the time variable
        newc = dict(coeffs)
        if rate_sum:
            newc[_ELAPSE] = -rate_sum
        shifted.append((newc, const, strict))
    shifted.append(({_ELAPSE: Fraction(-1)}, Fraction(0), False))  # t >= 0
    out = _eliminate_var(shifted, _ELAPSE)
    if out is None:
        return ()
    return _dedupe_cons(out)


def apply_assigns(poly: Polyhedron, assigns: Sequence[tuple]) -> Polyhedron:
    out = list(poly)
    for v, rhs in assigns:
        out = [c for c in out if v not in c[0]]
        lin = qe.linear_parts(rhs)
        if lin is not None and v not in rhs.variables():
            coeffs, const = lin
            eq_co = dict(coeffs)
            eq_co[v] = eq_co.get(v, Fraction(0)) - 1
            out.append((dict(eq_co), const, False))
            out.append(({u: -c for u, c in eq_co.items()}, -const, False))
    return _dedupe_cons(out)


def _guard_cons(guard: Assertion, negate: bool = False) -> list:
    """Linear constraints implied by a guard (or its negation); conservative:
    anything non-convex or nonlinear contributes nothing."""
    d = qe.from_assertion(guard, negate=negate)
    if len(d) != 1:
        return []
    return qe.clause_constraints(d[0])


def _join(polys: Sequence[Polyhedron]) -> Polyhedron:
    """Weak join: keep the candidate constraints entailed by every branch."""
    if not polys:
        return ()
    if len(polys) == 1:
        return polys[0]
    def key_of(con):
        return (tuple(sorted(con[0].items())), con[1], con[2])

    poly_keys = [frozenset(key_of(c) for c in p) for p in polys]
    candidates = []
    keys = set()
    for poly in polys:
        for con in poly:
            key = key_of(con)
            if key not in keys:
                keys.add(key)
                candidates.append((key, con))
    out = [
        con for key, con in candidates
        if all(key in pk or _entails(p, con)
               for p, pk in zip(polys, poly_keys))
    ]
    return _dedupe_cons(out)


@dataclass
class ForwardAnalysis:
    entry: dict = field(default_factory=dict)  # location -> Polyhedron
    invariant: dict = field(default_factory=dict)  # location -> Polyhedron (dwell)
    live: set = field(default_factory=set)  # reachable after pruning
    dead_edges: set = field(default_factory=set)  # (location, edge index)


def analyze_forward(g: HCFG) -> ForwardAnalysis:
    reachable, acyclic = reachable_and_acyclic(g)
    if not acyclic:
        raise ValueError("forward analysis requires an acyclic reachable subgraph")
    order = topological_order(g, reachable)
    fa = ForwardAnalysis()
    incoming: dict = {l: [] for l in reachable}
    init_poly = apply_assigns((), g.init_assigns)
    for l in order:
        if l == g.init_location:
            branches = incoming[l] + [init_poly]
        else:
            branches = incoming[l]
            if not branches:
                continue  # unreachable once dead edges are removed
        entry = _join(branches)
        fa.live.add(l)
        fa.entry[l] = entry
        inv = elapse(entry, g.flows[l])
        fa.invariant[l] = inv
        out = g.out_edges(l)
        for i, e in enumerate(out):
            # taking edge i requires its guard to hold while every
            # lower-ordered guard is still false (ties go to the lowest edge)
            fire = list(inv) + _guard_cons(e.guard)
            for j, sib in enumerate(out):
                if j < i:
                    fire += _guard_cons(sib.guard, negate=True)
            if not qe.lin_feasible(fire):
                fa.dead_edges.add((l, i))
                continue
            after = _dedupe_cons(fire)
            incoming[e.target].append(apply_assigns(after, e.assigns))
    return fa


# ---------------------------------------------------------------------------
# Edge-wise preconditions (the quantified formula and its eager elimination)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgePrecondition:
    location: object
    index: int
    event: str
    target: object
    assertion: Assertion
    dnf: qe.Dnf | None = None  # None when elimination failed (quantified form kept)

    @property
    def quantified(self) -> bool:
        return self.dnf is None


def dnf_subst(d: qe.Dnf, assigns: Sequence[tuple]) -> qe.Dnf:
    """Pull a DNF back through an ordered assignment list (right-to-left)."""
    for v, rhs in reversed(list(assigns)):
        d = qe.map_terms(d, lambda p: p.subst({v: rhs}))
    return d


def _compose(d: qe.Dnf, sol: FlowSolution, at: Term) -> qe.Dnf:
    return qe.map_terms(d, lambda p: sol.compose_term(p, at))


def _subst_simultaneous(a: Assertion, mapping: Mapping[str, Term]) -> Assertion:
    """Simultaneous substitution (atoms rewritten in one pass, not chained)."""
    from .symbolic import And, Atom, BoolConst, Implies, Not, Or, Quant, SymbolicError

    if isinstance(a, BoolConst):
        return a
    if isinstance(a, Atom):
        return Atom(a.op, a.term.subst(mapping))
    if isinstance(a, And):
        return conj(*[_subst_simultaneous(c, mapping) for c in a.args])
    if isinstance(a, Or):
        return disj(*[_subst_simultaneous(c, mapping) for c in a.args])
    if isinstance(a, Not):
        return neg(_subst_simultaneous(a.arg, mapping))
    if isinstance(a, Implies):
        return implies(_subst_simultaneous(a.lhs, mapping),
                       _subst_simultaneous(a.rhs, mapping))
    if isinstance(a, Quant):
        if a.var in mapping or any(a.var in t.variables() for t in mapping.values()):
            raise SymbolicError(f"substitution would capture {a.var!r}")
        return Quant(a.kind, a.var, _subst_simultaneous(a.body, mapping))
    raise SymbolicError(f"unknown node {a!r}")


_QUANT_COUNTER = [0]

# Tie rules for simultaneously enabled guards.  ORDERED is the
# deterministic dispatch semantics: no guard fires strictly before the
# exit time, and at the exit time every lower-ordered guard is still
# false (ties go to the lowest edge).  STRICT demands every sibling
# guard stay false through the exit time inclusive — which is sound but
# rejects stores whose first enabling is a tie.
ORDERED = "ordered"
STRICT = "strict"


def quantified_precondition(guard: Assertion, target: Assertion, safety: Assertion,
                            earlier_sibs: Sequence[Assertion],
                            later_sibs: Sequence[Assertion], sol: FlowSolution,
                            tie_rule: str = ORDERED) -> Assertion:
    """The edge precondition as an explicitly quantified assertion."""
    _QUANT_COUNTER[0] += 1
    texit = f"{EXIT_TIME}{_QUANT_COUNTER[0]}"
    tdwell = f"{DWELL_TIME}{_QUANT_COUNTER[0]}"

    def at(a: Assertion, when: str) -> Assertion:
        mapping = {
            v: sol.compose_term(Term.var(v), Term.var(when)) for v in sol.solutions
        }
        return _subst_simultaneous(a, mapping)

    T, u = Term.var(texit), Term.var(tdwell)
    all_sibs = list(earlier_sibs) + list(later_sibs)
    if tie_rule == STRICT:
        no_earlier = forall(
            tdwell,
            implies(conj(ge(u, 0), lt(u, T)), neg(at(guard, tdwell))),
        )
        throughout = forall(
            tdwell,
            implies(
                conj(ge(u, 0), le(u, T)),
                conj(at(safety, tdwell), *[neg(at(s, tdwell)) for s in all_sibs]),
            ),
        )
        at_exit = at(guard, texit)
    else:
        every_guard = disj(guard, *all_sibs)
        no_earlier = forall(
            tdwell,
            implies(conj(ge(u, 0), lt(u, T)), neg(at(every_guard, tdwell))),
        )
        throughout = forall(
            tdwell,
            implies(conj(ge(u, 0), le(u, T)), at(safety, tdwell)),
        )
        at_exit = conj(at(guard, texit), *[neg(at(s, texit)) for s in earlier_sibs])
    return exists(
        texit,
        conj(ge(T, 0), at_exit, no_earlier, at(target, texit), throughout),
    )


def edge_precondition_dnf(guard_d: qe.Dnf, target_d: qe.Dnf, safety_d: qe.Dnf,
                          earlier_ds: Sequence[qe.Dnf], later_ds: Sequence[qe.Dnf],
                          sol: FlowSolution, context: Sequence[qe.LinCon] = (),
                          tie_rule: str = ORDERED) -> qe.Dnf:
    """Eager quantifier elimination of the edge precondition.

    Raises DegreeError when an irreducible factor of degree above two in the
    eliminated time variable appears.
    """
    T, u = Term.var(EXIT_TIME), Term.var(DWELL_TIME)
    t_nonneg = qe.from_assertion(ge(T, 0))
    target_at_T = _compose(target_d, sol, T)
    window_half_open = qe.from_assertion(conj(ge(u, 0), lt(u, T)))
    window_closed = qe.from_assertion(conj(ge(u, 0), le(u, T)))

    def nowhere(window: qe.Dnf, d: qe.Dnf) -> qe.Dnf:
        """¬∃u in the window with d(sol u); negation distributed clause-wise.

        ∃u distributes over the clauses of d, so negating each small
        eliminated piece and conjoining keeps intermediate DNFs far
        smaller than negating the union at once.
        """
        out = qe.DNF_TRUE
        for clause in d:
            hit = qe.exists_elim(
                DWELL_TIME, qe.dnf_and(window, _compose((clause,), sol, u))
            )
            out = qe.simplify(qe.dnf_and(out, qe.dnf_not(hit)))
            if out == qe.DNF_FALSE:
                break
        return out

    if tie_rule == STRICT:
        at_exit = _compose(guard_d, sol, T)
        no_earlier = nowhere(window_half_open, guard_d)
        breach = qe.dnf_not(safety_d) if safety_d != qe.DNF_TRUE else qe.DNF_FALSE
        for sib in list(earlier_ds) + list(later_ds):
            breach = qe.dnf_or(breach, sib)
    else:
        at_exit = _compose(guard_d, sol, T)
        for sib in earlier_ds:
            at_exit = qe.dnf_and(at_exit, qe.dnf_not(_compose(sib, sol, T)))
        any_guard = guard_d
        for sib in list(earlier_ds) + list(later_ds):
            any_guard = qe.dnf_or(any_guard, sib)
        no_earlier = nowhere(window_half_open, any_guard)
        breach = qe.dnf_not(safety_d) if safety_d != qe.DNF_TRUE else qe.DNF_FALSE
    throughout = (qe.DNF_TRUE if breach == qe.DNF_FALSE
                  else nowhere(window_closed, breach))
    common = qe.simplify(
        qe.dnf_and(t_nonneg, at_exit, no_earlier, throughout), context
    )
    if common == qe.DNF_FALSE:
        return qe.DNF_FALSE
    # The exit time is pinned by the first-crossing structure: the guard is
    # closed and false throughout [0, T), so T is zero or a root of a guard
    # atom.  Restricting the test points to those candidates keeps the
    # substituted literals (which may exceed degree two in T) out of the
    # root computation.
    try:
        cands = qe.crossing_candidates(EXIT_TIME, _compose(guard_d, sol, T))
    except qe.DegreeError:
        cands = None
    # distribute the existential over the target clauses so intermediate
    # DNFs stay near |common| instead of |common| * |target|
    pieces: list[qe.Dnf] = []
    for clause in target_at_T:
        body = qe.simplify(qe.dnf_and(common, (clause,)), context)
        if body == qe.DNF_FALSE:
            continue
        if cands is None:
            pieces.append(qe.exists_elim(EXIT_TIME, body, context=context))
        else:
            pieces.append(qe.exists_elim_at(EXIT_TIME, body, cands, context=context))
    return qe.simplify(qe.dnf_or(*pieces), context)


# ---------------------------------------------------------------------------
# The backward pass
# ---------------------------------------------------------------------------


@dataclass
class LocationStat:
    location: object
    seconds: float
    clauses: int
    edges: int
    hint: str = ""  # "", "accepted", "rejected", "unknown-rejected"


@dataclass
class SynthesisReport:
    gamma: dict  # location -> Assertion
    gamma_dnf: dict  # location -> Dnf or None (quantified fallback)
    rss_condition: Assertion
    rss_dnf: qe.Dnf | None
    vacuous: frozenset
    dead_edges: frozenset
    unreachable: frozenset
    stats: list
    hints_accepted: list
    hints_rejected: list
    quantified_locations: frozenset
    analysis: ForwardAnalysis

    @property
    def total_seconds(self) -> float:
        return sum(s.seconds for s in self.stats)


class HintRejected(Exception):
    def __init__(self, location, counterexample=None):
        super().__init__(f"hint rejected at {location!r}")
        self.location = location
        self.counterexample = counterexample


def _gamma_to_dnf(d: qe.Dnf | None, a: Assertion) -> qe.Dnf:
    if d is not None:
        return d
    raise DegreeError("successor annotation is quantified")


def annotate(g: HCFG, safety: Assertion, unsafe: frozenset,
             hints: Mapping | None = None, solver=None,
             strict_hints: bool = False, timeout: float = 60.0,
             progress=None) -> SynthesisReport:
    """Backward synthesis per the edge-wise precondition rule.

    ``unsafe`` locations get γ = false; final locations γ = S (unsafe wins
    when a location is both).  Hints replace the raw disjunction only when
    the solver confirms hint ⇒ ⋁C; unknown verdicts reject conservatively.
    With ``strict_hints`` a rejection raises :class:`HintRejected` instead
    of falling back.
    """
    hints = dict(hints or {})
    fa = analyze_forward(g)
    reachable, _ = reachable_and_acyclic(g)
    order = topological_order(g, fa.live)
    safety_d = qe.from_assertion(safety)
    sol_cache: dict = {}
    gamma: dict = {}
    gamma_dnf: dict = {}
    stats: list = []
    hints_accepted: list = []
    hints_rejected: list = []
    quantified: set = set()

    for l in reversed(order):
        started = time.monotonic()
        hint_note = ""
        out = g.out_edges(l)
        if l in unsafe:
            gamma[l], gamma_dnf[l] = FALSE, qe.DNF_FALSE
        elif l in g.final:
            gamma[l], gamma_dnf[l] = safety, safety_d
        elif not out:
            gamma[l], gamma_dnf[l] = FALSE, qe.DNF_FALSE
        else:
            flow_key = tuple(sorted(g.flows[l].items()))
            sol = sol_cache.get(flow_key)
            if sol is None:
                sol = sol_cache[flow_key] = solve_flow(dict(g.flows[l]))
            context = fa.invariant.get(l, ())
            parts_d: list = []
            parts_a: list = []
            any_quantified = False
            for i, e in enumerate(out):
                if (l, i) in fa.dead_edges or e.target not in fa.live:
                    continue
                earlier_sibs = [s.guard for j, s in enumerate(out) if j < i]
                later_sibs = [s.guard for j, s in enumerate(out) if j > i]
                succ_a = gamma.get(e.target, FALSE)
                succ_d = gamma_dnf.get(e.target)
                try:
                    target_d = dnf_subst(_gamma_to_dnf(succ_d, succ_a), e.assigns)
                    c_dnf = edge_precondition_dnf(
                        qe.from_assertion(e.guard),
                        target_d,
                        safety_d,
                        [qe.from_assertion(s) for s in earlier_sibs],
                        [qe.from_assertion(s) for s in later_sibs],
                        sol,
                        context=context,
                    )
                    parts_d.append(c_dnf)
                    parts_a.append(qe.to_assertion(c_dnf))
                except DegreeError:
                    any_quantified = True
                    target_a = substitute(succ_a, e.assigns)
                    parts_a.append(
                        quantified_precondition(e.guard, target_a, safety,
                                                earlier_sibs, later_sibs, sol)
                    )
            if any_quantified:
                gamma[l] = disj(*parts_a)
                gamma_dnf[l] = None
                quantified.add(l)
            else:
                d = qe.simplify(qe.dnf_or(*parts_d), context)
                raw_a = qe.to_assertion(d)
                hint = hints.get(l)
                if hint is not None:
                    verdict = smt.check_validity(implies(hint, raw_a),
                                                 timeout=timeout, solver=solver)
                    if verdict.kind == smt.VALID:
                        hint_note = "accepted"
                        hints_accepted.append(l)
                        gamma[l] = hint
                        gamma_dnf[l] = qe.simplify(qe.from_assertion(hint), context)
                    else:
                        hint_note = (
                            "rejected" if verdict.kind == smt.INVALID else "unknown-rejected"
                        )
                        hints_rejected.append((l, verdict.kind, verdict.model))
                        if strict_hints:
                            raise HintRejected(l, verdict.model)
                        gamma[l], gamma_dnf[l] = raw_a, d
                else:
                    gamma[l], gamma_dnf[l] = raw_a, d
        n_clauses = len(gamma_dnf[l]) if gamma_dnf[l] is not None else -1
        stat = LocationStat(l, time.monotonic() - started, n_clauses,
                            len(out), hint_note)
        stats.append(stat)
        if progress is not None:
            progress(stat)

    init_d = gamma_dnf.get(g.init_location)
    init_a = gamma.get(g.init_location, FALSE)
    if init_d is not None:
        rss_dnf = qe.simplify(dnf_subst(init_d, g.init_assigns))
        rss_condition = qe.to_assertion(rss_dnf)
    else:
        rss_dnf = None
        rss_condition = substitute(init_a, g.init_assigns)

    unreachable_locs = frozenset(reachable - fa.live)
    vacuous = set(unreachable_locs)
    for l, d in gamma_dnf.items():
        if d == qe.DNF_FALSE:
            vacuous.add(l)
    return SynthesisReport(
        gamma=gamma,
        gamma_dnf=gamma_dnf,
        rss_condition=rss_condition,
        rss_dnf=rss_dnf,
        vacuous=frozenset(vacuous),
        dead_edges=frozenset(fa.dead_edges),
        unreachable=unreachable_locs,
        stats=stats,
        hints_accepted=hints_accepted,
        hints_rejected=hints_rejected,
        quantified_locations=frozenset(quantified),
        analysis=fa,
    )


# ---------------------------------------------------------------------------
# Independent obligation checking and vacuity detection
# ---------------------------------------------------------------------------


@dataclass
class Obligation:
    location: object
    kind: str  # "final" | "unsafe" | "step"
    verdict: str
    seconds: float
    detail: str = ""


@dataclass
class ObligationReport:
    obligations: list = field(default_factory=list)

    @property
    def refuted(self) -> list:
        return [o for o in self.obligations if o.verdict == smt.INVALID]

    @property
    def ok(self) -> bool:
        return not self.refuted


def check_annotation(g: HCFG, report: SynthesisReport, safety: Assertion,
                     unsafe: frozenset, solver=None, timeout: float = 60.0) -> ObligationReport:
    """Re-verify every annotation clause with freshly rebuilt preconditions."""
    out_report = ObligationReport()
    gamma = report.gamma
    sol_cache: dict = {}
    for l in sorted(gamma, key=repr):
        started = time.monotonic()
        if l in unsafe:
            verdict = smt.check_sat(gamma[l], timeout=timeout, solver=solver)
            kind = "unsafe"
            ok = smt.UNSAT if verdict.kind == smt.UNSAT else (
                smt.INVALID if verdict.kind == smt.SAT else verdict.kind
            )
            out_report.obligations.append(
                Obligation(l, kind, smt.VALID if ok == smt.UNSAT else ok,
                           time.monotonic() - started)
            )
            continue
        if l in g.final:
            verdict = smt.check_validity(implies(gamma[l], safety),
                                         timeout=timeout, solver=solver)
            out_report.obligations.append(
                Obligation(l, "final", verdict.kind, time.monotonic() - started)
            )
            continue
        out = g.out_edges(l)
        parts: list = []
        for i, e in enumerate(out):
            if e.target not in gamma:
                continue
            flow_key = tuple(sorted(g.flows[l].items()))
            sol = sol_cache.get(flow_key)
            if sol is None:
                sol = sol_cache[flow_key] = solve_flow(dict(g.flows[l]))
            target_a = substitute(gamma[e.target], e.assigns)
            earlier_sibs = [s.guard for j, s in enumerate(out) if j < i]
            later_sibs = [s.guard for j, s in enumerate(out) if j > i]
            parts.append(quantified_precondition(e.guard, target_a, safety,
                                                 earlier_sibs, later_sibs, sol))
        goal = implies(gamma[l], disj(*parts)) if parts else implies(gamma[l], FALSE)
        verdict = smt.check_validity(goal, timeout=timeout, solver=solver)
        out_report.obligations.append(
            Obligation(l, "step", verdict.kind, time.monotonic() - started)
        )
    return out_report


def detect_vacuous(report: SynthesisReport, solver=None, timeout: float = 10.0) -> frozenset:
    """Locations that are unreachable or carry an unsatisfiable annotation."""
    out = set(report.unreachable)
    for l, d in report.gamma_dnf.items():
        if d == qe.DNF_FALSE:
            out.add(l)
        elif d is None:
            verdict = smt.check_sat(report.gamma[l], timeout=timeout, solver=solver)
            if verdict.kind == smt.UNSAT:
                out.add(l)
    return frozenset(out)
