"""Validity, satisfiability, and quantifier elimination over nonlinear reals.

Two decision routes are provided and kept strictly separate:

* an **external route** speaking SMT-LIB v2 to a child process over
  stdin/stdout (``(set-logic NRA)``/``QF_NRA``, ``(check-sat)``,
  ``(get-model)``), selected by passing a solver command or setting the
  ``RSSFORGE_SMT_SOLVER`` environment variable; and
* an **internal route** combining exact virtual-substitution quantifier
  elimination, Fourier-Motzkin linear reasoning, and model search, used
  when no external solver is configured.

A bundled reference solver (``python -m rssforge.smtsolver``) exposes the
internal route behind the SMT-LIB wire protocol, so the subprocess path is
exercised even on machines without a third-party solver installed.

Verdicts are never embellished: ``unknown`` is reported as such, and every
model attached to a ``sat``/``invalid`` verdict is re-checked concretely
before it is returned (discrepancies raise :class:`SolverContractError`).
"""

from __future__ import annotations

import os
import random
import shlex
import subprocess
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import qe
from .qe import DegreeError
from .symbolic import (
    And,
    Assertion,
    Atom,
    BoolConst,
    Implies,
    Not,
    Or,
    Quant,
    Term,
    conj,
    free_variables,
    implies,
    is_quantifier_free,
    neg,
    satisfies,
    to_sexpr,
)

ENV_SOLVER = "RSSFORGE_SMT_SOLVER"

VALID = "valid"
INVALID = "invalid"
SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


class SolverProcessError(Exception):
    """The external solver process failed to spawn or broke the protocol."""


class SolverContractError(Exception):
    """A model returned by a solver failed concrete re-verification."""


@dataclass(frozen=True)
class SolverQuery:
    assertion: Assertion
    logic: str = ""
    timeout: float = 60.0

    def effective_logic(self) -> str:
        if self.logic:
            return self.logic
        return "QF_NRA" if is_quantifier_free(self.assertion) else "NRA"


@dataclass(frozen=True)
class SolverVerdict:
    kind: str  # valid | invalid | sat | unsat | unknown
    model: Mapping[str, object] | None = None
    reason: str = ""

    def __bool__(self) -> bool:  # pragma: no cover - convenience only
        return self.kind in (VALID, UNSAT, SAT)


# ---------------------------------------------------------------------------
# SMT-LIB v2 rendering
# ---------------------------------------------------------------------------


def _render_number(c: Fraction) -> str:
    if c < 0:
        return f"(- {_render_number(-c)})"
    if c.denominator == 1:
        return f"{c.numerator}.0"
    return f"(/ {c.numerator}.0 {c.denominator}.0)"


def _render_term(t: Term) -> str:
    if t.is_zero():
        return "0.0"
    parts = []
    for mono, c in t.sorted_monomials():
        factors = []
        for v, e in mono:
            factors.extend([v] * e)
        if not factors:
            parts.append(_render_number(c))
        elif c == 1 and len(factors) == 1:
            parts.append(factors[0])
        elif c == 1:
            parts.append(f"(* {' '.join(factors)})")
        else:
            parts.append(f"(* {_render_number(c)} {' '.join(factors)})")
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _render_atom(a: Atom) -> str:
    const = a.term.coeffs.get((), Fraction(0))
    lhs = a.term - Term.const(const)
    left, right = _render_term(lhs), _render_number(-const)
    if a.op == "!=":
        return f"(not (= {left} {right}))"
    return f"({a.op} {left} {right})"


def _render(a: Assertion, renaming: dict) -> str:
    if isinstance(a, BoolConst):
        return "true" if a.value else "false"
    if isinstance(a, Atom):
        term = a.term.subst({v: Term.var(n) for v, n in renaming.items()}) if renaming else a.term
        return _render_atom(Atom(a.op, term))
    if isinstance(a, And):
        return f"(and {' '.join(_render(c, renaming) for c in a.args)})"
    if isinstance(a, Or):
        return f"(or {' '.join(_render(c, renaming) for c in a.args)})"
    if isinstance(a, Not):
        return f"(not {_render(a.arg, renaming)})"
    if isinstance(a, Implies):
        return f"(=> {_render(a.lhs, renaming)} {_render(a.rhs, renaming)})"
    if isinstance(a, Quant):
        fresh = f"_b{len(renaming) + 1}"
        inner = dict(renaming)
        inner[a.var] = fresh
        return f"({a.kind} (({fresh} Real)) {_render(a.body, inner)})"
    raise TypeError(f"unknown node {a!r}")


def to_smtlib(a: Assertion) -> str:
    """Deterministic SMT-LIB v2 rendering of an assertion (expression only)."""
    return _render(a, {})


def to_smtlib_script(a: Assertion, logic: str | None = None) -> str:
    """A full (set-logic …) / declare-const / assert / check-sat script."""
    logic = logic or SolverQuery(a).effective_logic()
    lines = [f"(set-logic {logic})"]
    for v in sorted(free_variables(a)):
        lines.append(f"(declare-const {v} Real)")
    lines.append(f"(assert {to_smtlib(a)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Model verification
# ---------------------------------------------------------------------------

MODEL_TOL = 1e-6


def _holds_with_tol(a: Assertion, store: Mapping[str, object], tol: float) -> bool:
    if isinstance(a, BoolConst):
        return a.value
    if isinstance(a, Atom):
        v = float(a.term.eval(store))
        if a.op == "=":
            return abs(v) <= tol
        if a.op == "!=":
            return abs(v) > tol
        return v <= tol  # <= and < alike, up to tolerance
    if isinstance(a, And):
        return all(_holds_with_tol(c, store, tol) for c in a.args)
    if isinstance(a, Or):
        return any(_holds_with_tol(c, store, tol) for c in a.args)
    if isinstance(a, Not):
        return not _holds_with_tol(a.arg, store, tol)
    if isinstance(a, Implies):
        return (not _holds_with_tol(a.lhs, store, tol)) or _holds_with_tol(a.rhs, store, tol)
    raise TypeError(f"unknown node {a!r}")


def _verify_model(a: Assertion, model: Mapping[str, object]) -> Mapping[str, object]:
    """Re-check a claimed model of ``a``; raise on discrepancy."""
    if not is_quantifier_free(a):
        return model
    store = dict(model)
    for v in free_variables(a):
        store.setdefault(v, Fraction(0))
    exact = {k: (v if isinstance(v, Fraction) else Fraction(v)) for k, v in store.items()}
    if satisfies(exact, a):
        return store
    if _holds_with_tol(a, store, MODEL_TOL):
        return store
    raise SolverContractError(f"model {store} does not satisfy {to_sexpr(a)}")


# ---------------------------------------------------------------------------
# Internal route: model search
# ---------------------------------------------------------------------------


def _lin_model(constraints: Sequence[qe.LinCon], variables: Sequence[str]):
    """Exact model of a linear system via Fourier-Motzkin back-substitution."""
    stages = []
    cons = [(dict(c), k, s) for c, k, s in constraints]
    for v in variables:
        stages.append((v, [c for c in cons if v in c[0]]))
        lows = [c for c in cons if c[0].get(v, 0) < 0]
        highs = [c for c in cons if c[0].get(v, 0) > 0]
        rest = [c for c in cons if not c[0].get(v, 0)]
        new = list(rest)
        for lc, lk, ls in lows:
            for hc, hk, hs in highs:
                la, ha = lc[v], hc[v]
                coeffs = {}
                for u in set(lc) | set(hc):
                    if u == v:
                        continue
                    cc = lc.get(u, Fraction(0)) * ha - hc.get(u, Fraction(0)) * la
                    if cc:
                        coeffs[u] = cc
                new.append((coeffs, lk * ha - hk * la, ls or hs))
        if len(new) > qe._FM_LIMIT:
            return None
        cons = new
    for coeffs, const, strict in cons:
        if coeffs or const > 0 or (strict and const == 0):
            if not coeffs:
                return None
    model: dict[str, Fraction] = {}
    for v, vcons in reversed(stages):
        lo: tuple[Fraction, bool] | None = None
        hi: tuple[Fraction, bool] | None = None
        for coeffs, const, strict in vcons:
            a = coeffs[v]
            rest = const + sum(c * model[u] for u, c in coeffs.items() if u != v)
            bound = -rest / a
            if a > 0:  # v <= bound (or <)
                if hi is None or bound < hi[0] or (bound == hi[0] and strict):
                    hi = (bound, strict)
            else:  # v >= bound
                if lo is None or bound > lo[0] or (bound == lo[0] and strict):
                    lo = (bound, strict)
        if lo is None and hi is None:
            model[v] = Fraction(0)
        elif lo is None:
            model[v] = hi[0] - 1 if hi[1] else hi[0]
        elif hi is None:
            model[v] = lo[0] + 1 if lo[1] else lo[0]
        else:
            if lo[0] > hi[0] or (lo[0] == hi[0] and (lo[1] or hi[1])):
                return None
            model[v] = (lo[0] + hi[0]) / 2 if (lo[1] or hi[1]) else lo[0]
    return model


def _clause_holds(clause: qe.Clause, store: Mapping[str, Fraction], tol: float = 0.0) -> bool:
    for p, m in clause:
        v = p.eval(store)
        if tol:
            v = float(v)
            ok = ((m & qe.NEG) and v < -tol) or ((m & qe.POS) and v > tol) or (
                (m & qe.ZERO) and abs(v) <= tol
            )
        else:
            ok = ((m & qe.NEG) and v < 0) or ((m & qe.POS) and v > 0) or ((m & qe.ZERO) and v == 0)
        if not ok:
            return False
    return True


def _sample_clause(clause: qe.Clause, variables: Sequence[str], rng: random.Random, rounds: int):
    grids = [Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(10), Fraction(-10)]
    for g in grids:
        store = {v: g for v in variables}
        if _clause_holds(clause, store):
            return store
    for _ in range(rounds):
        store = {
            v: Fraction(rng.randint(-400, 400), rng.choice((1, 2, 4, 5, 10, 20)))
            for v in variables
        }
        if _clause_holds(clause, store):
            return store
    return None


def _univariate_value(clause: qe.Clause, var: str, known: Mapping[str, Fraction]):
    """A value for ``var`` satisfying a clause whose other variables are fixed."""
    import numpy as np

    polys = []
    for p, m in clause:
        coeffs = [c.eval(known) for c in p.coefficients_in(var)]
        polys.append((coeffs, m))
    # candidate points: rational roots, float roots, interval midpoints
    candidates: list[Fraction] = [Fraction(0)]
    floats: list[float] = []
    for coeffs, _ in polys:
        arr = [float(c) for c in reversed(coeffs)]
        while arr and arr[0] == 0.0:
            arr = arr[1:]
        if len(arr) >= 2:
            roots = np.roots(arr)
            floats.extend(float(r.real) for r in roots if abs(r.imag) < 1e-9)
    floats.sort()
    for r in floats:
        candidates.append(Fraction(r).limit_denominator(10**9))
    for a, b in zip(floats, floats[1:]):
        candidates.append(Fraction((a + b) / 2).limit_denominator(10**6))
    if floats:
        candidates.append(Fraction(floats[0] - 1).limit_denominator(10**6))
        candidates.append(Fraction(floats[-1] + 1).limit_denominator(10**6))
    for cand in candidates:
        store = dict(known)
        store[var] = cand
        if _clause_holds(clause, store):
            return cand
    for cand in candidates:  # tolerant pass for irrational boundary points
        store = dict(known)
        store[var] = cand
        if _clause_holds(clause, store, tol=1e-7):
            return cand
    return None


def _clause_model(clause: qe.Clause, rng: random.Random, deadline: float):
    variables = sorted({v for p, _ in clause for v in p.variables()})
    if not variables:
        return {} if _clause_holds(clause, {}) else None
    found = _sample_clause(clause, variables, rng, rounds=300)
    if found is not None:
        return found
    cons = qe.clause_constraints(clause)
    nonlinear = [
        (p, m) for p, m in clause if qe._constraints_of_literal(p, m) is None
    ]
    if not nonlinear:
        return _lin_model(cons, variables)
    # eliminate variables one by one, then back-substitute
    if time.monotonic() > deadline:
        return None
    stages: list[tuple[str, qe.Dnf]] = []
    d: qe.Dnf = (clause,)
    try:
        for v in variables:
            stages.append((v, d))
            d = qe.exists_elim(v, d)
    except DegreeError:
        return None
    if d == qe.DNF_FALSE:
        return None
    known: dict[str, Fraction] = {}
    for v, dv in reversed(stages):
        value = None
        for cl in dv:
            projected = [(p, m) for p, m in cl if v in p.variables() or not (
                set(p.variables()) - set(known) - {v}
            )]
            if any(set(p.variables()) - set(known) - {v} for p, m in cl):
                continue
            if not _clause_holds(tuple((p, m) for p, m in cl if v not in p.variables()),
                                 known, tol=1e-9):
                continue
            value = _univariate_value(tuple(projected), v, known)
            if value is not None:
                break
        if value is None:
            return None
        known[v] = value
    return known


# ---------------------------------------------------------------------------
# Internal route: decision
# ---------------------------------------------------------------------------


def _internal_check_sat(a: Assertion, timeout: float) -> SolverVerdict:
    deadline = time.monotonic() + timeout
    try:
        qf = a if is_quantifier_free(a) else qe.eliminate(a)
    except DegreeError as exc:
        return SolverVerdict(UNKNOWN, reason=f"quantifier elimination failed: {exc}")
    try:
        d = qe.simplify(qe.from_assertion(qf))
    except DegreeError as exc:  # pragma: no cover - factorization never raises
        return SolverVerdict(UNKNOWN, reason=str(exc))
    if d == qe.DNF_FALSE:
        return SolverVerdict(UNSAT)
    rng = random.Random(12345)
    for clause in d:
        model = _clause_model(clause, rng, deadline)
        if model is not None:
            return SolverVerdict(SAT, model=_verify_model(qf, model))
        if time.monotonic() > deadline:
            return SolverVerdict(UNKNOWN, reason="timeout")
    # no model found; decide each clause exactly by full elimination
    saw_unknown = False
    for clause in d:
        variables = sorted({v for p, _ in clause for v in p.variables()})
        dd: qe.Dnf = (clause,)
        try:
            for v in variables:
                dd = qe.exists_elim(v, dd)
                if time.monotonic() > deadline:
                    return SolverVerdict(UNKNOWN, reason="timeout")
        except DegreeError:
            saw_unknown = True
            continue
        if dd != qe.DNF_FALSE:
            # satisfiable, but the model search above came back empty-handed
            return SolverVerdict(UNKNOWN, reason="satisfiable but no concrete model found")
    if saw_unknown:
        return SolverVerdict(UNKNOWN, reason="degree blow-up in elimination")
    return SolverVerdict(UNSAT)


# ---------------------------------------------------------------------------
# External route: SMT-LIB session over a child process
# ---------------------------------------------------------------------------


def default_solver_command() -> list[str] | None:
    cmd = os.environ.get(ENV_SOLVER, "").strip()
    return shlex.split(cmd) if cmd else None


class SmtSession:
    """One external solver process; queries are serialized, never shared."""

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SolverProcessError(f"cannot spawn solver {self.command}: {exc}") from exc
        self._fresh = True

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _send(self, text: str) -> None:
        try:
            self._proc.stdin.write(text)
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise SolverProcessError(f"solver pipe broken: {exc}") from exc

    def _read_line(self) -> str:
        line = self._proc.stdout.readline()
        if not line:
            raise SolverProcessError("solver closed its output stream")
        return line.strip()

    def _read_sexpr(self) -> str:
        chunks = []
        depth = 0
        while True:
            line = self._read_line()
            chunks.append(line)
            depth += line.count("(") - line.count(")")
            if depth <= 0:
                return " ".join(chunks)

    def check_sat(self, a: Assertion, timeout: float = 60.0) -> SolverVerdict:
        if not self._fresh:
            self._send("(reset)\n")
        self._fresh = False
        logic = SolverQuery(a, timeout=timeout).effective_logic()
        variables = sorted(free_variables(a))
        script = [f"(set-logic {logic})"]
        script += [f"(declare-const {v} Real)" for v in variables]
        script += [f"(assert {to_smtlib(a)})", "(check-sat)"]
        self._send("\n".join(script) + "\n")
        status = self._read_line()
        while status.startswith(";"):
            status = self._read_line()
        if status == "unsat":
            return SolverVerdict(UNSAT)
        if status == "unknown":
            return SolverVerdict(UNKNOWN, reason="solver returned unknown")
        if status != "sat":
            raise SolverProcessError(f"unexpected solver answer {status!r}")
        if not variables:
            return SolverVerdict(SAT, model={})
        self._send("(get-model)\n")
        model_text = self._read_sexpr()
        model = _parse_model(model_text)
        if model is None:
            return SolverVerdict(UNKNOWN, reason="unparseable model")
        return SolverVerdict(SAT, model=_verify_model(a, model))


def _parse_model(text: str) -> dict | None:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()

    def read(pos):
        if tokens[pos] != "(":
            return tokens[pos], pos + 1
        out = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = read(pos)
            out.append(node)
        return out, pos + 1

    try:
        tree, _ = read(0)
    except IndexError:
        return None
    if isinstance(tree, list) and tree and tree[0] == "model":
        tree = tree[1:]
    model: dict[str, Fraction] = {}
    for entry in tree if isinstance(tree, list) else []:
        if not (isinstance(entry, list) and len(entry) >= 5 and entry[0] == "define-fun"):
            continue
        name, value = entry[1], entry[4]
        num = _eval_model_value(value)
        if num is None:
            return None
        model[name] = num
    return model


def _eval_model_value(node) -> Fraction | None:
    if isinstance(node, str):
        try:
            return Fraction(node)
        except ValueError:
            return None
    if not node:
        return None
    head = node[0]
    args = [_eval_model_value(c) for c in node[1:]]
    if any(a is None for a in args):
        return None
    if head == "-":
        return -args[0] if len(args) == 1 else args[0] - args[1]
    if head == "+":
        total = Fraction(0)
        for a in args:
            total += a
        return total
    if head == "*":
        total = Fraction(1)
        for a in args:
            total *= a
        return total
    if head == "/":
        return args[0] / args[1] if args[1] else None
    return None


class SessionPool:
    """Hands out single-owner sessions; safe for a pool of workers."""

    def __init__(self, command: Sequence[str], size: int = 1):
        import queue

        self._queue: "queue.Queue[SmtSession]" = queue.Queue()
        for _ in range(size):
            self._queue.put(SmtSession(command))

    def acquire(self) -> SmtSession:
        return self._queue.get()

    def release(self, session: SmtSession) -> None:
        self._queue.put(session)

    def close(self) -> None:
        while not self._queue.empty():
            self._queue.get_nowait().close()


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------


def _resolve(solver):
    """Normalize the ``solver`` argument to a session, a command, or None."""
    if solver is None:
        return default_solver_command()
    if isinstance(solver, (SmtSession, SessionPool)):
        return solver
    if isinstance(solver, str):
        return shlex.split(solver)
    return list(solver)


def check_sat(a: Assertion, timeout: float = 60.0, solver=None) -> SolverVerdict:
    """Satisfiability with model extraction."""
    resolved = _resolve(solver)
    if resolved is None:
        return _internal_check_sat(a, timeout)
    if isinstance(resolved, SessionPool):
        session = resolved.acquire()
        try:
            return session.check_sat(a, timeout)
        finally:
            resolved.release(session)
    if isinstance(resolved, SmtSession):
        return resolved.check_sat(a, timeout)
    with SmtSession(resolved) as session:
        return session.check_sat(a, timeout)


def check_validity(a: Assertion, timeout: float = 60.0, solver=None) -> SolverVerdict:
    """Validity via unsatisfiability of the negation."""
    verdict = check_sat(neg(a), timeout=timeout, solver=solver)
    if verdict.kind == UNSAT:
        return SolverVerdict(VALID)
    if verdict.kind == SAT:
        return SolverVerdict(INVALID, model=verdict.model)
    return verdict


@dataclass(frozen=True)
class QEResult:
    assertion: Assertion
    eliminated: bool
    reason: str = ""


def eliminate_quantifiers(a: Assertion, timeout: float = 60.0, solver=None) -> QEResult:
    """Best-effort quantifier elimination, accepted only when provably equivalent."""
    if is_quantifier_free(a):
        return QEResult(a, True)
    try:
        candidate = qe.eliminate(a)
    except DegreeError as exc:
        return QEResult(a, False, reason=f"elimination failed: {exc}")
    equiv = conj(implies(a, candidate), implies(candidate, a))
    verdict = check_validity(equiv, timeout=timeout, solver=solver)
    if verdict.kind == VALID:
        return QEResult(candidate, True)
    return QEResult(a, False, reason=f"equivalence check returned {verdict.kind}")
