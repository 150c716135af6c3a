"""Exact quantifier elimination for quadratic real arithmetic.

This module implements virtual substitution (the Loos-Weispfenning method,
extended to quadratic occurrences of the eliminated variable) together with
the normal form it operates on:

* formulas are kept in a disjunctive normal form whose literals are *sign
  constraints*: a canonical irreducible polynomial paired with the set of
  signs (negative / zero / positive) it is allowed to take;
* polynomials are factored exactly over the rationals on creation, so a sign
  constraint on a product becomes a small boolean combination of constraints
  on irreducible factors — this keeps degrees in the quantified time
  variables low enough for virtual substitution throughout the backward
  synthesis pass;
* conjunctions of linear literals are checked for feasibility with exact
  Fourier-Motzkin elimination, which powers simplification, dead-branch
  pruning, and the linear part of the bundled decision engine.

Everything is exact rational arithmetic; no floating point is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import sympy

from .flows import term_derivative
from .symbolic import (
    Assertion,
    Atom,
    And,
    BoolConst,
    FALSE,
    Implies,
    Not,
    Or,
    Quant,
    TRUE,
    Term,
    SymbolicError,
    term_to_sexpr,
)

# Sign masks ------------------------------------------------------------------

NEG = 1
ZERO = 2
POS = 4
ALL = NEG | ZERO | POS

_OP_MASK = {"<": NEG, "<=": NEG | ZERO, "=": ZERO, "!=": NEG | POS}


def _mirror(mask: int) -> int:
    """Swap the NEG and POS bits (the mask for the negated polynomial)."""
    out = mask & ZERO
    if mask & NEG:
        out |= POS
    if mask & POS:
        out |= NEG
    return out


class DegreeError(SymbolicError):
    """An irreducible factor exceeds degree 2 in the eliminated variable."""


# Canonical polynomials --------------------------------------------------------


def canon(t: Term) -> tuple[Term, bool]:
    """Primitive part with positive leading (grlex) coefficient.

    Returns (canonical term, flipped) where flipped records a sign change.
    """
    prim, _ = t.content_normalized()
    if prim.leading_coefficient() < 0:
        return -prim, True
    return prim, False


_FACTOR_CACHE: dict[Term, tuple[int, tuple[tuple[Term, int], ...]]] = {}


def _to_sympy_poly(t: Term, gens: Sequence[str]):
    idx = {v: i for i, v in enumerate(gens)}
    d = {}
    for mono, c in t.coeffs.items():
        exps = [0] * len(gens)
        for v, e in mono:
            exps[idx[v]] = e
        d[tuple(exps)] = sympy.Rational(c.numerator, c.denominator)
    return sympy.Poly.from_dict(d, *[sympy.Symbol(v) for v in gens])


def _from_sympy_poly(p, gens: Sequence[str]) -> Term:
    coeffs = {}
    for exps, c in p.as_dict().items():
        mono = tuple(sorted((gens[i], e) for i, e in enumerate(exps) if e))
        c = sympy.Rational(c)
        coeffs[mono] = Fraction(int(c.p), int(c.q))
    return Term(coeffs)


def factorize(t: Term) -> tuple[int, tuple[tuple[Term, int], ...]]:
    """Exact factorization over Q into canonical irreducible factors.

    Returns (sign, factors) with sign in {-1, +1} such that
    sign * prod(f_i ** e_i) has the same sign as t everywhere.
    """
    cached = _FACTOR_CACHE.get(t)
    if cached is not None:
        return cached
    gens = sorted(t.variables())
    if not gens:
        raise SymbolicError("cannot factor a constant term")
    poly = _to_sympy_poly(t, gens)
    coeff, factors = poly.factor_list()
    sign = 1 if sympy.Rational(coeff) > 0 else -1
    out = []
    for f, e in factors:
        ft = _from_sympy_poly(f, [str(g) for g in f.gens])
        cf, flipped = canon(ft)
        if flipped and e % 2 == 1:
            sign = -sign
        out.append((cf, e))
    out.sort(key=lambda fe: term_to_sexpr(fe[0]))
    result = (sign, tuple(out))
    _FACTOR_CACHE[t] = result
    return result


# DNF of sign constraints -------------------------------------------------------
#
# A clause maps canonical irreducible polynomials to allowed-sign masks and is
# stored as a tuple of (Term, mask) pairs sorted by serialization; a Dnf is a
# tuple of clauses.  () is false; ((),) is true.

Clause = tuple
Dnf = tuple

DNF_TRUE: Dnf = ((),)
DNF_FALSE: Dnf = ()


def _clause_key(item) -> str:
    return term_to_sexpr(item[0])


def make_clause(pairs: Mapping[Term, int]) -> Clause | None:
    """Freeze a literal map; None encodes a contradictory (false) clause."""
    out = []
    for p, m in pairs.items():
        if m == 0:
            return None
        if m != ALL:
            out.append((p, m))
    return tuple(sorted(out, key=_clause_key))


def clause_and(a: Clause, b: Clause) -> Clause | None:
    d = dict(a)
    for p, m in b:
        nm = d.get(p, ALL) & m
        if nm == 0:
            return None
        d[p] = nm
    return make_clause(d)


def dnf_and(*parts: Dnf) -> Dnf:
    acc: Dnf = DNF_TRUE
    for part in sorted(parts, key=len):
        if not part:
            return DNF_FALSE
        nxt = []
        for ca in acc:
            for cb in part:
                c = clause_and(ca, cb)
                if c is not None:
                    nxt.append(c)
        acc = _dedupe(nxt)
        if not acc:
            return DNF_FALSE
    return acc


def _clause_subsumes(weak: Clause, strong: Clause) -> bool:
    """True when ``strong`` implies ``weak`` literal-by-literal."""
    d = dict(strong)
    for p, m in weak:
        sm = d.get(p)
        if sm is None or (sm & ~m):
            return False
    return True


def _dedupe(clauses: Iterable[Clause]) -> Dnf:
    seen = []
    for c in clauses:
        if any(_clause_subsumes(k, c) for k in seen):
            continue
        seen = [k for k in seen if not _clause_subsumes(c, k)]
        seen.append(c)
    return tuple(seen)


def dnf_or(*parts: Dnf) -> Dnf:
    out = []
    for part in parts:
        out.extend(part)
    return _dedupe(out)


def dnf_not(d: Dnf) -> Dnf:
    if not d:
        return DNF_TRUE
    # complement of each clause is a disjunction of single complemented literals
    parts = []
    for clause in d:
        if not clause:
            return DNF_FALSE
        lits = []
        for p, m in clause:
            cm = ALL & ~m
            if cm:
                lits.append(((p, cm),))
        parts.append(tuple(lits) if lits else DNF_FALSE)
    return dnf_and(*parts)


def literal(t: Term, mask: int) -> Dnf:
    """Sign constraint on an arbitrary polynomial, factored into a Dnf."""
    if mask == 0:
        return DNF_FALSE
    if t.is_constant():
        v = t.constant_value()
        sign = NEG if v < 0 else (ZERO if v == 0 else POS)
        return DNF_TRUE if (mask & sign) else DNF_FALSE
    if mask == ALL:
        return DNF_TRUE
    ct, flipped = canon(t)
    if flipped:
        mask = _mirror(mask)
    sign, factors = factorize(ct)
    if len(factors) == 1 and factors[0][1] == 1 and sign == 1:
        return ((tuple([(factors[0][0], mask)])),)
    return _sign_combinations(sign, factors, mask)


def _sign_combinations(sign: int, factors, mask: int) -> Dnf:
    signs = (-1, 0, 1)
    bit = {-1: NEG, 0: ZERO, 1: POS}
    clauses = []

    def rec(i: int, acc: dict, prod: int):
        if prod == 0 and i < len(factors):
            # zero absorbs; remaining factors unconstrained
            if mask & ZERO:
                clauses.append(make_clause(acc))
            return
        if i == len(factors):
            s = bit[prod]
            if mask & s:
                clauses.append(make_clause(acc))
            return
        f, e = factors[i]
        for s in signs:
            acc2 = dict(acc)
            acc2[f] = acc2.get(f, ALL) & bit[s]
            if acc2[f] == 0:
                continue
            contrib = s if e % 2 == 1 else (1 if s != 0 else 0)
            rec(i + 1, acc2, prod * contrib)

    rec(0, {}, sign)
    out = _dedupe([c for c in clauses if c is not None])
    return _merge_clauses(out)


def _merge_clauses(d: Dnf) -> Dnf:
    """Union masks of clauses that differ in a single polynomial."""
    clauses = list(d)
    changed = True
    while changed:
        changed = False
        for i in range(len(clauses)):
            if changed:
                break
            for j in range(i + 1, len(clauses)):
                a, b = clauses[i], clauses[j]
                da, db = dict(a), dict(b)
                if set(da) != set(db):
                    continue
                diff = [p for p in da if da[p] != db[p]]
                if len(diff) == 1:
                    da[diff[0]] |= db[diff[0]]
                    merged = make_clause(da)
                    clauses[i] = merged
                    del clauses[j]
                    changed = True
                    break
    return _dedupe(clauses)


# Assertion <-> Dnf -------------------------------------------------------------


def from_assertion(a: Assertion, negate: bool = False) -> Dnf:
    if isinstance(a, BoolConst):
        return DNF_FALSE if (a.value == negate) else DNF_TRUE
    if isinstance(a, Atom):
        mask = _OP_MASK[a.op]
        if negate:
            mask = ALL & ~mask
        return literal(a.term, mask)
    if isinstance(a, And):
        parts = [from_assertion(c, negate) for c in a.args]
        return dnf_or(*parts) if negate else dnf_and(*parts)
    if isinstance(a, Or):
        parts = [from_assertion(c, negate) for c in a.args]
        return dnf_and(*parts) if negate else dnf_or(*parts)
    if isinstance(a, Not):
        return from_assertion(a.arg, not negate)
    if isinstance(a, Implies):
        if negate:
            return dnf_and(from_assertion(a.lhs), from_assertion(a.rhs, True))
        return dnf_or(from_assertion(a.lhs, True), from_assertion(a.rhs))
    if isinstance(a, Quant):
        raise SymbolicError("quantified assertion in quantifier-free context")
    raise SymbolicError(f"unknown node {a!r}")


_MASK_ATOM: dict[int, Callable[[Term], Atom]] = {
    NEG: lambda p: Atom("<", p),
    NEG | ZERO: lambda p: Atom("<=", p),
    ZERO: lambda p: Atom("=", p),
    NEG | POS: lambda p: Atom("!=", p),
    POS: lambda p: Atom("<", -p),
    ZERO | POS: lambda p: Atom("<=", -p),
}


def to_assertion(d: Dnf) -> Assertion:
    if not d:
        return FALSE
    clauses = []
    for clause in d:
        lits = [_MASK_ATOM[m](p) for p, m in clause]
        clauses.append(And(lits) if len(lits) > 1 else (lits[0] if lits else TRUE))
    if len(clauses) == 1:
        return clauses[0]
    return Or(clauses)


def map_terms(d: Dnf, fn: Callable[[Term], Term]) -> Dnf:
    """Apply a polynomial map to every literal, re-normalizing the result."""
    out = []
    for clause in d:
        parts = [literal(fn(p), m) for p, m in clause]
        out.append(dnf_and(*parts) if parts else DNF_TRUE)
    return dnf_or(*out)


# Linear reasoning (Fourier-Motzkin) --------------------------------------------

# A linear constraint is (coeffs: dict var->Fraction, const: Fraction, strict)
# meaning sum(coeffs[v]*v) + const <= 0 (or < 0 when strict).
LinCon = tuple


def linear_parts(t: Term):
    """Return (coeffs, const) if t has total degree <= 1, else None."""
    coeffs: dict[str, Fraction] = {}
    const = Fraction(0)
    for mono, c in t.coeffs.items():
        if not mono:
            const = c
        elif len(mono) == 1 and mono[0][1] == 1:
            coeffs[mono[0][0]] = c
        else:
            return None
    return coeffs, const


def _constraints_of_literal(p: Term, mask: int) -> list[LinCon] | None:
    """Linear constraints equivalent to a convex literal; None if unusable."""
    lin = linear_parts(p)
    if lin is None:
        return None
    coeffs, const = lin
    neg = ({v: -c for v, c in coeffs.items()}, -const)
    if mask == NEG:
        return [(coeffs, const, True)]
    if mask == NEG | ZERO:
        return [(coeffs, const, False)]
    if mask == ZERO:
        return [(coeffs, const, False), (neg[0], neg[1], False)]
    if mask == POS:
        return [(neg[0], neg[1], True)]
    if mask == ZERO | POS:
        return [(neg[0], neg[1], False)]
    return None  # disequalities and trivial masks don't cut convexly


_FM_LIMIT = 600


def _lp_screen(cons: list) -> bool | None:
    """Float-LP feasibility screen; True is trusted, anything else is not.

    Reporting "feasible" can only weaken downstream pruning, which is always
    sound, so the solver's word is taken at face value.  "Infeasible" must be
    *proven*, so those cases (and any numerical trouble) return None and the
    caller falls back to exact Fourier-Motzkin.
    """
    try:
        from scipy.optimize import linprog
    except ImportError:  # pragma: no cover - scipy is a hard dependency
        return None
    variables = sorted({v for c, _, _ in cons for v in c})
    if not variables:
        return None
    index = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    has_strict = any(s for _, _, s in cons)
    width = n + 1 if has_strict else n
    rows, rhs = [], []
    for coeffs, const, strict in cons:
        row = [0.0] * width
        for v, c in coeffs.items():
            row[index[v]] = float(c)
        if strict:
            row[n] = 1.0  # c.x + const + t <= 0 with t > 0 witnesses strictness
        rows.append(row)
        rhs.append(-float(const))
    if has_strict:
        cap = [0.0] * width
        cap[n] = 1.0
        rows.append(cap)
        rhs.append(1.0)
        objective = [0.0] * n + [-1.0]
    else:
        objective = [0.0] * width
    try:
        res = linprog(objective, A_ub=rows, b_ub=rhs,
                      bounds=[(None, None)] * width, method="highs")
    except ValueError:  # pragma: no cover - malformed input
        return None
    if res.status != 0:
        return None
    if has_strict and not res.x[n] > 1e-9:
        return None
    return True


_feasible_cache: dict = {}


def _cache_key(cons) -> tuple:
    return tuple(sorted(
        (tuple(sorted(c.items())), k, s) for c, k, s in cons
    ))


def lin_feasible(constraints: Sequence[LinCon]) -> bool:
    """Exact linear feasibility; False means *proven* infeasible.

    A float LP screens out the (common) clearly-feasible case; everything
    else is decided by exact Fourier-Motzkin elimination over rationals,
    with an exact rational simplex as backstop when FM blows up.
    """
    cons = [(dict(c), k, s) for c, k, s in constraints]
    key = _cache_key(cons)
    hit = _feasible_cache.get(key)
    if hit is not None:
        return hit
    if _lp_screen(cons) is True:
        _feasible_cache[key] = True
        return True
    result = _fm_feasible(cons)
    if result is None:
        result = _simplex_feasible(cons)
    _feasible_cache[key] = result
    return result


def _simplex_feasible(cons: list) -> bool:
    """Exact feasibility by rational simplex: maximize a slack t with
    strict rows tightened to c.x + t <= -k; feasible iff the optimum t is
    positive (over the rationals a strict solution always has room)."""
    from sympy import Rational, Symbol
    from sympy.solvers.simplex import InfeasibleLPError, lpmax

    variables = sorted({v for c, _, _ in cons for v in c})
    syms = {v: Symbol(v) for v in variables}
    slack = Symbol("_slack0")
    while slack.name in variables:
        slack = Symbol(slack.name + "_")
    system = []
    for coeffs, const, strict in cons:
        e = sum((Rational(c.numerator, c.denominator) * syms[v]
                 for v, c in coeffs.items()),
                Rational(const.numerator, const.denominator))
        system.append((e + slack <= 0) if strict else (e <= 0))
    system.append(slack <= 1)
    system.append(slack >= 0)
    try:
        opt, _ = lpmax(slack, system)
    except InfeasibleLPError:
        return False
    return opt > 0


def _fm_feasible(fractional: list) -> bool | None:
    # scale every row to integers once; FM only adds and multiplies rows, so
    # the whole elimination stays in (cheap) machine/long integers, with a
    # per-row gcd reduction to keep coefficients from exploding
    cons = []
    for coeffs, const, strict in fractional:
        denom = math.lcm(const.denominator,
                         *(c.denominator for c in coeffs.values()))
        row = {v: int(c * denom) for v, c in coeffs.items()}
        cons.append((row, int(const * denom), strict))
    while True:
        cons = [c for c in cons if c[0] or c[1] > 0 or (c[2] and c[1] >= 0)]
        for coeffs, const, strict in cons:
            if not coeffs and (const > 0 or (strict and const == 0)):
                return False
        variables = sorted({v for c, _, _ in cons for v in c})
        if not variables:
            return True
        # pick the variable with the cheapest elimination
        def cost(v):
            lo = sum(1 for c, _, _ in cons if c.get(v, 0) < 0)
            hi = sum(1 for c, _, _ in cons if c.get(v, 0) > 0)
            return lo * hi - lo - hi

        var = min(variables, key=cost)
        lows, highs, rest = [], [], []
        for coeffs, const, strict in cons:
            a = coeffs.get(var, 0)
            if a > 0:
                highs.append((coeffs, const, strict, a))
            elif a < 0:
                lows.append((coeffs, const, strict, a))
            else:
                rest.append((coeffs, const, strict))
        new = rest
        for lc, lk, ls, la in lows:
            for hc, hk, hs, ha in highs:
                coeffs = {}
                for v in set(lc) | set(hc):
                    if v == var:
                        continue
                    c = lc.get(v, 0) * ha - hc.get(v, 0) * la
                    if c:
                        coeffs[v] = c
                const = lk * ha - hk * la
                g = math.gcd(const, *coeffs.values())
                if g > 1:
                    coeffs = {v: c // g for v, c in coeffs.items()}
                    const //= g
                new.append((coeffs, const, ls or hs))
        if len(new) > _FM_LIMIT:
            return None  # give up; the caller falls back to exact simplex
        cons = new


def clause_constraints(clause: Clause) -> list[LinCon]:
    out = []
    for p, m in clause:
        cs = _constraints_of_literal(p, m)
        if cs:
            out.extend(cs)
    return out


def clause_feasible(clause: Clause, context: Sequence[LinCon] = ()) -> bool:
    return lin_feasible(list(context) + clause_constraints(clause))


def _complement_pieces(mask: int) -> list[int]:
    """Convex pieces of the complement of a mask."""
    cm = ALL & ~mask
    if cm == NEG | POS:
        return [NEG, POS]
    return [cm] if cm else []


def simplify_clause(clause: Clause, context: Sequence[LinCon] = ()) -> Clause | None:
    """Drop literals implied by the rest of the clause; None if infeasible.

    The context participates only in the feasibility check (dropping a whole
    clause strengthens a disjunction, which is always sound for annotations);
    literal removal relies on the clause's own literals alone, so the clause
    stays logically equivalent.
    """
    if not clause_feasible(clause, context):
        return None
    lits = list(clause)
    i = 0
    while i < len(lits):
        p, m = lits[i]
        rest = lits[:i] + lits[i + 1 :]
        base: list[LinCon] = []
        for q, n in rest:
            cs = _constraints_of_literal(q, n)
            if cs:
                base.extend(cs)
        redundant = True
        for piece in _complement_pieces(m):
            cs = _constraints_of_literal(p, piece)
            if cs is None or lin_feasible(base + cs):
                redundant = False
                break
        if redundant:
            lits = rest
        else:
            i += 1
    return tuple(lits)


_simplify_cache: dict = {}


def _context_key(context: Sequence[LinCon]) -> tuple:
    return tuple(sorted(
        (tuple(sorted(c.items())), k, s) for c, k, s in context
    ))


def simplify(d: Dnf, context: Sequence[LinCon] = ()) -> Dnf:
    # identical clauses recur heavily across annotation layers, and
    # simplify_clause runs many exact feasibility checks, so memoize it
    ctx = _context_key(context) if context else ()
    out = []
    for clause in d:
        key = (clause, ctx)
        if key in _simplify_cache:
            s = _simplify_cache[key]
        else:
            s = simplify_clause(clause, context)
            _simplify_cache[key] = s
        if s is not None:
            out.append(s)
    return _merge_clauses(_dedupe(out))


# Virtual substitution -----------------------------------------------------------


@dataclass(frozen=True)
class Root:
    """The value (p + q*sqrt(d)) / s, with guard s != 0 and d >= 0."""

    p: Term
    q: Term
    s: Term
    d: Term
    eps: bool = False  # substitute the point just above the root


MINF = "minus_infinity"


def _coeff_list(t: Term, var: str) -> list[Term]:
    return t.coefficients_in(var)


def _roots_of(p: Term, var: str, eps: bool) -> list[tuple[Dnf, Root]]:
    cs = _coeff_list(p, var)
    deg = len(cs) - 1
    if deg == 1:
        c0, c1 = cs
        guard = literal(c1, NEG | POS)
        return [(guard, Root(-c0, Term(), c1, Term(), eps))]
    if deg == 2:
        c0, c1, c2 = cs
        disc = c1 * c1 - Term.const(4) * c2 * c0
        gq = dnf_and(literal(c2, NEG | POS), literal(disc, ZERO | POS))
        glin = dnf_and(literal(c2, ZERO), literal(c1, NEG | POS))
        two_c2 = Term.const(2) * c2
        return [
            (gq, Root(-c1, Term.const(1), two_c2, disc, eps)),
            (gq, Root(-c1, Term.const(-1), two_c2, disc, eps)),
            (glin, Root(-c0, Term(), c1, Term(), eps)),
        ]
    raise DegreeError(
        f"degree {deg} in {var!r} exceeds the quadratic virtual-substitution range"
    )


def _eval_at_root(p: Term, var: str, r: Root) -> tuple[Term, Term]:
    """Return (A, B) with s^m * p(r) == A + B*sqrt(d) for an even power m."""
    cs = _coeff_list(p, var)
    deg = len(cs) - 1
    m = deg + (deg % 2)
    # powers of (p + q sqrt(d)) as (A_i, B_i)
    A, B = Term.const(1), Term()
    powers = [(A, B)]
    for _ in range(deg):
        A, B = A * r.p + B * r.q * r.d, A * r.q + B * r.p
        powers.append((A, B))
    s_pow = [Term.const(1)]
    for _ in range(m):
        s_pow.append(s_pow[-1] * r.s)
    accA, accB = Term(), Term()
    for i, ci in enumerate(cs):
        Ai, Bi = powers[i]
        accA = accA + ci * Ai * s_pow[m - i]
        accB = accB + ci * Bi * s_pow[m - i]
    return accA, accB


def _sign_dnf_sqrt(A: Term, B: Term, d: Term, mask: int) -> Dnf:
    """Sign conditions for A + B*sqrt(d) under the ambient guard d >= 0."""
    parts = []
    AB = A * B
    sq = A * A - B * B * d
    if mask & ZERO:
        parts.append(dnf_and(literal(AB, NEG | ZERO), literal(sq, ZERO)))
    if mask & NEG:
        parts.append(dnf_and(literal(A, NEG), literal(B, NEG | ZERO)))
        parts.append(dnf_and(literal(A, NEG), literal(B, POS), literal(sq, POS)))
        parts.append(dnf_and(literal(A, ZERO | POS), literal(B, NEG), literal(sq, NEG)))
    if mask & POS:
        parts.append(dnf_and(literal(A, POS), literal(B, ZERO | POS)))
        parts.append(dnf_and(literal(A, POS), literal(B, NEG), literal(sq, POS)))
        parts.append(dnf_and(literal(A, NEG | ZERO), literal(B, POS), literal(sq, NEG)))
    return dnf_or(*parts)


def _subst_root(p: Term, mask: int, var: str, r: Root) -> Dnf:
    if var not in p.variables():
        return literal(p, mask)
    if not r.eps:
        A, B = _eval_at_root(p, var, r)
        return _sign_dnf_sqrt(A, B, r.d, mask)
    # point just above the root: recursive derivative expansion
    if mask & ZERO and mask & NEG and mask & POS:
        return DNF_TRUE
    zero_part = DNF_FALSE
    if mask & ZERO:
        # identically zero in a right-neighborhood <=> zero polynomial in var
        zero_part = dnf_and(*[literal(c, ZERO) for c in _coeff_list(p, var)])

    def strict(poly: Term, sign: int) -> Dnf:
        if var not in poly.variables():
            return literal(poly, sign)
        A, B = _eval_at_root(poly, var, Root(r.p, r.q, r.s, r.d))
        at_root = _sign_dnf_sqrt(A, B, r.d, sign)
        deriv = strict(term_derivative(poly, var), sign)
        return dnf_or(at_root, dnf_and(_sign_dnf_sqrt(A, B, r.d, ZERO), deriv))

    parts = [zero_part]
    if mask & NEG:
        parts.append(strict(p, NEG))
    if mask & POS:
        parts.append(strict(p, POS))
    return dnf_or(*parts)


def _subst_minf(p: Term, mask: int, var: str) -> Dnf:
    if var not in p.variables():
        return literal(p, mask)
    cs = _coeff_list(p, var)

    def rec(coeffs: list[Term], m: int) -> Dnf:
        if len(coeffs) == 1:
            return literal(coeffs[0], m)
        n = len(coeffs) - 1
        lead = coeffs[-1]
        sgn = 1 if n % 2 == 0 else -1
        eff = lead if sgn == 1 else -lead
        nonzero = literal(eff, m & (NEG | POS))
        zero_lead = dnf_and(literal(lead, ZERO), rec(coeffs[:-1], m))
        return dnf_or(nonzero, zero_lead)

    return rec(cs, mask)


def exists_elim(var: str, d: Dnf, context: Sequence[LinCon] = ()) -> Dnf:
    """Eliminate an existential quantifier over the reals by VS."""
    out_parts: list[Dnf] = []
    for clause in d:
        with_var = [(p, m) for p, m in clause if var in p.variables()]
        if not with_var:
            out_parts.append((clause,))
            continue
        # test points: -infinity, roots of weak literals, roots+eps of strict
        candidates: list[tuple[Dnf, object]] = [(DNF_TRUE, MINF)]
        for p, m in with_var:
            eps = not (m & ZERO)
            for guard, root in _roots_of(p, var, eps):
                candidates.append((guard, root))
        for guard, tp in candidates:
            pieces = [guard]
            ok = True
            for p, m in clause:
                if tp == MINF:
                    sub = _subst_minf(p, m, var)
                else:
                    sub = _subst_root(p, m, var, tp)
                if not sub:
                    ok = False
                    break
                pieces.append(sub)
            if ok:
                out_parts.append(dnf_and(*pieces))
    return simplify(dnf_or(*out_parts), context)


def crossing_candidates(var: str, guard: Dnf) -> list[tuple[Dnf, Root]]:
    """Candidate first instants at which a closed guard can become true.

    A closed guard that is false on ``[0, T)`` and true at ``T`` has, by
    continuity, either ``T = 0`` or some atom polynomial vanishing at ``T``.
    Returns the guarded candidate points for those cases.

    Raises DegreeError when an atom has degree above two in ``var``.
    """
    zero = Root(Term(), Term(), Term.const(1), Term(), eps=False)
    cands: list[tuple[Dnf, Root]] = [(DNF_TRUE, zero)]
    seen: set[Term] = set()
    for clause in guard:
        for p, _ in clause:
            if var not in p.variables() or p in seen:
                continue
            seen.add(p)
            cands.extend(_roots_of(p, var, eps=False))
    return cands


def exists_elim_at(var: str, d: Dnf, candidates: Sequence[tuple[Dnf, Root]],
                   context: Sequence[LinCon] = ()) -> Dnf:
    """Eliminate an existential quantifier restricted to candidate points.

    Sound and complete only when every satisfying value of ``var`` must
    coincide with one of the candidates, as with the first-crossing instant
    of a closed guard.  Substituted literals may have any degree in ``var``;
    only the candidate points themselves must come from degree <= 2 atoms.
    """
    out_parts: list[Dnf] = []
    for clause in d:
        if not any(var in p.variables() for p, _ in clause):
            out_parts.append((clause,))
            continue
        for guard, root in candidates:
            pieces = [guard]
            ok = True
            for p, m in clause:
                sub = _subst_root(p, m, var, root)
                if not sub:
                    ok = False
                    break
                pieces.append(sub)
            if ok:
                out_parts.append(dnf_and(*pieces))
    return simplify(dnf_or(*out_parts), context)


def forall_elim(var: str, d: Dnf, context: Sequence[LinCon] = ()) -> Dnf:
    # the inner existential sits in a negative position, so it must not be
    # strengthened by the context; only the final result may be
    return simplify(dnf_not(exists_elim(var, dnf_not(d))), context)


def eliminate(a: Assertion) -> Assertion:
    """Eliminate all (real) quantifiers from an assertion, innermost first.

    Raises DegreeError when a quantified variable occurs with an irreducible
    factor of degree above 2.
    """
    if isinstance(a, Quant):
        body = eliminate(a.body)
        d = from_assertion(body)
        if a.kind == "exists":
            return to_assertion(exists_elim(a.var, d))
        return to_assertion(forall_elim(a.var, d))
    if isinstance(a, (BoolConst, Atom)):
        return a
    if isinstance(a, And):
        return And([eliminate(c) for c in a.args])
    if isinstance(a, Or):
        return Or([eliminate(c) for c in a.args])
    if isinstance(a, Not):
        return Not(eliminate(a.arg))
    if isinstance(a, Implies):
        return Implies(eliminate(a.lhs), eliminate(a.rhs))
    raise SymbolicError(f"unknown node {a!r}")
