"""Exact polynomial terms, assertions, stores and substitution.

Terms are multivariate polynomials with rational coefficients, kept in a
canonical sparse form (graded-lexicographic monomial order, no zero
coefficients).  Assertions are boolean trees over polynomial atoms, with
implication kept as a primitive connective so that the open/closed topology
classification applies verbatim, and with bounded real quantifiers as an
extension used by the synthesis machinery.

Everything here is immutable and safe to share between workers.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator, Mapping, Sequence, Union

Rat = Fraction
Scalar = Union[int, Fraction]

# A monomial is a sorted tuple of (variable, exponent) pairs with exponent >= 1.
Mono = tuple

_EMPTY_MONO: Mono = ()


class SymbolicError(Exception):
    """Base class for errors raised by the symbolic layer."""


class MissingVariableError(SymbolicError):
    """A store does not define a variable needed for evaluation."""


class QuantifiedEvaluationError(SymbolicError):
    """Concrete satisfaction was asked of a quantified assertion."""


def _mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


def _mono_grlex_key(m: Mono):
    # Graded-lexicographic: total degree first, then exponent pattern on the
    # sorted variable names (missing variables count as exponent 0, which the
    # tuple comparison on (name, -exp) pairs realizes).
    return (_mono_degree(m), tuple((v, -e) for v, e in m))


class Term:
    """A multivariate polynomial over ``Fraction`` coefficients."""

    __slots__ = ("_coeffs", "_hash")

    def __init__(self, coeffs: Mapping[Mono, Scalar] | None = None):
        clean: dict[Mono, Fraction] = {}
        if coeffs:
            for m, c in coeffs.items():
                c = Fraction(c)
                if c:
                    clean[m] = c
        self._coeffs = clean
        self._hash: int | None = None

    # -- constructors -----------------------------------------------------

    @staticmethod
    def const(c: Scalar) -> "Term":
        return Term({_EMPTY_MONO: Fraction(c)})

    @staticmethod
    def var(name: str) -> "Term":
        if not name:
            raise SymbolicError("variable name must be nonempty")
        return Term({((name, 1),): Fraction(1)})

    # -- inspection --------------------------------------------------------

    @property
    def coeffs(self) -> Mapping[Mono, Fraction]:
        return self._coeffs

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return not self._coeffs or (len(self._coeffs) == 1 and _EMPTY_MONO in self._coeffs)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise SymbolicError("term is not constant")
        return self._coeffs.get(_EMPTY_MONO, Fraction(0))

    def variables(self) -> frozenset:
        out = set()
        for m in self._coeffs:
            for v, _ in m:
                out.add(v)
        return frozenset(out)

    def degree(self, var: str | None = None) -> int:
        if not self._coeffs:
            return 0
        if var is None:
            return max(_mono_degree(m) for m in self._coeffs)
        best = 0
        for m in self._coeffs:
            for v, e in m:
                if v == var and e > best:
                    best = e
        return best

    def coefficients_in(self, var: str) -> list["Term"]:
        """Coefficients [c0, c1, ..., cd] of this polynomial viewed in ``var``."""
        d = self.degree(var)
        buckets: list[dict] = [dict() for _ in range(d + 1)]
        for m, c in self._coeffs.items():
            e = 0
            rest = []
            for v, k in m:
                if v == var:
                    e = k
                else:
                    rest.append((v, k))
            buckets[e][tuple(rest)] = buckets[e].get(tuple(rest), Fraction(0)) + c
        return [Term(b) for b in buckets]

    def sorted_monomials(self) -> list[tuple[Mono, Fraction]]:
        return sorted(self._coeffs.items(), key=lambda kv: _mono_grlex_key(kv[0]), reverse=True)

    def leading_coefficient(self) -> Fraction:
        if not self._coeffs:
            return Fraction(0)
        return self.sorted_monomials()[0][1]

    def content_normalized(self) -> tuple["Term", Fraction]:
        """Divide by the positive gcd of coefficients; returns (primitive, factor)."""
        if not self._coeffs:
            return self, Fraction(1)
        from math import gcd

        num = reduce(gcd, (abs(c.numerator) for c in self._coeffs.values()))
        den = reduce(lambda a, b: a * b // gcd(a, b), (c.denominator for c in self._coeffs.values()))
        f = Fraction(num, den)
        if f == 1:
            return self, f
        return Term({m: c / f for m, c in self._coeffs.items()}), f

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Term | Scalar") -> "Term":
        other = _as_term(other)
        d = dict(self._coeffs)
        for m, c in other._coeffs.items():
            d[m] = d.get(m, Fraction(0)) + c
        return Term(d)

    __radd__ = __add__

    def __neg__(self) -> "Term":
        return Term({m: -c for m, c in self._coeffs.items()})

    def __sub__(self, other: "Term | Scalar") -> "Term":
        return self + (-_as_term(other))

    def __rsub__(self, other: "Term | Scalar") -> "Term":
        return _as_term(other) - self

    def __mul__(self, other: "Term | Scalar") -> "Term":
        other = _as_term(other)
        d: dict[Mono, Fraction] = {}
        for m1, c1 in self._coeffs.items():
            for m2, c2 in other._coeffs.items():
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, Fraction(0)) + c1 * c2
        return Term(d)

    __rmul__ = __mul__

    def scale(self, c: Scalar) -> "Term":
        c = Fraction(c)
        return Term({m: k * c for m, k in self._coeffs.items()})

    def __pow__(self, n: int) -> "Term":
        if n < 0:
            raise SymbolicError("negative powers are not polynomial")
        out = Term.const(1)
        for _ in range(n):
            out = out * self
        return out

    # -- evaluation and substitution ----------------------------------------

    def eval(self, store: Mapping[str, object]):
        """Evaluate at a store; exact when values are Fractions, float otherwise."""
        total = None
        for m, c in self._coeffs.items():
            acc = c
            for v, e in m:
                try:
                    val = store[v]
                except KeyError:
                    raise MissingVariableError(f"store does not define {v!r}") from None
                acc = acc * val**e
            total = acc if total is None else total + acc
        if total is None:
            return Fraction(0)
        return total

    def subst(self, mapping: Mapping[str, "Term"]) -> "Term":
        """Simultaneous substitution of variables by terms."""
        if not mapping:
            return self
        out = Term()
        for m, c in self._coeffs.items():
            acc = Term.const(c)
            for v, e in m:
                base = mapping.get(v)
                if base is None:
                    base = Term.var(v)
                acc = acc * base**e
            out = out + acc
        return out

    # -- protocol ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, Term) and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self.sorted_monomials()))
        return self._hash

    def __repr__(self) -> str:
        return f"Term({format_term(self)})"


def _as_term(x: "Term | Scalar") -> Term:
    if isinstance(x, Term):
        return x
    return Term.const(x)


ZERO = Term()
ONE = Term.const(1)


def format_term(t: Term) -> str:
    if t.is_zero():
        return "0"
    parts = []
    for m, c in t.sorted_monomials():
        mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append(f"-{mono}")
        else:
            parts.append(f"{c}*{mono}")
    s = " + ".join(parts)
    return s.replace("+ -", "- ")


# ---------------------------------------------------------------------------
# Assertions
# ---------------------------------------------------------------------------

EQ = "="
LE = "<="
LT = "<"
NE = "!="

_REL_OPS = (EQ, LE, LT, NE)


class Assertion:
    """Base class; subclasses form an immutable expression tree."""

    __slots__ = ()

    def __and__(self, other: "Assertion") -> "Assertion":
        return conj(self, other)

    def __or__(self, other: "Assertion") -> "Assertion":
        return disj(self, other)

    def __invert__(self) -> "Assertion":
        return neg(self)

    def __repr__(self) -> str:
        return to_sexpr(self)


class BoolConst(Assertion):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        object.__setattr__(self, "value", bool(value))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, BoolConst) and other.value == self.value

    def __hash__(self):
        return hash(("bool", self.value))


TRUE = BoolConst(True)
FALSE = BoolConst(False)


class Atom(Assertion):
    """A polynomial comparison ``term op 0``."""

    __slots__ = ("op", "term")

    def __init__(self, op: str, term: Term):
        if op not in _REL_OPS:
            raise SymbolicError(f"unknown relation {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "term", term)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, Atom) and other.op == self.op and other.term == self.term

    def __hash__(self):
        return hash(("atom", self.op, self.term))


class And(Assertion):
    __slots__ = ("args",)

    def __init__(self, args: Sequence[Assertion]):
        object.__setattr__(self, "args", tuple(args))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, And) and other.args == self.args

    def __hash__(self):
        return hash(("and", self.args))


class Or(Assertion):
    __slots__ = ("args",)

    def __init__(self, args: Sequence[Assertion]):
        object.__setattr__(self, "args", tuple(args))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, Or) and other.args == self.args

    def __hash__(self):
        return hash(("or", self.args))


class Not(Assertion):
    __slots__ = ("arg",)

    def __init__(self, arg: Assertion):
        object.__setattr__(self, "arg", arg)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, Not) and other.arg == self.arg

    def __hash__(self):
        return hash(("not", self.arg))


class Implies(Assertion):
    """Kept primitive so Def-style topology rules apply directly."""

    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: Assertion, rhs: Assertion):
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return isinstance(other, Implies) and other.lhs == self.lhs and other.rhs == self.rhs

    def __hash__(self):
        return hash(("=>", self.lhs, self.rhs))


class Quant(Assertion):
    """Bounded real quantifier; ``kind`` is 'exists' or 'forall'."""

    __slots__ = ("kind", "var", "body")

    def __init__(self, kind: str, var: str, body: Assertion):
        if kind not in ("exists", "forall"):
            raise SymbolicError(f"unknown quantifier {kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "body", body)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Quant)
            and other.kind == self.kind
            and other.var == self.var
            and other.body == self.body
        )

    def __hash__(self):
        return hash((self.kind, self.var, self.body))


# -- convenience constructors -------------------------------------------------


def atom(lhs: Term | Scalar, op: str, rhs: Term | Scalar) -> Atom:
    """Build the atom ``lhs op rhs`` normalized to ``(lhs - rhs) op 0``."""
    t = _as_term(lhs) - _as_term(rhs)
    return Atom(op, t)


def le(lhs, rhs) -> Atom:
    return atom(lhs, LE, rhs)


def lt(lhs, rhs) -> Atom:
    return atom(lhs, LT, rhs)


def eq(lhs, rhs) -> Atom:
    return atom(lhs, EQ, rhs)


def ne(lhs, rhs) -> Atom:
    return atom(lhs, NE, rhs)


def ge(lhs, rhs) -> Atom:
    return atom(rhs, LE, lhs)


def gt(lhs, rhs) -> Atom:
    return atom(rhs, LT, lhs)


def conj(*args: Assertion) -> Assertion:
    flat: list[Assertion] = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == TRUE:
            continue
        elif a == FALSE:
            return FALSE
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(flat)


def disj(*args: Assertion) -> Assertion:
    flat: list[Assertion] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == FALSE:
            continue
        elif a == TRUE:
            return TRUE
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(flat)


def neg(a: Assertion) -> Assertion:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def implies(a: Assertion, b: Assertion) -> Assertion:
    return Implies(a, b)


def exists(var: str, body: Assertion) -> Assertion:
    return Quant("exists", var, body)


def forall(var: str, body: Assertion) -> Assertion:
    return Quant("forall", var, body)


# -- traversal ----------------------------------------------------------------


def children(a: Assertion) -> tuple:
    if isinstance(a, (BoolConst, Atom)):
        return ()
    if isinstance(a, (And, Or)):
        return a.args
    if isinstance(a, Not):
        return (a.arg,)
    if isinstance(a, Implies):
        return (a.lhs, a.rhs)
    if isinstance(a, Quant):
        return (a.body,)
    raise SymbolicError(f"unknown node {a!r}")


def iter_atoms(a: Assertion) -> Iterator[Atom]:
    stack = [a]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            yield node
        else:
            stack.extend(children(node))


def free_variables(a: Assertion) -> frozenset:
    def walk(node: Assertion, bound: frozenset) -> frozenset:
        if isinstance(node, Atom):
            return node.term.variables() - bound
        if isinstance(node, BoolConst):
            return frozenset()
        if isinstance(node, Quant):
            return walk(node.body, bound | {node.var})
        out = frozenset()
        for c in children(node):
            out |= walk(c, bound)
        return out

    return walk(a, frozenset())


def is_quantifier_free(a: Assertion) -> bool:
    if isinstance(a, Quant):
        return False
    return all(is_quantifier_free(c) for c in children(a))


# -- satisfaction ----------------------------------------------------------------


def _atom_holds(a: Atom, value) -> bool:
    if a.op == EQ:
        return value == 0
    if a.op == LE:
        return value <= 0
    if a.op == LT:
        return value < 0
    return value != 0


def satisfies(store: Mapping[str, object], a: Assertion) -> bool:
    """Concrete satisfaction of a quantifier-free assertion."""
    if isinstance(a, BoolConst):
        return a.value
    if isinstance(a, Atom):
        return _atom_holds(a, a.term.eval(store))
    if isinstance(a, And):
        return all(satisfies(store, c) for c in a.args)
    if isinstance(a, Or):
        return any(satisfies(store, c) for c in a.args)
    if isinstance(a, Not):
        return not satisfies(store, a.arg)
    if isinstance(a, Implies):
        return (not satisfies(store, a.lhs)) or satisfies(store, a.rhs)
    if isinstance(a, Quant):
        raise QuantifiedEvaluationError(
            "concrete satisfaction of quantified assertions needs a solver"
        )
    raise SymbolicError(f"unknown node {a!r}")


def eval_term(t: Term, store: Mapping[str, object]):
    return t.eval(store)


# -- topology ----------------------------------------------------------------

OPEN = "open"
CLOSED = "closed"
BOTH = "both"
NEITHER = "neither"


def classify_topology(a: Assertion) -> str:
    """Openness/closedness of the set described by a quantifier-free assertion."""
    if isinstance(a, BoolConst):
        return BOTH
    if isinstance(a, Atom):
        return OPEN if a.op in (LT, NE) else CLOSED
    if isinstance(a, (And, Or)):
        parts = [classify_topology(c) for c in a.args]
        is_open = all(p in (OPEN, BOTH) for p in parts)
        is_closed = all(p in (CLOSED, BOTH) for p in parts)
        return _combine(is_open, is_closed)
    if isinstance(a, Not):
        inner = classify_topology(a.arg)
        return {OPEN: CLOSED, CLOSED: OPEN, BOTH: BOTH, NEITHER: NEITHER}[inner]
    if isinstance(a, Implies):
        # A => B behaves like (not A) or B.
        lhs = classify_topology(a.lhs)
        rhs = classify_topology(a.rhs)
        is_open = lhs in (CLOSED, BOTH) and rhs in (OPEN, BOTH)
        is_closed = lhs in (OPEN, BOTH) and rhs in (CLOSED, BOTH)
        return _combine(is_open, is_closed)
    if isinstance(a, Quant):
        raise QuantifiedEvaluationError("topology is defined on quantifier-free assertions")
    raise SymbolicError(f"unknown node {a!r}")


def _combine(is_open: bool, is_closed: bool) -> str:
    if is_open and is_closed:
        return BOTH
    if is_open:
        return OPEN
    if is_closed:
        return CLOSED
    return NEITHER


def is_open(a: Assertion) -> bool:
    return classify_topology(a) in (OPEN, BOTH)


def is_closed(a: Assertion) -> bool:
    return classify_topology(a) in (CLOSED, BOTH)


# -- substitution ----------------------------------------------------------------

# A substitution is an ordered list of (var, term) pairs.  Matching the
# assignment-list convention, the pairs are applied right-to-left: the last
# assignment's substitution is performed first.
Substitution = Sequence[tuple]


def subst_var(a: Assertion, var: str, replacement: Term) -> Assertion:
    if isinstance(a, BoolConst):
        return a
    if isinstance(a, Atom):
        if var not in a.term.variables():
            return a
        return Atom(a.op, a.term.subst({var: replacement}))
    if isinstance(a, And):
        return conj(*[subst_var(c, var, replacement) for c in a.args])
    if isinstance(a, Or):
        return disj(*[subst_var(c, var, replacement) for c in a.args])
    if isinstance(a, Not):
        return neg(subst_var(a.arg, var, replacement))
    if isinstance(a, Implies):
        return Implies(subst_var(a.lhs, var, replacement), subst_var(a.rhs, var, replacement))
    if isinstance(a, Quant):
        if a.var == var:
            return a
        if a.var in replacement.variables():
            raise SymbolicError(
                f"substitution would capture bound variable {a.var!r}; "
                "quantified variables must be fresh"
            )
        return Quant(a.kind, a.var, subst_var(a.body, var, replacement))
    raise SymbolicError(f"unknown node {a!r}")


def substitute(a: Assertion, sigma: Substitution) -> Assertion:
    """Apply an ordered assignment list ``x1:=e1; ...; xk:=ek`` as a substitution.

    Matching the backward-reading of assignment sequences, this computes
    ``a[ek/xk][e(k-1)/x(k-1)]...[e1/x1]``.
    """
    out = a
    for var, term in reversed(list(sigma)):
        out = subst_var(out, var, _as_term(term))
    return out


def subst_term_store(a: Assertion, values: Mapping[str, Scalar]) -> Assertion:
    """Substitute concrete rational values for variables (partial evaluation)."""
    out = a
    for v, val in values.items():
        out = subst_var(out, v, Term.const(val))
    return out


# ---------------------------------------------------------------------------
# Text serialization (Lisp-like prefix format)
# ---------------------------------------------------------------------------


def term_to_sexpr(t: Term) -> str:
    entries = []
    for m, c in t.sorted_monomials():
        factors = " ".join(f"({v} {e})" for v, e in m)
        entries.append(f"({c}{(' ' + factors) if factors else ''})")
    return f"(poly {' '.join(entries)})" if entries else "(poly)"


def to_sexpr(a: Assertion) -> str:
    if isinstance(a, BoolConst):
        return "(true)" if a.value else "(false)"
    if isinstance(a, Atom):
        return f"({a.op} {term_to_sexpr(a.term)} 0)"
    if isinstance(a, And):
        return f"(and {' '.join(to_sexpr(c) for c in a.args)})"
    if isinstance(a, Or):
        return f"(or {' '.join(to_sexpr(c) for c in a.args)})"
    if isinstance(a, Not):
        return f"(not {to_sexpr(a.arg)})"
    if isinstance(a, Implies):
        return f"(=> {to_sexpr(a.lhs)} {to_sexpr(a.rhs)})"
    if isinstance(a, Quant):
        return f"({a.kind} ({a.var}) {to_sexpr(a.body)})"
    raise SymbolicError(f"unknown node {a!r}")


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens: list[str], pos: int):
    if tokens[pos] != "(":
        return tokens[pos], pos + 1
    out = []
    pos += 1
    while tokens[pos] != ")":
        node, pos = _read(tokens, pos)
        out.append(node)
    return out, pos + 1


def _term_from_sexpr(node) -> Term:
    if not isinstance(node, list) or not node or node[0] != "poly":
        raise SymbolicError(f"expected (poly ...), got {node!r}")
    coeffs: dict[Mono, Fraction] = {}
    for entry in node[1:]:
        c = Fraction(entry[0])
        mono = tuple(sorted((v, int(e)) for v, e in entry[1:]))
        coeffs[mono] = coeffs.get(mono, Fraction(0)) + c
    return Term(coeffs)


def _assertion_from_sexpr(node) -> Assertion:
    if not isinstance(node, list) or not node:
        raise SymbolicError(f"malformed assertion {node!r}")
    head = node[0]
    if head == "true":
        return TRUE
    if head == "false":
        return FALSE
    if head in _REL_OPS:
        lhs = _term_from_sexpr(node[1])
        if node[2] != "0":
            raise SymbolicError("atoms must compare against 0")
        return Atom(head, lhs)
    if head == "and":
        return conj(*[_assertion_from_sexpr(c) for c in node[1:]])
    if head == "or":
        return disj(*[_assertion_from_sexpr(c) for c in node[1:]])
    if head == "not":
        return neg(_assertion_from_sexpr(node[1]))
    if head == "=>":
        return Implies(_assertion_from_sexpr(node[1]), _assertion_from_sexpr(node[2]))
    if head in ("exists", "forall"):
        (var,) = node[1]
        return Quant(head, var, _assertion_from_sexpr(node[2]))
    raise SymbolicError(f"unknown head {head!r}")


def parse_term(text: str) -> Term:
    tokens = _tokenize(text)
    node, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise SymbolicError("trailing input after term")
    return _term_from_sexpr(node)


def parse_assertion(text: str) -> Assertion:
    tokens = _tokenize(text)
    node, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise SymbolicError("trailing input after assertion")
    return _assertion_from_sexpr(node)


# -- fresh names ---------------------------------------------------------------


class FreshNames:
    """Deterministic fresh-variable source for quantifier introduction."""

    def __init__(self, prefix: str = "_q"):
        self._prefix = prefix
        self._n = 0

    def next(self, hint: str = "") -> str:
        self._n += 1
        return f"{self._prefix}{hint}{self._n}"
