"""Exact polynomial terms and first-order assertions."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rssforge.symbolic import (
    Atom,
    BoolConst,
    FALSE,
    MissingVariableError,
    QuantifiedEvaluationError,
    Term,
    TRUE,
    classify_topology,
    conj,
    disj,
    eq,
    exists,
    forall,
    free_variables,
    ge,
    gt,
    is_closed,
    is_open,
    is_quantifier_free,
    le,
    lt,
    ne,
    neg,
    parse_assertion,
    parse_term,
    satisfies,
    subst_var,
    substitute,
    term_to_sexpr,
    to_sexpr,
)

x, y, z = Term.var("x"), Term.var("y"), Term.var("z")


# --- Term arithmetic ---------------------------------------------------------


def test_term_ring_identities():
    assert x + y == y + x
    assert (x + y) * (x - y) == x * x - y * y
    assert x * Term.const(0) == Term()
    assert (x + 1) * (x + 1) == x * x + 2 * x + 1


def test_term_rational_coefficients():
    t = x * Fraction(1, 3) + Fraction(1, 6)
    assert t.eval({"x": Fraction(1, 2)}) == Fraction(1, 3)


def test_eval_missing_variable():
    with pytest.raises(MissingVariableError):
        (x + y).eval({"x": 1})


def test_term_hash_and_eq_consistency():
    a = (x + y) * (x + y)
    b = x * x + 2 * x * y + y * y
    assert a == b and hash(a) == hash(b)


@given(
    st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5)
)
def test_term_eval_is_ring_homomorphism(a, b, vx, vy):
    s = {"x": Fraction(vx), "y": Fraction(vy)}
    t1, t2 = x * a + b, y * b - a
    assert (t1 * t2).eval(s) == t1.eval(s) * t2.eval(s)
    assert (t1 + t2).eval(s) == t1.eval(s) + t2.eval(s)


# --- Assertions ---------------------------------------------------------------


def test_satisfies_basic():
    a = conj(ge(x, 0), lt(x, y))
    assert satisfies({"x": 0, "y": 1}, a)
    assert not satisfies({"x": 2, "y": 1}, a)
    assert satisfies({}, TRUE) and not satisfies({}, FALSE)


def test_satisfies_rejects_quantifiers():
    with pytest.raises(QuantifiedEvaluationError):
        satisfies({"x": 1}, exists("u", ge(Term.var("u"), x)))


def test_free_variables():
    a = exists("u", conj(ge(Term.var("u"), x), le(y, 3)))
    assert free_variables(a) == frozenset({"x", "y"})
    assert not is_quantifier_free(a)


def test_conj_disj_flatten_and_units():
    assert conj() == TRUE
    assert disj() == FALSE
    assert conj(TRUE, ge(x, 0)) == ge(x, 0)
    assert disj(FALSE, ge(x, 0)) == ge(x, 0)
    assert conj(FALSE, ge(x, 0)) == FALSE


# --- substitution vs execution (sampled) --------------------------------------


@settings(max_examples=200)
@given(
    st.integers(-9, 9),
    st.integers(-9, 9),
    st.integers(-3, 3),
    st.integers(-3, 3),
)
def test_substitution_commutes_with_evaluation(vx, vy, c1, c2):
    """A[x := t] evaluated at s equals A evaluated at s[x := t(s)]."""
    t = y * c1 + c2
    a = disj(conj(ge(x * x - y, 0), lt(x, 3)), eq(x + y, c2), neg(le(x * y, c1)))
    s = {"x": Fraction(vx), "y": Fraction(vy)}
    inner = {"x": t.eval(s), "y": s["y"]}
    assert satisfies(s, subst_var(a, "x", t)) == satisfies(inner, a)


def test_substitute_reads_assignment_lists_backward():
    a = lt(x, y)
    out = substitute(a, [("x", y + 1), ("y", z)])
    # backward reading: a[z/y][y+1/x] = (y + 1 < z)
    assert satisfies({"x": 0, "y": 1, "z": 3}, out)
    assert not satisfies({"x": 0, "y": 3, "z": 1}, out)
    assert substitute(a, [("x", y + 1)]) == subst_var(a, "x", y + 1)


# --- topology ------------------------------------------------------------------


def test_topology_classification():
    assert classify_topology(le(x, 2)) == "closed"
    assert classify_topology(lt(x, 2)) == "open"
    assert classify_topology(conj(lt(1, x), le(x, 2))) == "neither"
    assert classify_topology(TRUE) == "both"
    assert is_closed(conj(le(x, 2), ge(x, 0)))
    assert is_open(disj(lt(x, 2), gt(x, 5)))
    # equality is closed, disequality open
    assert is_closed(eq(x, y)) and is_open(ne(x, y))


@settings(max_examples=100)
@given(st.integers(0, 2), st.integers(-3, 3))
def test_topology_de_morgan_duality(kind, c):
    """The negation of a closed assertion is open and vice versa."""
    base = [le(x, c), lt(x, c), eq(x, c)][kind]
    a = conj(base, disj(ge(y, 0), base))
    if is_closed(a):
        assert is_open(neg(a))
    if is_open(a):
        assert is_closed(neg(a))


# --- s-expression round trips ----------------------------------------------------


def test_term_sexpr_roundtrip():
    t = x * x * y * Fraction(-3, 7) + z - 2
    assert parse_term(term_to_sexpr(t)) == t


def test_assertion_sexpr_roundtrip():
    a = forall(
        "u",
        disj(
            conj(ge(Term.var("u"), x), neg(le(y, 3))),
            exists("w", eq(Term.var("w") * z, 1)),
            BoolConst(True),
        ),
    )
    assert parse_assertion(to_sexpr(a)) == a


def test_parse_rejects_garbage():
    with pytest.raises(Exception):
        parse_assertion("(and (>= x")
