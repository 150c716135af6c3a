"""Virtual-substitution quantifier elimination."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rssforge import qe
from rssforge.symbolic import (
    Term,
    conj,
    disj,
    eq,
    exists,
    forall,
    free_variables,
    ge,
    gt,
    is_quantifier_free,
    le,
    lt,
    neg,
    satisfies,
)

x, y, a, b = Term.var("x"), Term.var("y"), Term.var("a"), Term.var("b")


def _equiv_sampled(p, q, names, n=300, lo=-10, hi=10, seed=7):
    rng = random.Random(seed)
    for _ in range(n):
        s = {v: Fraction(rng.randint(lo * 4, hi * 4), 4) for v in names}
        if satisfies(s, p) != satisfies(s, q):
            return s
    return None


# --- DNF algebra ------------------------------------------------------------------


def test_dnf_roundtrip():
    f = disj(conj(ge(x, 0), lt(y, 3)), eq(x + y, 1))
    d = qe.from_assertion(f)
    back = qe.to_assertion(d)
    assert _equiv_sampled(f, back, ["x", "y"]) is None


def test_dnf_not_is_complement():
    f = conj(ge(x * x - y, 0), lt(x, 2))
    d = qe.from_assertion(f)
    nd = qe.dnf_not(d)
    g = qe.to_assertion(nd)
    assert _equiv_sampled(neg(f), g, ["x", "y"]) is None


def test_literal_canonicalizes_squares():
    # x^2 = 0 should collapse to x = 0
    d1 = qe.literal(x * x, qe.ZERO)
    d2 = qe.literal(x, qe.ZERO)
    assert d1 == d2


def test_simplify_detects_contradiction():
    d = qe.from_assertion(conj(gt(x, 1), lt(x, 0)))
    assert qe.simplify(d) == qe.DNF_FALSE


# --- elimination, known answers ---------------------------------------------------


def test_exists_linear():
    # exists x. a <= x and x <= b  <=>  a <= b
    f = exists("x", conj(le(a, x), le(x, b)))
    g = qe.eliminate(f)
    assert is_quantifier_free(g)
    assert _equiv_sampled(g, le(a, b), ["a", "b"]) is None


def test_exists_quadratic():
    # exists x. x^2 <= a  <=>  a >= 0
    f = exists("x", le(x * x - a, 0))
    g = qe.eliminate(f)
    assert _equiv_sampled(g, ge(a, 0), ["a"]) is None


def test_exists_strict_quadratic():
    # exists x. x^2 < a  <=>  a > 0
    f = exists("x", lt(x * x - a, 0))
    g = qe.eliminate(f)
    assert _equiv_sampled(g, gt(a, 0), ["a"]) is None


def test_forall_discriminant():
    # forall x. x^2 + b x + a >= 0  <=>  b^2 - 4a <= 0
    f = forall("x", ge(x * x + b * x + a, 0))
    g = qe.eliminate(f)
    assert _equiv_sampled(g, le(b * b - a * 4, 0), ["a", "b"]) is None


def test_nested_quantifiers():
    # forall x exists y. y > x  is valid
    f = forall("x", exists("y", gt(y, x)))
    g = qe.eliminate(f)
    assert satisfies({}, g)


def test_degree_error_on_cubic():
    with pytest.raises(qe.DegreeError):
        qe.eliminate(exists("x", ge(x * x * x - a, 0)))


@settings(max_examples=60, deadline=None)
@given(
    st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4)
)
def test_exists_elim_sound_and_complete_on_samples(c2, c1, c0, k):
    """Eliminated formula agrees with a direct search over sample points."""
    body = conj(ge(x * x * c2 + x * c1 + c0, 0), le(x, k), ge(x, -4))
    g = qe.eliminate(exists("x", body))
    truth = any(
        satisfies({"x": Fraction(n, 8)}, body) for n in range(-4 * 8, 4 * 8 + 1)
    )
    got = satisfies({}, g)
    # sampling can miss irrational witnesses, so only check one direction
    if truth:
        assert got
    # and the eliminated formula must never claim a witness when a fine
    # rational sweep plus the vertex finds none
    if not got:
        assert not truth


# --- linear feasibility ------------------------------------------------------------


def test_lin_feasible_simple():
    d = qe.from_assertion(conj(ge(x, 1), le(x, 2), ge(y - x, 0)))
    assert qe.clause_feasible(d[0])
    d2 = qe.from_assertion(conj(ge(x, 3), le(x, 2)))
    assert qe.simplify(d2) == qe.DNF_FALSE or not qe.clause_feasible(d2[0])
    # strict cycle: x < y and y < x
    d3 = qe.from_assertion(conj(lt(x, y), lt(y, x)))
    assert qe.simplify(d3) == qe.DNF_FALSE or not qe.clause_feasible(d3[0])


# --- candidate-restricted elimination ----------------------------------------------


def test_exists_elim_at_matches_generic_on_pinned_var():
    """When equality pins the variable to a root, the restricted and the
    generic eliminations agree."""
    t = Term.var("t")
    # t is the first root of  v - 5 t = 0  (a stopping event)
    guard_atom = a - t * 5
    body = qe.from_assertion(
        conj(ge(t, 0), eq(guard_atom, 0), ge(b - t * t, 0))
    )
    cands = qe.crossing_candidates("t", qe.literal(guard_atom, qe.ZERO))
    restricted = qe.to_assertion(qe.exists_elim_at("t", body, cands))
    generic = qe.to_assertion(qe.exists_elim("t", body))
    assert _equiv_sampled(restricted, generic, ["a", "b"]) is None


def test_crossing_candidates_allow_high_degree_side_literals():
    """Side constraints of degree three in the pinned variable are fine."""
    t = Term.var("t")
    guard_atom = t - a  # t = a
    body = qe.from_assertion(
        conj(ge(t, 0), eq(guard_atom, 0), ge(t * t * t - b, 0))
    )
    cands = qe.crossing_candidates("t", qe.literal(guard_atom, qe.ZERO))
    g = qe.to_assertion(qe.exists_elim_at("t", body, cands))
    assert is_quantifier_free(g)
    expected = conj(ge(a, 0), ge(a * a * a - b, 0))
    assert _equiv_sampled(g, expected, ["a", "b"]) is None
