"""Backward annotation synthesis on small, hand-checkable models."""

import random
from fractions import Fraction

import pytest

from rssforge import qe, smt, synthesis
from rssforge.hcfg import HCFG, Edge
from rssforge.scenarios import RssParams, build_oneway, drss
from rssforge.symbolic import (
    FALSE,
    eq,
    TRUE,
    Term,
    conj,
    free_variables,
    ge,
    is_quantifier_free,
    le,
    lt,
    satisfies,
    subst_term_store,
)
from rssforge.synthesis import (
    HintRejected,
    analyze_forward,
    annotate,
    check_annotation,
    detect_vacuous,
)

x, v, t = Term.var("x"), Term.var("v"), Term.var("t")

RHO = Fraction(3, 10)
B = 5


def wall_model() -> HCFG:
    """A vehicle cruising toward a wall at x = 0, braking after rho seconds.

    The exact condition for never touching the wall from speed v >= 0 is
    x + v*rho + v^2/(2b) < 0.
    """
    flows = {
        "Cruise": {"t": Term.const(1), "v": Term.const(0), "x": v},
        "Brake": {"t": Term.const(1), "v": Term.const(-B), "x": v},
        "Stop": {"t": Term.const(1), "v": Term.const(0), "x": Term.const(0)},
        "Hit": {"t": Term.const(1), "v": Term.const(0), "x": Term.const(0)},
    }
    edges = {
        "Cruise": (
            Edge("Cruise", "Touch", "Hit", ge(x, 0)),
            Edge("Cruise", "React", "Brake", ge(t, RHO)),
        ),
        "Brake": (
            Edge("Brake", "Touch", "Hit", ge(x, 0)),
            Edge("Brake", "Halt", "Stop", le(v, 0)),
        ),
    }
    return HCFG(
        name="wall",
        locations=("Cruise", "Brake", "Stop", "Hit"),
        events=frozenset({"Touch", "React", "Halt"}),
        edges=edges,
        variables=("t", "v", "x"),
        flows=flows,
        init_location="Cruise",
        init_assigns=(("t", Term.const(0)),),
        final=frozenset({"Stop"}),
    )


UNSAFE = frozenset({"Hit"})


def wall_condition(xv, vv) -> bool:
    return xv + vv * RHO + Fraction(vv) ** 2 / (2 * B) < 0


@pytest.fixture(scope="module")
def wall_report():
    return annotate(wall_model(), TRUE, UNSAFE)


def test_wall_annotation_is_quantifier_free(wall_report):
    assert not wall_report.quantified_locations
    assert wall_report.rss_dnf is not None
    assert is_quantifier_free(wall_report.rss_condition)
    assert free_variables(wall_report.rss_condition) <= {"x", "v"}


def test_wall_condition_matches_closed_form(wall_report):
    rng = random.Random(5)
    cond = wall_report.rss_condition
    for _ in range(2000):
        xv = Fraction(rng.randint(-400, 50), 10)
        vv = Fraction(rng.randint(0, 250), 10)
        expected = wall_condition(xv, vv)
        assert satisfies({"x": xv, "v": vv, "t": 0}, cond) == expected, (xv, vv)


def test_wall_condition_boundary_is_strict(wall_report):
    # stopping exactly at the wall counts as touching it (closed guard)
    cond = wall_report.rss_condition
    v0 = Fraction(10)
    x_exact = -(v0 * RHO + v0**2 / (2 * B))
    assert not satisfies({"x": x_exact, "v": v0, "t": 0}, cond)
    assert satisfies({"x": x_exact - Fraction(1, 1000), "v": v0, "t": 0}, cond)


def test_wall_gamma_structure(wall_report):
    g = wall_report.gamma
    assert g["Hit"] == FALSE
    assert g["Stop"] == TRUE
    # a stopped-at-negative-x store satisfies the braking annotation
    assert satisfies({"x": -1, "v": 0, "t": 1}, g["Brake"])
    assert not satisfies({"x": 1, "v": 0, "t": 1}, g["Brake"])


def test_wall_obligations_never_refuted(wall_report):
    rep = check_annotation(wall_model(), wall_report, TRUE, UNSAFE, timeout=20.0)
    assert rep.ok, [o for o in rep.obligations if o.verdict == smt.INVALID]
    assert rep.obligations  # timing is logged per obligation
    assert all(o.seconds >= 0 for o in rep.obligations)


def test_forward_analysis_wall():
    fa = analyze_forward(wall_model())
    assert "Cruise" in fa.live and "Brake" in fa.live
    # the braking location inherits t >= rho from the only way in
    ctx = fa.invariant.get("Brake", ())
    assert ctx  # some invariant was learned


def test_detect_vacuous_flags_unsafe_and_unreachable(wall_report):
    vac = detect_vacuous(wall_report)
    assert "Hit" in vac  # gamma = false


# --- hints -------------------------------------------------------------------


def test_correct_hint_is_accepted():
    # a location hint speaks about entry states, so it pins the clock too
    hint = conj(eq(t, 0), ge(v, 0),
                lt(x + v * RHO + v * v * Fraction(1, 2 * B), 0))
    rep = annotate(wall_model(), TRUE, UNSAFE, hints={"Cruise": hint})
    assert any(s.hint == "accepted" for s in rep.stats)
    assert rep.gamma["Cruise"] == hint


def test_wrong_hint_falls_back():
    rep = annotate(wall_model(), TRUE, UNSAFE, hints={"Cruise": TRUE})
    assert any(s.hint in ("rejected", "unknown-rejected") for s in rep.stats)
    assert rep.gamma["Cruise"] != TRUE


def test_wrong_hint_raises_when_strict():
    with pytest.raises(HintRejected):
        annotate(wall_model(), TRUE, UNSAFE, hints={"Cruise": TRUE},
                 strict_hints=True)


# --- the oneway scenario end to end -------------------------------------------


def test_oneway_matches_reference_distance():
    sc = build_oneway()
    prod = sc.product()
    rep = annotate(prod, sc.safety, sc.unsafe_tuples())
    cond = rep.rss_condition
    assert is_quantifier_free(cond)
    assert free_variables(cond) <= {"y_f", "y_r", "v_f", "v_r"}
    p = RssParams()
    rng = random.Random(23)
    for _ in range(1500):
        s = {
            "y_f": Fraction(rng.randint(0, 4000), 40),
            "y_r": Fraction(rng.randint(0, 4000), 40),
            "v_f": Fraction(rng.randint(0, 1000), 40),
            "v_r": Fraction(rng.randint(0, 1000), 40),
            "t_r": Fraction(0),
        }
        expected = s["y_f"] - s["y_r"] > drss(s["v_f"], s["v_r"], p)
        assert satisfies(s, cond) == expected, s
