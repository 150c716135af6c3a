"""Built-in scenario models and the reference safety distance."""

from fractions import Fraction

import pytest

from rssforge.hcfg import check_compatibility, validate
from rssforge.scenarios import (
    BUILDERS,
    DEFAULT_CZ_LENGTH,
    INTERSECTION_VARS,
    IntersectionParams,
    ONEWAY_VARS,
    RssParams,
    build_intersection,
    build_oneway,
    drss,
)


def test_builders_registry():
    assert set(BUILDERS) >= {"oneway", "intersection"}
    for name, builder in BUILDERS.items():
        sc = builder()
        assert sc.name == name


def test_drss_reference_values():
    p = RssParams()  # rho=0.3, a_max=2, b_min=b_max=5
    # stationary rear car never needs distance
    assert drss(10, 0, p) == 0
    # equal speeds: v*rho + a*rho^2/2 + ((v+a*rho)^2 - v^2)/(2b)
    v = Fraction(10)
    expected = (
        v * Fraction(3, 10)
        + Fraction(2) * Fraction(9, 100) / 2
        + (v + Fraction(6, 10)) ** 2 / 10
        - v**2 / 10
    )
    assert drss(10, 10, p) == expected
    # a fast front car over a slow rear one needs none
    assert drss(25, 1, p) == 0
    with pytest.raises(ValueError):
        drss(-1, 0, p)


def test_drss_monotone_in_rear_speed():
    p = RssParams()
    prev = Fraction(-1)
    for vr in range(0, 26):
        cur = drss(10, vr, p)
        assert cur >= prev
        prev = cur


def test_param_validation():
    with pytest.raises(ValueError):
        RssParams(b_min=6, b_max=5)
    with pytest.raises(ValueError):
        RssParams(rho=-1)
    with pytest.raises(ValueError):
        IntersectionParams(b=0)
    p = IntersectionParams.with_cz_length(7)
    assert p.cz_sv == (Fraction(-7, 2), Fraction(7, 2))


def test_oneway_structure():
    sc = build_oneway()
    assert tuple(sc.network.variables) == ONEWAY_VARS
    assert check_compatibility(sc.network).ok
    for c in sc.network.components:
        assert validate(c).ok
    prod = sc.product()
    assert validate(prod).ok
    assert sc.final_tuples() <= frozenset(prod.locations)


def test_intersection_structure():
    sc = build_intersection()
    assert tuple(sc.network.variables) == INTERSECTION_VARS
    assert len(sc.network.components) == 6
    assert check_compatibility(sc.network).ok
    prod = sc.product()
    assert len(prod.locations) == 972
    # unsafe and final tuple sets are disjoint views of the product
    assert sc.unsafe_tuples()
    assert sc.final_tuples()


def test_intersection_cz_default_length():
    p = IntersectionParams()
    assert float(p.cz_sv[1] - p.cz_sv[0]) == DEFAULT_CZ_LENGTH
    assert float(p.cz_pov[1] - p.cz_pov[0]) == DEFAULT_CZ_LENGTH


def test_scenario_json_export_is_stable():
    sc = build_intersection()
    assert sc.to_json() == build_intersection().to_json()
