"""Bounded graded rings and their degreewise presentations."""

import pytest

from cobord.fgl import make_base, make_law, n_series_of
from cobord.graded import GeneratorRoster, RosterEntry, element, graded_presentation, monomial_basis
from cobord.poly import GradedBase, PolyRing

TRIVIAL = GradedBase("additive", 0)


def laurent_u(bound=2):
    return GeneratorRoster(TRIVIAL, (RosterEntry("u", -2, "laurent"),), laurent_bound=bound)


def test_monomial_basis_examples():
    R = laurent_u()
    assert monomial_basis(R, -4) == [(2,)]
    assert monomial_basis(R, 2) == [(-1,)]
    assert monomial_basis(R, 6) == []
    assert monomial_basis(R, 1) == []


def test_polynomial_and_series_modes():
    R = GeneratorRoster(
        TRIVIAL,
        (RosterEntry("x", 2, "polynomial", bound=3), RosterEntry("y", 2, "series", block=1)),
        series_precision={1: 2},
    )
    assert monomial_basis(R, 4) == [(2, 0), (1, 1), (0, 2)] or sorted(monomial_basis(R, 4)) == [(0, 2), (1, 1), (2, 0)]
    assert len(monomial_basis(R, 6)) == 3  # y^3 is beyond the series precision
    assert not R.within((0, 3))
    assert not R.within((4, 0))
    with pytest.raises(ValueError):
        RosterEntry("z", 2, "weird")


def test_additive_two_series_quotient():
    # Z[u^{+-1}] / ([2]u) with [2]u = 2u for the additive law: Z/2 in every reachable degree
    law = make_law("additive", 0, 3)
    R = laurent_u()
    ring = R.ring
    rel = n_series_of(law, 2, ring.var("u"))
    for d in (-4, -2, 0, 2):
        P = graded_presentation(R, [rel], d)
        assert P.invariant_factors() == [2], d
    # at the top edge of the box the relation would need u^{-3}, so nothing is killed
    assert graded_presentation(R, [rel], 4).invariant_factors() == [0]
    assert graded_presentation(R, [rel], 6).invariant_factors() == []


def test_multiplicative_presentation():
    # [2]u = 2u + b u^2 with |b| = 2 in a base truncated at degree 2
    base = make_base("multiplicative", 2)
    law = make_law("multiplicative", 2, 3)
    R = GeneratorRoster(base, (RosterEntry("u", -2, "laurent"),), laurent_bound=2)
    rel = n_series_of(law, 2, R.ring.var("u")).to_ring(R.ring)
    P = graded_presentation(R, [rel], -2)
    # basis u, b u^2; relations rel = 2u + b u^2 and b u rel = 2b u^2 (b^2 is truncated)
    assert len(P.generators) == 2
    assert P.invariant_factors() == [4]


def test_element_truncation():
    R = laurent_u(1)
    u = R.ring.var("u")
    e = element(R, u * u)
    assert e.truncated and e.poly.is_zero()
    assert not element(R, u).truncated
    assert str(element(R, u) * element(R, u)) == "0"
