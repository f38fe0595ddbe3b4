"""The cyclic p-group pullback and its agreement with the chain-poset limit."""

import pytest

from cobord.fgl import n_series_of
from cobord.gamma import GammaParams
from cobord.zpn import (
    _balanced,
    build_zpn_diagram,
    build_zpn_ring,
    crosscheck_zpn,
    euler_witness,
    phi_map,
    psi_map,
    zpn_pullback,
)

MULT = GammaParams(D=2, N=6, law="multiplicative")


def test_ring_shapes():
    R0 = build_zpn_ring("R", 2, 1, 0, MULT)
    assert R0.ring.names == ("u[0]",)
    assert R0.relations == [n_series_of(R0.law, 2, R0.var("u[0]"))]
    top = build_zpn_ring("Rn", 2, 1, 0, MULT)
    assert top.ring.names == ("u1", "b1^(1)", "b1^(2)", "b1^(3)")
    assert top.relations == []
    R1 = build_zpn_ring("R", 3, 2, 1, MULT, I=1)
    assert R1.ring.names == ("u1", "u2", "b1^(1)", "b2^(1)", "u[1]")
    assert str(R1.relations[0]).startswith("3*u[1]")


@pytest.mark.parametrize("args", [("R", 4, 1, 0), ("R", 2, 0, 0), ("R", 2, 2, 2), ("Q", 2, 1, 0)])
def test_ring_validation(args):
    with pytest.raises(ValueError):
        build_zpn_ring(*args, MULT)


def test_balanced():
    assert [_balanced(m, 4) for m in range(4)] == [0, 1, 2, -1]
    assert [_balanced(m, 3) for m in range(3)] == [0, 1, -1]


def test_psi_is_identity():
    R = build_zpn_ring("R", 2, 2, 1, MULT)
    S = build_zpn_ring("S", 2, 2, 1, MULT)
    assert psi_map(R, S).is_identity_on_names()


def test_phi_multiplicative():
    R1 = build_zpn_ring("R", 2, 2, 1, MULT)
    S0 = build_zpn_ring("S", 2, 2, 0, MULT)
    f = phi_map(R1, S0)
    assert str(f.images["u[1]"]) == "2*u[0] + b*u[0]^2"
    assert f.images["u1"] == S0.var("u[0]")
    assert f.exact_inverses
    # relations go to multiples of the target relation
    img = f.apply(R1.relations[0])
    assert not img.is_zero()


def test_validation_and_inverse_flag():
    dg = build_zpn_diagram(3, 1, MULT)
    assert all(v for k, v in dg.checks.items() if k != "exact_inverses")
    # Z/3 needs u2 -> [-1]u[0], whose unit part has an exact inverse
    assert dg.checks["exact_inverses"]
    dg = build_zpn_diagram(5, 1, GammaParams(D=1, N=4))
    assert dg.checks["exact_inverses"] is False


def test_pullback_odd_degrees_vanish():
    for r in zpn_pullback(2, 1, [-3, -1, 1, 3], GammaParams(D=2)):
        assert r.invariant_factors == []
        assert r.stable


def test_crosscheck_small():
    rep = crosscheck_zpn(2, 1, [-2, 0, 2], GammaParams(D=2))
    assert rep["agree"]
    assert all(row["zpn_stable"] and row["limit_stable"] for row in rep["degrees"])
    assert rep["euler_tuple"] == {"zpn": True, "limit": True}


def test_euler_witness_z4():
    params = GammaParams(D=2, N=8)
    assert euler_witness(2, 2, params) == {"zpn": True, "limit": True}


def test_rational_law_rejected():
    with pytest.raises(ValueError):
        build_zpn_diagram(2, 1, GammaParams(law="universal-rational"))
