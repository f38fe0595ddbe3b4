"""Degreewise limits over chain posets."""

import pytest

from cobord.gamma import GammaParams
from cobord.groups import parse_group
from cobord.limit import (
    assemble_diagram,
    auto_precision,
    compare_flavors,
    default_schedule,
    limit_degree,
    stabilize,
    trivial_group_result,
)

DEGREES = list(range(-8, 9))

# Frozen ranks for Z/2 at the default truncation (D=3, E=2, P=1), all torsion-free.
Z2_RANKS = {-8: 0, -6: 0, -4: 2, -2: 4, 0: 9, 2: 15, 4: 16, 6: 15, 8: 10}


@pytest.fixture(scope="module")
def z2_results():
    G = parse_group("Z/2")
    return {r.degree: r for r in stabilize(G, DEGREES, default_schedule(GammaParams(), DEGREES))}


def test_z2_frozen_values(z2_results):
    for d, r in z2_results.items():
        assert r.stable
        assert r.torsion == []
        assert r.rank == Z2_RANKS.get(d, 0), d


def test_z2_history_has_two_steps(z2_results):
    r = z2_results[0]
    assert [h["params"]["N"] for h in r.history] == [14, 16]
    assert r.history[0]["invariant_factors"] == r.history[1]["invariant_factors"]


def test_auto_precision():
    assert auto_precision(3, 2, 1, DEGREES) == 14
    assert auto_precision(3, 2, 1, [0]) == 10
    assert auto_precision(0, 0, 0, [10], extra=0) == 0


def test_trivial_group_ranks():
    params = GammaParams(D=4)
    for n, p_n in enumerate([1, 1, 2, 3, 5]):
        assert trivial_group_result(2 * n, params).invariant_factors == [0] * p_n
    assert trivial_group_result(3, params).invariant_factors == []
    assert trivial_group_result(10, params).invariant_factors == []
    assert trivial_group_result(-2, params).invariant_factors == []
    (r,) = stabilize(parse_group("1"), [4], default_schedule(params, [4]))
    assert r.stable and r.rank == 2


def test_rational_law_rejected():
    with pytest.raises(ValueError):
        assemble_diagram(parse_group("Z/2"), "P''", GammaParams(law="universal-rational"))


def test_flavors_agree_z4():
    rep = compare_flavors(parse_group("Z/4"), [-2, -1, 0], GammaParams(D=2, N=8))
    assert rep["agree"], rep


def test_euler_tuple_membership():
    params = default_schedule(GammaParams(), [-2])[0]
    diagram = assemble_diagram(parse_group("Z/2"), "P''", params)
    sol = diagram.problem.solve(-2)
    tup = [src.ring.var("u1") for src in diagram.problem.sources]
    assert sol.is_compatible(tup)
    assert not sol.is_zero(tup)
    # dropping one component breaks compatibility
    broken = [tup[0], diagram.problem.sources[1].ring.zero()]
    assert not sol.is_compatible(broken)


def test_witnesses_are_compatible():
    params = GammaParams(D=2, N=8)
    diagram = assemble_diagram(parse_group("Z/2"), "P''", params)
    r = limit_degree(diagram, 0)
    assert r.diagnostics["witnesses_compatible"]
    sol = diagram.problem.solve(0)
    for tup in sol.witness_elements():
        assert sol.is_compatible(tup)
    # witnesses generate the kernel before the torsion relations are imposed
    assert len(r.witnesses) == r.diagnostics["kernel_rank"] >= r.rank


def test_unstabilized_result_is_not_stable():
    diagram = assemble_diagram(parse_group("Z/2"), "P''", GammaParams(D=2, N=8))
    assert limit_degree(diagram, 0).stable is False
    assert assemble_diagram(parse_group("1"), "P''", GammaParams(D=2)).problem is None
