"""Node rings: representatives, relations and structure maps."""

import pytest

from cobord.fgl import n_series_of
from cobord.gamma import (
    DecompositionError,
    GammaParams,
    MapError,
    build_gamma,
    decompose_character,
    representative_sets,
    structure_map,
)
from cobord.groups import chain_poset, characters, parse_group, subquotient
from cobord.limit import ArrowValidationError, assemble_diagram, validate_arrows

GROUPS = ["Z/2", "Z/3", "Z/4", "Z/2xZ/2", "Z/6", "Z/2xZ/4"]


@pytest.mark.parametrize("spec", GROUPS)
def test_representative_counts(spec):
    G = parse_group(spec)
    for S in chain_poset(G, "P").nodes:
        reps = representative_sets(S)
        assert len(reps.R) == S.k + 1
        for j in range(S.k + 1):
            sq = subquotient(G, S.level(j), S.level(j + 1))
            assert len(reps.R[j]) == sq.group.order - 1


@pytest.mark.parametrize("spec", GROUPS)
def test_every_character_decomposes(spec):
    G = parse_group(spec)
    for S in chain_poset(G, "P").nodes:
        reps = representative_sets(S)
        for chi in characters(G):
            Ms = decompose_character(reps, 0, chi)
            levels = [reps.level_of(M) for M in Ms]
            assert levels == sorted(set(levels))
            prod = chi.inverse()
            for M in Ms:
                prod = prod * M
            assert prod.is_trivial
        # characters nontrivial on H_1 do not decompose from level 1
        for chi in characters(G):
            if not chi.is_trivial_on(S.level(1)):
                with pytest.raises(DecompositionError):
                    decompose_character(reps, 1, chi)
                break


def test_z2_nodes():
    G = parse_group("Z/2")
    params = GammaParams(D=2, law="multiplicative")
    nodes = {S.ident(): build_gamma(G, S, params) for S in chain_poset(G, "P").nodes}
    top = nodes["[<1>]"]
    assert top.relations == []
    assert top.ring.names == ("u1", "u1^(1)", "u1^(2)", "u1^(3)")
    for ident in ("[e]", "[e < <1>]"):
        g = nodes[ident]
        (rel,) = g.relations
        assert rel == n_series_of(g.law, 2, g.var("u1"))
        assert str(rel) == "2*u1 + b*u1^2"
    assert top.is_invertible("u1")
    assert not nodes["[e]"].is_invertible("u1")


def test_z3_relations_use_formal_sums():
    G = parse_group("Z/3")
    g = build_gamma(G, chain_poset(G, "P").nodes[0], GammaParams(D=2))
    # R_1 has two characters; pairs (1,1), (1,2), (2,2) give three relations
    assert [v.name for v in g.info] == ["u1", "u2"]
    assert len(g.relations) == 3


def test_structure_map_identities():
    G = parse_group("Z/4")
    params = GammaParams(D=2)
    P = chain_poset(G, "P")
    gam = {S.ident(): build_gamma(G, S, params) for S in P.nodes}
    f = structure_map(gam["[e]"], gam["[e < <2>]"])
    # u1 in [e] decomposes as u1 (level 0 lift) in the bigger chain
    assert f.decompositions["u1"][0].exponents == (1,)
    for r in gam["[e]"].relations:
        img = f.apply(r)
        assert img.ring is gam["[e < <2>]"].ring
    with pytest.raises(MapError):
        structure_map(gam["[e < <2>]"], gam["[e]"])


@pytest.mark.parametrize("spec", ["Z/2", "Z/4", "Z/2xZ/2"])
def test_arrows_preserve_relations(spec):
    d = assemble_diagram(parse_group(spec), "P", GammaParams(D=2))
    assert all(d.checks["arrows"].values())
    assert all(d.checks["functoriality"].values())
    assert validate_arrows(d) == d.checks["arrows"]


def test_broken_arrow_is_detected():
    d = assemble_diagram(parse_group("Z/2"), "P''", GammaParams(D=2))
    key = next(k for k, spec in d.arrows.items() if spec.source.relations)
    spec = d.arrows[key]
    name = spec.source.ring.names[0]
    spec.images[name] = spec.images[name] * 3
    spec._mono_cache.clear()
    spec._pow_cache.clear()
    with pytest.raises(ArrowValidationError):
        validate_arrows(d)


def test_params_validation():
    with pytest.raises(ValueError):
        GammaParams(D=-1)
    with pytest.raises(ValueError):
        GammaParams(law="nope")
    with pytest.raises(ValueError):
        GammaParams(I=0)
    assert GammaParams(D=3).index_bound == 4
