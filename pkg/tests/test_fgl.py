"""Formal group laws against independent sympy expansions."""

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cobord.fgl import (
    equal_through,
    euler_coeff,
    fgl_sum,
    formal_inverse,
    law_to_json,
    make_law,
    n_series,
    n_series_of,
    series_from_json,
    series_to_json,
)
from cobord.lazard import integral_generators, partition_count
from cobord.poly import PolyRing


def to_sympy(p, symbols):
    """Poly -> sympy expression; base generators map to sympy symbols by name."""
    ring = p.ring
    gens = [sp.Symbol(n) for n, _ in ring.base.generators]
    vars_ = [symbols[n] for n in ring.names]
    expr = 0
    nv = ring.nvars
    for k, c in p.terms.items():
        term = sp.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for v, e in zip(vars_, k[:nv]):
            term *= v**e
        for g, e in zip(gens, k[nv:]):
            term *= g**e
        expr += term
    return sp.expand(expr)


def truncate_sym(expr, variables, order):
    poly = sp.Poly(sp.expand(expr), *variables)
    return sp.expand(sum(c * sp.prod([v**e for v, e in zip(variables, m)]) for m, c in poly.terms() if sum(m) <= order))


def drop_base_degree(expr, max_degree, gens_deg):
    poly = sp.Poly(sp.expand(expr), *gens_deg.keys())
    out = 0
    for m, c in poly.terms():
        if sum(e * d for e, d in zip(m, gens_deg.values())) <= max_degree:
            out += c * sp.prod([g**e for g, e in zip(gens_deg.keys(), m)])
    return sp.expand(out)


def test_rational_law_matches_sympy_log_exp():
    order, D = 4, 3
    law = make_law("universal-rational", 2 * D, order)
    x, y, t = sp.symbols("x y t")
    ms = [sp.Symbol(f"m{i}") for i in range(1, D + 1)]
    log = t + sum(ms[i - 1] * t ** (i + 1) for i in range(1, D + 1))
    # compositional inverse by fixed-point iteration exp = t - (log(exp) - exp)
    inv = t
    for _ in range(order + 1):
        inv = sp.expand(t - (log.subs(t, inv) - inv))
        inv = truncate_sym(inv, [t], order + 1)
    s = log.subs(t, x) + log.subs(t, y)
    F = truncate_sym(inv.subs(t, s), [x, y], order)
    F = drop_base_degree(F, 2 * D, {m: 2 * i for i, m in enumerate(ms, start=1)})
    ours = to_sympy(law.as_series(order), {"x": x, "y": y})
    assert sp.expand(F - ours) == 0


def test_multiplicative_and_additive_laws():
    law = make_law("multiplicative", 6, 3)
    x, y = sp.symbols("x y")
    assert to_sympy(law.as_series(3), {"x": x, "y": y}) == x + y + sp.Symbol("b") * x * y
    law = make_law("additive", 6, 3)
    assert to_sympy(law.as_series(3), {"x": x, "y": y}) == x + y


def test_multiplicative_nseries_cli_example():
    law = make_law("multiplicative", 6, 3)
    s = n_series(law, 2, 3)
    assert str(s) == "2*x + b*x^2"


@pytest.mark.parametrize("k", [-3, -1, 0, 1, 2, 5])
def test_multiplicative_closed_form(k):
    order = 6
    law = make_law("multiplicative", 2 * order, order)
    x, b = sp.symbols("x b")
    got = to_sympy(n_series(law, k, order), {"x": x})
    # (1 + b x)^k = 1 + b [k](x)
    expected = truncate_sym(sp.series(((1 + b * x) ** k - 1) / b, x, 0, order + 1).removeO(), [x], order)
    assert sp.expand(got - expected) == 0


def test_lazard_generators_first_coefficients():
    st_ = integral_generators(6)
    assert st_.expressions[(1, 1)] == {(1, 0, 0): -1}
    assert st_.expressions[(1, 2)] == {(0, 1, 0): -1}
    assert st_.lattice_ranks == tuple(partition_count(n) for n in range(1, 4))


def test_integral_law_is_integral_and_matches_rational():
    st_ = integral_generators(8, order=4)
    rational = make_law("universal-rational", 8, 4)
    for (i, j), c in st_.law.coefficients.items():
        assert all(Fraction(v).denominator == 1 for v in c.values())
        assert st_.to_rational(c) == {k: Fraction(v) for k, v in rational.coefficients.get((i, j), {}).items() if v}


def test_inverse_and_euler_coefficients():
    law = make_law("universal-integral", 6, 4)
    ring = PolyRing(law.base, [("x", -2)], order=4)
    x = ring.var("x")
    assert fgl_sum(law, x, formal_inverse(law, x)).is_zero()
    # u^(1) = 1 + a11 u + a12 u^2 + ...
    e1 = euler_coeff(law, 1, "u", 4)
    assert e1.coefficient_in("u", 0) == e1.ring.one()
    assert e1.coefficient_in("u", 1) == e1.ring.from_base(law.a(1, 1))


def test_series_json_round_trip():
    law = make_law("universal-integral", 6, 4)
    s = n_series(law, 3, 4)
    data = series_to_json(s)
    assert set(data) == {"vars", "order", "terms"}
    assert series_from_json(data, law.base) == s
    assert '"kind": "universal-integral"' in law_to_json(law)


def test_mod_p_kind_is_rejected():
    with pytest.raises(ValueError):
        make_law("mod-p-reduced", 6, 3)


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(["additive", "multiplicative", "universal-integral"]),
    m=st.integers(-4, 4),
    n=st.integers(-4, 4),
)
def test_nseries_identities_property(kind, m, n):
    order = 5
    law = make_law(kind, 2 * order, order)
    ring = PolyRing(law.base, [("x", -2)], order=order)
    x = ring.var("x")
    assert n_series_of(law, m, n_series_of(law, n, x)) == n_series_of(law, m * n, x)
    assert fgl_sum(law, n_series_of(law, m, x), n_series_of(law, n, x)) == n_series_of(law, m + n, x)


@settings(max_examples=15, deadline=None)
@given(order=st.integers(2, 5))
def test_axioms_property(order):
    law = make_law("universal-integral", 2 * order, order)
    ring = PolyRing(law.base, [("x", -2), ("y", -2), ("z", -2)], order=order)
    x, y, z = (ring.var(v) for v in "xyz")
    assert fgl_sum(law, x, ring.zero()) == x
    assert fgl_sum(law, x, y) == fgl_sum(law, y, x)
    assert equal_through(fgl_sum(law, fgl_sum(law, x, y), z), fgl_sum(law, x, fgl_sum(law, y, z)), order)
