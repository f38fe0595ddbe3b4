"""Integral polynomial generators for the truncated Lazard ring.

The universal law is constructed over Q[m_1, m_2, ...].  Its coefficients
generate a subring L (the Lazard ring) which is polynomial over Z on one
generator per even degree.  This module finds such generators degree by
degree, using Hermite normal forms of the lattice spanned by a-monomials,
and rewrites every a_ij as an integer polynomial in them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm

import flint

from .fgl import FormalGroupLaw, make_base, make_law
from .poly import GradedBase, base_poly_mul

BaseElem = dict


class LatticeError(ArithmeticError):
    """Raised when a lattice computation contradicts the known structure of L."""


def partition_count(n: int) -> int:
    table = [1] + [0] * n
    for part in range(1, n + 1):
        for k in range(part, n + 1):
            table[k] += table[k - part]
    return table[n]


def _a_indices(n: int) -> list[tuple[int, int]]:
    """Pairs ``i <= j`` with ``a_ij`` in degree ``2n``."""
    return [(i, n + 1 - i) for i in range(1, n + 1) if i <= n + 1 - i]


def _multisets(parts: list[tuple[int, tuple[int, int]]], n: int, start: int = 0):
    """Multisets of weighted labels with total weight n."""
    if n == 0:
        yield ()
        return
    for idx in range(start, len(parts)):
        w, lab = parts[idx]
        if w <= n:
            for rest in _multisets(parts, n - w, idx):
                yield (lab,) + rest


def _hnf_rows(rows: list[list[int]]) -> list[list[int]]:
    if not rows:
        return []
    H = flint.fmpz_mat(rows).hnf()
    out = [[int(x) for x in r] for r in H.tolist()]
    return [r for r in out if any(r)]


@dataclass(frozen=True, eq=False)
class IntegralStructure:
    """Result of :func:`integral_generators`."""

    rational_base: GradedBase
    base: GradedBase
    law: FormalGroupLaw
    generators_in_m: tuple[BaseElem, ...]  # x_n as an m-polynomial
    generator_choice: tuple[tuple[tuple[tuple[int, int], int], ...], ...]  # x_n = sum c * a_ij
    expressions: dict  # (i, j) -> {x exps: int}
    lattice_ranks: tuple[int, ...]

    def to_rational(self, elem: BaseElem) -> BaseElem:
        """Re-expand an x-polynomial in the m-generators."""
        rb = self.rational_base
        out: dict = {}
        for exps, c in elem.items():
            term = {rb.one(): Fraction(c)}
            for n, e in enumerate(exps, start=1):
                for _ in range(e):
                    term = base_poly_mul(rb, term, self.generators_in_m[n - 1])
            for k, v in term.items():
                s = out.get(k, 0) + v
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return out


def integral_generators(max_degree: int, order: int | None = None) -> IntegralStructure:
    """Compute integral generators of the Lazard ring through degree ``max_degree``."""
    D = max_degree // 2
    return _integral_generators(max_degree, D if order is None else max(order, 1))


@lru_cache(maxsize=None)
def _integral_generators(max_degree: int, order: int) -> IntegralStructure:
    D = max_degree // 2
    rlaw = make_law("universal-rational", max_degree, max(D, 1))
    rb = rlaw.base
    a = {k: v for k, v in rlaw.coefficients.items()}

    def coords(elem: BaseElem, basis: list) -> list[Fraction]:
        pos = {m: i for i, m in enumerate(basis)}
        vec = [Fraction(0)] * len(basis)
        for k, c in elem.items():
            vec[pos[k]] += Fraction(c)
        return vec

    def product(labels) -> BaseElem:
        out = {rb.one(): Fraction(1)}
        for lab in labels:
            out = base_poly_mul(rb, out, a.get(lab, {}))
        return out

    parts = [(i + j - 1, (i, j)) for n in range(1, D + 1) for (i, j) in _a_indices(n)]
    gens_m: list[BaseElem] = []
    choice = []
    ranks = []
    for n in range(1, D + 1):
        basis = rb.monomials(2 * n)
        vecs = []
        for labels in _multisets(parts, n):
            vecs.append(coords(product(labels), basis))
        den = lcm(*(x.denominator for v in vecs for x in v)) if vecs else 1
        lattice = _hnf_rows([[int(x * den) for x in v] for v in vecs])
        ranks.append(len(lattice))
        if len(lattice) != partition_count(n):
            raise LatticeError(f"degree {2 * n}: lattice rank {len(lattice)} != p({n})")
        # indecomposable part: m_n-coefficient of a_{i, n+1-i}
        mn = tuple(1 if t == n - 1 else 0 for t in range(rb.ngens))
        idx = _a_indices(n)
        cvals = [Fraction(a[(i, j)].get(mn, 0)) for (i, j) in idx]
        cden = lcm(*(c.denominator for c in cvals))
        ints = [int(c * cden) for c in cvals]
        g = 0
        for v in ints:
            g = gcd(g, v)
        combo = None
        for t, v in enumerate(ints):
            if abs(v) == g:
                combo = [(idx[t], 1 if v > 0 else -1)]
                break
        if combo is None:
            combo, acc = [], 0
            coeffs = _bezout(ints)
            combo = [(idx[t], c) for t, c in enumerate(coeffs) if c]
            acc = sum(c * ints[t] for t, c in enumerate(coeffs))
            if abs(acc) != g:
                raise LatticeError("extended gcd failed")
        xm: dict = {}
        for lab, c in combo:
            for k, v in a[lab].items():
                s = xm.get(k, 0) + c * v
                if s:
                    xm[k] = s
                else:
                    xm.pop(k, None)
        gens_m.append(xm)
        choice.append(tuple(combo))

    base = make_base("universal-integral", max_degree)
    xgens = [(f"x{n}", 2 * n) for n in range(1, D + 1)]
    assert list(base.generators) == xgens

    # express each a_ij in x-monomials
    def x_monomial_in_m(exps) -> BaseElem:
        out = {rb.one(): Fraction(1)}
        for n, e in enumerate(exps, start=1):
            for _ in range(e):
                out = base_poly_mul(rb, out, gens_m[n - 1])
        return out

    expressions: dict = {}
    for n in range(1, D + 1):
        basis = rb.monomials(2 * n)
        xmons = base.monomials(2 * n)
        M = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in coords(x_monomial_in_m(e), basis)] for e in xmons])
        if M.rank() != len(basis):
            raise LatticeError(f"degree {2 * n}: x-monomials are not a rational basis")
        # lattice check: x-monomials span exactly L_2n
        vecs = [coords(x_monomial_in_m(e), basis) for e in xmons]
        lat_vecs = [coords(product(labels), basis) for labels in _multisets(parts, n)]
        den = lcm(*(x.denominator for v in vecs + lat_vecs for x in v))
        if _hnf_rows([[int(x * den) for x in v] for v in vecs]) != _hnf_rows([[int(x * den) for x in v] for v in lat_vecs]):
            raise LatticeError(f"degree {2 * n}: x-monomials do not span the Lazard lattice")
        Mt = M.transpose()
        for (i, j) in _a_indices(n):
            target = coords(a[(i, j)], basis)
            rhs = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator)] for x in target])
            sol = Mt.solve(rhs)
            expr = {}
            for r, e in enumerate(xmons):
                v = sol[r, 0]
                if v.q != 1:
                    raise LatticeError(f"a_{i}{j} is not integral in the chosen generators")
                if v != 0:
                    expr[e] = int(v.p)
            expressions[(i, j)] = expr
            expressions[(j, i)] = expr

    coeffs = {(1, 0): {base.one(): 1}, (0, 1): {base.one(): 1}}
    for (i, j), e in expressions.items():
        if i + j <= order + 1 and e:
            coeffs[(i, j)] = dict(e)
    law = FormalGroupLaw(base, order, coeffs, integral_expressions={f"a{i}{j}": e for (i, j), e in expressions.items()})
    return IntegralStructure(rb, base, law, tuple(gens_m), tuple(choice), expressions, tuple(ranks))


def _bezout(values: list[int]) -> list[int]:
    """Integers c with sum c_i v_i = gcd(values)."""
    coeffs = [0] * len(values)
    g = 0
    for t, v in enumerate(values):
        if v == 0:
            continue
        if g == 0:
            g, coeffs[t] = v, 1
            continue
        s, r, gg = _xgcd(g, v)
        coeffs = [c * s for c in coeffs]
        coeffs[t] = r
        g = gg
    if g < 0:
        coeffs = [-c for c in coeffs]
    return coeffs


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return x0, y0, a


__all__ = ["IntegralStructure", "LatticeError", "integral_generators", "partition_count", "make_law"]
