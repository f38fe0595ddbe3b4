"""Graded rings with bounded monomial bases and their degreewise presentations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

from .linalg import FGAbPresentation
from .poly import GradedBase, Poly, PolyRing

MODES = ("polynomial", "laurent", "series")


@dataclass(frozen=True)
class RosterEntry:
    name: str
    degree: int
    mode: str
    block: int = 0  # completion level for series/laurent-completion variables
    bound: int | None = None  # per-variable exponent cap for polynomial mode

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class GeneratorRoster:
    base: GradedBase
    entries: tuple[RosterEntry, ...]
    laurent_bound: int = 2
    series_precision: Mapping[int, int] = field(default_factory=dict)
    polynomial_bound: int = 4

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("roster names must be unique")
        if self.laurent_bound < 0 or self.polynomial_bound < 0:
            raise ValueError("bounds must be nonnegative")
        for e in self.entries:
            if e.mode == "series" and self.series_precision.get(e.block, 0) < 0:
                raise ValueError("series precision must be nonnegative")

    @property
    def ring(self) -> PolyRing:
        return PolyRing(self.base, [(e.name, e.degree) for e in self.entries])

    def precision(self, block: int) -> int:
        return self.series_precision.get(block, max(self.series_precision.values(), default=self.polynomial_bound))

    def within(self, exps: Sequence[int]) -> bool:
        blocks: dict[int, int] = {}
        for e, x in zip(self.entries, exps):
            if e.mode == "laurent":
                if abs(x) > self.laurent_bound:
                    return False
            elif x < 0:
                return False
            elif e.mode == "polynomial":
                if x > (e.bound if e.bound is not None else self.polynomial_bound):
                    return False
            else:
                blocks[e.block] = blocks.get(e.block, 0) + x
        return all(tot <= self.precision(b) for b, tot in blocks.items())

    def ranges(self) -> list[range]:
        out = []
        for e in self.entries:
            if e.mode == "laurent":
                out.append(range(-self.laurent_bound, self.laurent_bound + 1))
            elif e.mode == "polynomial":
                out.append(range(0, (e.bound if e.bound is not None else self.polynomial_bound) + 1))
            else:
                out.append(range(0, self.precision(e.block) + 1))
        return out


@dataclass(frozen=True)
class RingElement:
    roster: GeneratorRoster
    poly: Poly
    truncated: bool = False

    def __mul__(self, other: "RingElement") -> "RingElement":
        return multiply(self, other)

    def __str__(self) -> str:
        return str(self.poly)


def element(roster: GeneratorRoster, poly: Poly) -> RingElement:
    nv = len(roster.entries)
    kept = {k: c for k, c in poly.terms.items() if roster.within(k[:nv])}
    return RingElement(roster, Poly(roster.ring, kept), len(kept) != len(poly.terms))


def multiply(a: RingElement, b: RingElement) -> RingElement:
    if a.roster != b.roster:
        raise ValueError("roster mismatch")
    prod = element(a.roster, a.poly * b.poly)
    return RingElement(a.roster, prod.poly, prod.truncated or a.truncated or b.truncated)


def _monomial_order(key: tuple[int, ...], nv: int):
    return (sum(abs(x) for x in key[:nv]), tuple(-x for x in key[:nv]), key[nv:])


def monomial_basis(roster: GeneratorRoster, d: int) -> list[tuple[int, ...]]:
    """Ring keys (variable exponents then base exponents) of degree ``d`` within bounds."""
    base = roster.base
    nv = len(roster.entries)
    degs = [e.degree for e in roster.entries]
    by_degree: dict[int, list] = {}
    for m in base.all_monomials():
        by_degree.setdefault(base.degree(m), []).append(m)
    out = []
    for exps in itertools.product(*roster.ranges()):
        if not roster.within(exps):
            continue
        vd = sum(e * g for e, g in zip(exps, degs))
        for m in by_degree.get(d - vd, ()):
            out.append(tuple(exps) + tuple(m))
    out.sort(key=lambda k: _monomial_order(k, nv))
    return out


def graded_presentation(roster: GeneratorRoster, relations: Sequence[Poly | RingElement], d: int) -> FGAbPresentation:
    """Degree-``d`` piece of the bounded ring modulo the ideal generated by ``relations``.

    Products leaving the bounds are truncated.  Rational coefficients are
    cleared row by row, which is sound for ranks only.
    """
    ring = roster.ring
    nv = len(roster.entries)
    basis = monomial_basis(roster, d)
    pos = {k: i for i, k in enumerate(basis)}
    rows = []
    for r in relations:
        p = r.poly if isinstance(r, RingElement) else r
        if p.is_zero():
            continue
        p = p.to_ring(ring) if p.ring is not ring else p
        if not p.is_homogeneous():
            raise ValueError(f"relation {p} is not homogeneous")
        dr = p.degree()
        for m in monomial_basis(roster, d - dr):
            prod = p * Poly(ring, {m: 1})
            row = [Fraction(0)] * len(basis)
            hit = False
            for k, c in prod.terms.items():
                i = pos.get(k)
                if i is not None:
                    row[i] += c
                    hit = True
            if not hit:
                continue
            den = lcm(*(Fraction(x).denominator for x in row))
            rows.append([int(x * den) for x in row])
    labels = [Poly(ring, {k: 1}).format_key(k) for k in basis]
    return FGAbPresentation(labels, rows, d)


__all__ = [
    "GeneratorRoster",
    "RingElement",
    "RosterEntry",
    "element",
    "graded_presentation",
    "monomial_basis",
    "multiply",
]
