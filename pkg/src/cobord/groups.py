"""Finite abelian groups, subgroup lattices, characters and chain posets."""

from __future__ import annotations

import itertools
import json
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import prod
from typing import Callable, Iterable, Sequence

from .linalg import hnf, smith_decomposition

DEFAULT_MAX_ORDER = 72
FLAVORS = ("P", "P'", "P''")


class GroupSpecError(ValueError):
    pass


class GroupOrderError(ValueError):
    pass


def max_group_order() -> int:
    raw = os.environ.get("COBORD_MAX_GROUP_ORDER")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ORDER
    try:
        value = int(raw)
    except ValueError as exc:
        raise GroupSpecError(f"COBORD_MAX_GROUP_ORDER must be an integer, got {raw!r}") from exc
    if value < 1:
        raise GroupSpecError("COBORD_MAX_GROUP_ORDER must be positive")
    return value


def _check_bound(G: "FinAbGroup") -> None:
    bound = max_group_order()
    if G.order > bound:
        raise GroupOrderError(f"|G| = {G.order} exceeds the configured bound {bound} (COBORD_MAX_GROUP_ORDER)")


# ---------------------------------------------------------------------------
# groups


@dataclass(frozen=True)
class FinAbGroup:
    """``Z/n_1 x ... x Z/n_r`` with ``n_1 | n_2 | ... | n_r``."""

    factors: tuple[int, ...]

    def __post_init__(self) -> None:
        for n in self.factors:
            if n < 2:
                raise GroupSpecError("invariant factors must be at least 2")
        for a, b in zip(self.factors, self.factors[1:]):
            if b % a:
                raise GroupSpecError(f"invariant factors {self.factors} do not form a divisibility chain")

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def order(self) -> int:
        return prod(self.factors)

    def zero(self) -> tuple[int, ...]:
        return (0,) * self.rank

    def reduce(self, g: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(x) % n for x, n in zip(g, self.factors))

    def add(self, g, h) -> tuple[int, ...]:
        return tuple((a + b) % n for a, b, n in zip(g, h, self.factors))

    def elements(self) -> list[tuple[int, ...]]:
        return [tuple(e) for e in itertools.product(*(range(n) for n in self.factors))]

    def __str__(self) -> str:
        return " x ".join(f"Z/{n}" for n in self.factors) if self.factors else "1"


_SPEC = re.compile(r"^\s*Z\s*/\s*(\d+)\s*$")


def normalize_factors(ns: Iterable[int]) -> tuple[int, ...]:
    """Invariant factors of ``+ Z/n_i`` via the Smith form of the diagonal."""
    ns = [int(n) for n in ns]
    if not ns:
        return ()
    diag = [[n if i == j else 0 for j in range(len(ns))] for i, n in enumerate(ns)]
    _, D, _, _ = smith_decomposition(diag, want_u=False)
    return tuple(sorted(abs(D[i][i]) for i in range(len(ns)) if abs(D[i][i]) != 1))


def parse_group(spec: str) -> FinAbGroup:
    """Parse ``"Z/n1 x Z/n2 x ..."`` (or ``"1"``) into invariant-factor form."""
    text = spec.strip()
    if text in ("1", "e", "trivial"):
        return FinAbGroup(())
    ns = []
    for part in re.split(r"\s*[x×*]\s*", text):
        m = _SPEC.match(part)
        if not m:
            raise GroupSpecError(f"cannot parse group factor {part!r} in {spec!r}")
        n = int(m.group(1))
        if n < 2:
            raise GroupSpecError(f"cyclic factor Z/{n} must have n >= 2")
        ns.append(n)
    return FinAbGroup(normalize_factors(ns))


# ---------------------------------------------------------------------------
# subgroups


@dataclass(frozen=True)
class Subgroup:
    """A subgroup, keyed by the HNF of its preimage lattice in ``Z^r``."""

    ambient: FinAbGroup
    lattice: tuple[tuple[int, ...], ...]

    @classmethod
    def generated_by(cls, G: FinAbGroup, gens: Iterable[Sequence[int]]) -> "Subgroup":
        r = G.rank
        rows = [list(G.reduce(g)) for g in gens]
        rows += [[n if i == j else 0 for j in range(r)] for i, n in enumerate(G.factors)]
        H = hnf(rows) if r else []
        return cls(G, tuple(tuple(row) for row in H))

    @cached_property
    def generators(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for row in self.lattice:
            g = self.ambient.reduce(row)
            if any(g):
                out.append(g)
        return tuple(out)

    @cached_property
    def order(self) -> int:
        det = prod(row[i] for i, row in enumerate(self.lattice)) if self.lattice else 1
        return self.ambient.order // det

    @cached_property
    def elements(self) -> frozenset:
        G = self.ambient
        seen = {G.zero()}
        frontier = [G.zero()]
        while frontier:
            nxt = []
            for x in frontier:
                for g in self.generators:
                    y = G.add(x, g)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(seen)

    def contains(self, g: Sequence[int]) -> bool:
        return self.ambient.reduce(g) in self.elements

    def is_subgroup_of(self, other: "Subgroup") -> bool:
        return all(other.contains(g) for g in self.generators)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    @property
    def is_whole(self) -> bool:
        return self.order == self.ambient.order

    def sort_key(self):
        return (self.order, self.generators)

    def label(self) -> str:
        if self.is_trivial:
            return "e"
        if self.ambient.rank == 1:
            return "<" + ",".join(str(g[0]) for g in self.generators) + ">"
        return "<" + ",".join("(" + ",".join(map(str, g)) + ")" for g in self.generators) + ">"

    def __lt__(self, other: "Subgroup") -> bool:
        return self.sort_key() < other.sort_key()


def trivial_subgroup(G: FinAbGroup) -> Subgroup:
    return Subgroup.generated_by(G, [])


def whole_group(G: FinAbGroup) -> Subgroup:
    return Subgroup.generated_by(G, [tuple(1 if i == j else 0 for j in range(G.rank)) for i in range(G.rank)])


@lru_cache(maxsize=None)
def _subgroups(G: FinAbGroup) -> tuple[Subgroup, ...]:
    cyclic = {Subgroup.generated_by(G, [g]) for g in G.elements()}
    found = set(cyclic)
    frontier = set(cyclic)
    while frontier:
        nxt = set()
        for H in frontier:
            for C in cyclic:
                J = Subgroup.generated_by(G, list(H.generators) + list(C.generators))
                if J not in found:
                    found.add(J)
                    nxt.add(J)
        frontier = nxt
    return tuple(sorted(found, key=Subgroup.sort_key))


def subgroups(G: FinAbGroup) -> list[Subgroup]:
    _check_bound(G)
    return list(_subgroups(G))


# ---------------------------------------------------------------------------
# quotients


@dataclass(frozen=True)
class Subquotient:
    """``H_big / H_small`` in invariant-factor form with an explicit projection."""

    group: FinAbGroup
    _basis: tuple  # HNF basis of the big lattice
    _V: tuple
    _keep: tuple
    _small: Subgroup
    _big: Subgroup

    def project(self, g: Sequence[int]) -> tuple[int, ...]:
        if not self._big.contains(g):
            raise ValueError(f"{tuple(g)} is not in the subgroup")
        y = _coords_in_basis(self._basis, list(g), self._big.ambient)
        out = []
        for t, idx in enumerate(self._keep):
            s = sum(y[r] * self._V[r][idx] for r in range(len(y)))
            out.append(s % self.group.factors[t])
        return tuple(out)


def _coords_in_basis(basis, vec, G: FinAbGroup) -> list[int]:
    """Integer coordinates of a lattice vector in an HNF (upper triangular) basis.

    ``vec`` is an element of the finite group; any integer lift inside the
    lattice works, and we adjust by ``n_i e_i`` as needed (those lie in it).
    """
    v = list(vec)
    out = []
    r = len(basis)
    for i in range(r):
        row = basis[i]
        piv = row[i]
        q, rem = divmod(v[i], piv)
        if rem:
            # shift by a multiple of n_i e_i; the lattice contains it
            n = G.factors[i]
            for t in range(1, piv + 1):
                if (v[i] + t * n) % piv == 0:
                    v[i] += t * n
                    break
            else:  # pragma: no cover - impossible for lattice members
                raise ValueError("vector not in lattice")
            q = v[i] // piv
        out.append(q)
        v = [a - q * b for a, b in zip(v, row)]
    return out


def subquotient(G: FinAbGroup, small: Subgroup, big: Subgroup) -> Subquotient:
    if not small.is_subgroup_of(big):
        raise ValueError("the first subgroup is not contained in the second")
    basis = [list(r) for r in big.lattice]
    rows = [_coords_in_basis(basis, list(r), G) for r in small.lattice]
    _, D, V, _ = smith_decomposition(rows, len(basis), want_u=False)
    diag = [abs(D[i][i]) if i < len(D) else 0 for i in range(len(basis))]
    keep = tuple(i for i, d in enumerate(diag) if d != 1)
    factors = tuple(diag[i] for i in keep)
    if any(d == 0 for d in factors):  # pragma: no cover - finite groups only
        raise ArithmeticError("infinite subquotient")
    Q = FinAbGroup(factors)
    return Subquotient(Q, tuple(tuple(r) for r in basis), tuple(tuple(r) for r in V), keep, small, big)


def quotient(G: FinAbGroup, H: Subgroup) -> tuple[FinAbGroup, Callable[[Sequence[int]], tuple[int, ...]]]:
    """``G/H`` with its projection on element tuples."""
    if H.ambient != G:
        raise ValueError("H is not a subgroup of G")
    sq = subquotient(G, H, whole_group(G))
    return sq.group, sq.project


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    """``g -> exp(2 pi i sum_j c_j g_j / n_j)``."""

    group: FinAbGroup
    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exponents", self.group.reduce(self.exponents))

    def __mul__(self, other: "Character") -> "Character":
        if other.group != self.group:
            raise ValueError("characters of different groups")
        return Character(self.group, tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def inverse(self) -> "Character":
        return Character(self.group, tuple(-a for a in self.exponents))

    def value(self, g: Sequence[int]) -> Fraction:
        """``chi(g)`` as a fraction in ``[0, 1)`` (the angle divided by ``2 pi``)."""
        s = sum(Fraction(c * x, n) for c, x, n in zip(self.exponents, g, self.group.factors))
        return s - (s.numerator // s.denominator)

    @property
    def is_trivial(self) -> bool:
        return not any(self.exponents)

    def is_trivial_on(self, H: Subgroup) -> bool:
        return all(self.value(h) == 0 for h in H.generators)

    def restriction_key(self, H: Subgroup) -> tuple[Fraction, ...]:
        return tuple(self.value(h) for h in H.generators)

    def label(self) -> str:
        if self.group.rank == 1:
            return f"chi{self.exponents[0]}"
        return "chi(" + ",".join(map(str, self.exponents)) + ")"

    def __str__(self) -> str:
        return self.label()


def characters(G: FinAbGroup) -> list[Character]:
    """All characters, trivial first, in lexicographic exponent order."""
    return [Character(G, e) for e in G.elements()]


def lift_character(G: FinAbGroup, Hj: Subgroup, Hj1: Subgroup, lam: Character) -> Character:
    """Canonical character of ``G`` trivial on ``Hj`` restricting to ``lam`` on ``Hj1/Hj``.

    ``lam`` is a character of ``subquotient(G, Hj, Hj1).group``.
    """
    if Hj == Hj1 or not Hj.is_subgroup_of(Hj1):
        raise ValueError("need a strict inclusion Hj < Hj1")
    if lam.is_trivial:
        raise ValueError("lift_character needs a nontrivial character")
    sq = subquotient(G, Hj, Hj1)
    if lam.group != sq.group:
        raise ValueError("character is not defined on the subquotient")
    checks = list(Hj.generators) + list(Hj1.generators)
    targets = [lam.value(sq.project(h)) for h in checks]
    for chi in characters(G):
        if [chi.value(h) for h in checks] == targets:
            return chi
    raise ArithmeticError("no lift found")  # pragma: no cover


@lru_cache(maxsize=None)
def canonical_lifts(G: FinAbGroup, Hj: Subgroup, Hj1: Subgroup) -> tuple[Character, ...]:
    """Lexicographically least lifts of every nontrivial character of ``Hj1/Hj``.

    Ordered by the lift itself; depends only on the triple of arguments.
    """
    reps: dict = {}
    for chi in characters(G):
        if not chi.is_trivial_on(Hj):
            continue
        key = chi.restriction_key(Hj1)
        if all(v == 0 for v in key):
            continue
        reps.setdefault(key, chi)
    return tuple(sorted(reps.values(), key=lambda c: c.exponents))


# ---------------------------------------------------------------------------
# chains and posets


@dataclass(frozen=True)
class SubgroupChain:
    group: FinAbGroup
    links: tuple[Subgroup, ...]

    def __post_init__(self) -> None:
        if not self.links:
            raise ValueError("a chain needs at least one subgroup")
        for a, b in zip(self.links, self.links[1:]):
            if a == b or not a.is_subgroup_of(b):
                raise ValueError("chain links must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.links)

    def level(self, j: int) -> Subgroup:
        """``H_j`` with ``H_0 = e`` and ``H_{k+1} = G``."""
        if j == 0:
            return trivial_subgroup(self.group)
        if j == self.k + 1:
            return whole_group(self.group)
        return self.links[j - 1]

    def ident(self) -> str:
        return "[" + " < ".join(H.label() for H in self.links) + "]"

    def to_json(self) -> list:
        return [[list(r) for r in H.lattice] for H in self.links]

    def sort_key(self):
        return (self.k, tuple(H.sort_key() for H in self.links))

    def is_subchain_of(self, other: "SubgroupChain") -> bool:
        return set(self.links) <= set(other.links)


@dataclass(frozen=True)
class ChainPoset:
    group: FinAbGroup
    flavor: str
    nodes: tuple[SubgroupChain, ...]
    relations: tuple[tuple[int, int], ...]  # (i, j) with nodes[i] < nodes[j]

    def covering(self) -> list[tuple[int, int]]:
        rel = set(self.relations)
        return [(i, j) for (i, j) in self.relations if not any((i, t) in rel and (t, j) in rel for t in range(len(self.nodes)))]

    def singletons(self) -> list[int]:
        return [i for i, S in enumerate(self.nodes) if S.k == 1]

    def to_json(self) -> dict:
        ids = [S.ident() for S in self.nodes]
        adj = {ids[i]: [] for i in range(len(ids))}
        for i, j in self.relations:
            adj[ids[i]].append(ids[j])
        return {"group": str(self.group), "flavor": self.flavor, "nodes": ids, "adjacency": adj}


def _has_intermediate(subs: Sequence[Subgroup], a: Subgroup, b: Subgroup) -> bool:
    return any(K != a and K != b and a.is_subgroup_of(K) and K.is_subgroup_of(b) for K in subs)


def chain_poset(G: FinAbGroup, flavor: str = "P''") -> ChainPoset:
    flavor = {"P'": "P'", "P''": "P''", "P": "P", "Pprime": "P'", "Pdouble": "P''", "P′": "P'", "P″": "P''"}.get(flavor, flavor)
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    subs = subgroups(G)
    chains: list[tuple[Subgroup, ...]] = []

    def extend(chain):
        chains.append(chain)
        for H in subs:
            if H != chain[-1] and chain[-1].is_subgroup_of(H):
                extend(chain + (H,))

    for H in subs:
        extend((H,))
    if flavor != "P":
        chains = [c for c in chains if len(c) <= 2]
    if flavor == "P''":
        chains = [c for c in chains if len(c) == 1 or not _has_intermediate(subs, c[0], c[1])]
    nodes = sorted((SubgroupChain(G, c) for c in chains), key=SubgroupChain.sort_key)
    rel = [(i, j) for i, S in enumerate(nodes) for j, T in enumerate(nodes) if i != j and S.is_subchain_of(T)]
    return ChainPoset(G, flavor, tuple(nodes), tuple(rel))


def poset_dump(P: ChainPoset) -> str:
    return json.dumps(P.to_json(), sort_keys=True)


__all__ = [
    "Character",
    "ChainPoset",
    "FinAbGroup",
    "GroupOrderError",
    "GroupSpecError",
    "Subgroup",
    "SubgroupChain",
    "canonical_lifts",
    "chain_poset",
    "characters",
    "lift_character",
    "max_group_order",
    "parse_group",
    "quotient",
    "subgroups",
    "subquotient",
]
