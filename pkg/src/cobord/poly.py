"""Sparse Laurent polynomials over a degree-truncated graded coefficient ring.

A monomial key is a flat tuple ``(variable exponents..., base exponents...)``.
Terms whose base part has degree above ``base.max_degree`` are dropped on
construction, so every ring here is an honest quotient by the ideal of
high-degree coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

Coeff = int | Fraction


def weighted_vectors(weights: Sequence[int], total: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative integer vectors ``e`` with ``sum(e[i] * weights[i]) == total``."""
    if not weights:
        if total == 0:
            yield ()
        return
    w, rest = weights[0], weights[1:]
    for k in range(total // w + 1):
        for tail in weighted_vectors(rest, total - k * w):
            yield (k,) + tail


@dataclass(frozen=True)
class GradedBase:
    """A graded coefficient ring: polynomials in even-degree generators.

    ``max_degree`` is the largest coefficient degree kept (``2D``).  ``rational``
    selects :class:`fractions.Fraction` coefficients instead of integers.
    """

    kind: str
    max_degree: int
    generators: tuple[tuple[str, int], ...] = ()
    rational: bool = False

    def __post_init__(self) -> None:
        if self.max_degree < 0 or self.max_degree % 2:
            raise ValueError(f"max_degree must be even and nonnegative, got {self.max_degree}")
        names = [g for g, _ in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("duplicate base generator names")
        if any(d <= 0 for _, d in self.generators):
            raise ValueError("base generators need positive degree")

    @property
    def ngens(self) -> int:
        return len(self.generators)

    @property
    def gen_degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.generators)

    def degree(self, exps: Sequence[int]) -> int:
        return sum(e * d for e, d in zip(exps, self.gen_degrees))

    def monomials(self, degree: int) -> list[tuple[int, ...]]:
        """Base monomials of exactly ``degree``, empty outside ``[0, max_degree]``."""
        if degree < 0 or degree > self.max_degree or degree % 2:
            return []
        return sorted(weighted_vectors(self.gen_degrees, degree), reverse=True)

    def all_monomials(self) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = []
        for d in range(0, self.max_degree + 1, 2):
            out.extend(self.monomials(d))
        return out

    def one(self) -> tuple[int, ...]:
        return (0,) * self.ngens

    def format_monomial(self, exps: Sequence[int]) -> str:
        parts = []
        for (name, _), e in zip(self.generators, exps):
            if e == 1:
                parts.append(name)
            elif e:
                parts.append(f"{name}^{e}")
        return "*".join(parts)


class PolyRing:
    """Laurent polynomial ring in named variables over a :class:`GradedBase`.

    ``order`` optionally truncates by total (nonnegative) variable exponent,
    which is how one-variable and bivariate power series are modelled.
    """

    def __init__(
        self,
        base: GradedBase,
        variables: Sequence[tuple[str, int]],
        order: int | None = None,
    ) -> None:
        self.base = base
        self.variables = tuple((str(n), int(d)) for n, d in variables)
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.names = tuple(names)
        self.var_degrees = tuple(d for _, d in self.variables)
        self.nvars = len(self.variables)
        self.index = {n: i for i, n in enumerate(names)}
        self.order = order
        self._bdeg_cache: dict[tuple[int, ...], int] = {}
        self._zero_key = (0,) * (self.nvars + base.ngens)

    def __repr__(self) -> str:
        return f"PolyRing({list(self.names)}, base={self.base.kind}, 2D={self.base.max_degree}, order={self.order})"

    def same_shape(self, other: "PolyRing") -> bool:
        return self.base == other.base and self.variables == other.variables

    # -- key helpers -----------------------------------------------------
    def base_degree(self, key: tuple[int, ...]) -> int:
        b = key[self.nvars:]
        d = self._bdeg_cache.get(b)
        if d is None:
            d = self.base.degree(b)
            self._bdeg_cache[b] = d
        return d

    def key_degree(self, key: tuple[int, ...]) -> int:
        return self.base_degree(key) + sum(e * d for e, d in zip(key, self.var_degrees))

    def keep(self, key: tuple[int, ...]) -> bool:
        if self.base_degree(key) > self.base.max_degree:
            return False
        if self.order is not None and sum(key[: self.nvars]) > self.order:
            return False
        return True

    # -- constructors ----------------------------------------------------
    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return Poly(self, {self._zero_key: 1})

    def const(self, c: Coeff) -> "Poly":
        return Poly(self, {self._zero_key: c} if c else {})

    def var(self, name: str) -> "Poly":
        key = list(self._zero_key)
        key[self.index[name]] = 1
        return Poly(self, {tuple(key): 1})

    def monomial(self, var_exps: Mapping[str, int] | Sequence[int], base_exps: Sequence[int] | None = None, coeff: Coeff = 1) -> "Poly":
        if isinstance(var_exps, Mapping):
            v = [0] * self.nvars
            for n, e in var_exps.items():
                v[self.index[n]] = e
        else:
            v = list(var_exps)
        b = list(base_exps) if base_exps is not None else [0] * self.base.ngens
        return Poly(self, {tuple(v) + tuple(b): coeff})

    def from_base(self, elem: Mapping[tuple[int, ...], Coeff]) -> "Poly":
        """Embed a base element ``{base exps: coeff}``."""
        pad = (0,) * self.nvars
        return Poly(self, {pad + tuple(b): c for b, c in elem.items()})

    def base_gen(self, name: str) -> "Poly":
        names = [g for g, _ in self.base.generators]
        b = [0] * self.base.ngens
        b[names.index(name)] = 1
        return Poly(self, {(0,) * self.nvars + tuple(b): 1})


class Poly:
    """An element of a :class:`PolyRing`; immutable by convention."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: Mapping[tuple[int, ...], Coeff]) -> None:
        self.ring = ring
        self.terms = {k: c for k, c in terms.items() if c and ring.keep(k)}

    @classmethod
    def _raw(cls, ring: PolyRing, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.ring = ring
        p.terms = terms
        return p

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "Poly") -> None:
        if other.ring is not self.ring and not other.ring.same_shape(self.ring):
            raise ValueError("polynomials live in different rings")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return Poly._raw(self.ring, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return self.ring.zero()
            return Poly._raw(self.ring, {k: c * other for k, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ring = self.ring
        nv = ring.nvars
        maxd = ring.base.max_degree
        order = ring.order
        bdeg = ring.base_degree
        out: dict[tuple[int, ...], Coeff] = {}
        b_terms = list(other.terms.items())
        for k1, c1 in self.terms.items():
            d1 = bdeg(k1)
            o1 = sum(k1[:nv]) if order is not None else 0
            for k2, c2 in b_terms:
                if d1 + bdeg(k2) > maxd:
                    continue
                if order is not None and o1 + sum(k2[:nv]) > order:
                    continue
                k = tuple(a + b for a, b in zip(k1, k2))
                v = out.get(k, 0) + c1 * c2
                if v:
                    out[k] = v
                else:
                    out.pop(k, None)
        return Poly._raw(ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative powers need an explicit inverse")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- inspection ------------------------------------------------------
    def degrees(self) -> set[int]:
        return {self.ring.key_degree(k) for k in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree(self) -> int | None:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError(f"not homogeneous: degrees {sorted(ds)}")
        return next(iter(ds), None)

    def constant_term(self) -> Coeff:
        return self.terms.get(self.ring._zero_key, 0)

    def var_part_zero(self) -> "Poly":
        """Terms with no variable exponent (the base-ring part)."""
        nv = self.ring.nvars
        return Poly._raw(self.ring, {k: c for k, c in self.terms.items() if not any(k[:nv])})

    def filter(self, pred: Callable[[tuple[int, ...]], bool]) -> "Poly":
        return Poly._raw(self.ring, {k: c for k, c in self.terms.items() if pred(k)})

    def truncate(self, order: int) -> "Poly":
        nv = self.ring.nvars
        return self.filter(lambda k: sum(k[:nv]) <= order)

    def coefficient(self, var_exps: Sequence[int]) -> dict[tuple[int, ...], Coeff]:
        """Base coefficient ``{base exps: c}`` of a pure variable monomial."""
        nv = self.ring.nvars
        v = tuple(var_exps)
        return {k[nv:]: c for k, c in self.terms.items() if k[:nv] == v}

    def coefficient_in(self, name: str, power: int) -> "Poly":
        """Sum of the terms with exponent ``power`` in ``name``, with that variable removed."""
        i = self.ring.index[name]
        out = {}
        for k, c in self.terms.items():
            if k[i] == power:
                kk = list(k)
                kk[i] = 0
                out[tuple(kk)] = c
        return Poly._raw(self.ring, out)

    def map_coefficients(self, fn: Callable[[Coeff], Coeff]) -> "Poly":
        return Poly(self.ring, {k: fn(c) for k, c in self.terms.items()})

    def to_ring(self, ring: PolyRing, rename: Mapping[str, str] | None = None) -> "Poly":
        """Move into another ring sharing the base, matching variables by name."""
        if ring.base != self.ring.base:
            raise ValueError("different bases")
        rename = rename or {}
        perm = []
        for i, n in enumerate(self.ring.names):
            perm.append((i, ring.index[rename.get(n, n)]))
        out: dict[tuple[int, ...], Coeff] = {}
        for k, c in self.terms.items():
            v = [0] * ring.nvars
            for i, j in perm:
                if k[i]:
                    v[j] = k[i]
            kk = tuple(v) + k[self.ring.nvars:]
            out[kk] = out.get(kk, 0) + c
        return Poly(ring, out)

    def substitute(self, images: Mapping[str, "Poly"], target: PolyRing | None = None,
                   inverse_images: Mapping[str, "Poly"] | None = None) -> "Poly":
        """Ring map: each variable goes to the given image (identity by name otherwise).

        Negative exponents need ``inverse_images``.
        """
        target = target or self.ring
        names = self.ring.names
        nv = self.ring.nvars
        gen_img: list[Poly] = []
        for n in names:
            if n in images:
                gen_img.append(images[n])
            else:
                gen_img.append(target.var(n))
        inv_img = dict(inverse_images or {})
        pow_cache: dict[tuple[int, int], Poly] = {}

        def power(i: int, e: int) -> Poly:
            key = (i, e)
            p = pow_cache.get(key)
            if p is None:
                if e > 0:
                    p = gen_img[i] if e == 1 else power(i, e - 1) * gen_img[i]
                else:
                    n = names[i]
                    if n not in inv_img:
                        if n in images:
                            raise ValueError(f"no inverse image supplied for {n}")
                        inv_img[n] = target.monomial({n: -1})
                    p = inv_img[n] if e == -1 else power(i, e + 1) * inv_img[n]
                pow_cache[key] = p
            return p

        acc: dict[tuple[int, ...], Coeff] = {}
        pad = (0,) * target.nvars
        for k, c in self.terms.items():
            term = Poly._raw(target, {pad + k[nv:]: c})
            for i in range(nv):
                if k[i]:
                    term = term * power(i, k[i])
            for kk, cc in term.terms.items():
                v = acc.get(kk, 0) + cc
                if v:
                    acc[kk] = v
                else:
                    acc.pop(kk, None)
        return Poly._raw(target, acc)

    # -- display ---------------------------------------------------------
    def format_key(self, key: tuple[int, ...]) -> str:
        ring = self.ring
        parts = []
        b = ring.base.format_monomial(key[ring.nvars:])
        if b:
            parts.append(b)
        for n, e in zip(ring.names, key[: ring.nvars]):
            if e == 1:
                parts.append(n)
            elif e:
                parts.append(f"{n}^{e}")
        return "*".join(parts)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Coeff]]:
        nv = self.ring.nvars
        return sorted(self.terms.items(), key=lambda kc: (sum(abs(e) for e in kc[0][:nv]), kc[0][:nv], kc[0][nv:]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for k, c in self.sorted_terms():
            m = self.format_key(k)
            if not m:
                out.append(str(c))
            elif c == 1:
                out.append(m)
            elif c == -1:
                out.append("-" + m)
            else:
                out.append(f"{c}*{m}")
        return " + ".join(out).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Poly({self})"


def base_poly_mul(base: GradedBase, a: Mapping, b: Mapping) -> dict:
    """Product of two base elements ``{exps: coeff}`` with degree truncation."""
    out: dict = {}
    for k1, c1 in a.items():
        d1 = base.degree(k1)
        for k2, c2 in b.items():
            if d1 + base.degree(k2) > base.max_degree:
                continue
            k = tuple(x + y for x, y in zip(k1, k2))
            v = out.get(k, 0) + c1 * c2
            if v:
                out[k] = v
            else:
                out.pop(k, None)
    return out

