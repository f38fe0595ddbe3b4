"""Formal group laws over truncated graded bases and their basic operations.

Everything here is exact.  A law is stored through its coefficients
``a[i, j]`` (base elements), and operations accept any :class:`Poly` whose
ring shares the law's base, so the same code drives one-variable power
series and the Laurent rings built later for the limit diagrams.

Grading: Euler-class variables sit in degree -2, ``a[i, j]`` in degree
``2(i + j - 1)``, so ``F(x, y)`` is homogeneous of degree -2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .poly import Coeff, GradedBase, Poly, PolyRing

BaseElem = dict[tuple[int, ...], Coeff]

KINDS = ("universal-rational", "universal-integral", "additive", "multiplicative", "mod-p-reduced")

TruncatedSeries = Poly


@dataclass(frozen=True, eq=False)
class FormalGroupLaw:
    base: GradedBase
    order: int
    coefficients: Mapping[tuple[int, int], BaseElem]
    log_series: tuple[BaseElem, ...] | None = None
    exp_series: tuple[BaseElem, ...] | None = None
    integral_expressions: Mapping[str, BaseElem] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.base.kind

    @property
    def max_index(self) -> int:
        return max((i + j for i, j in self.coefficients), default=1)

    def complete_for_base(self) -> bool:
        """True when every coefficient surviving the base truncation is stored."""
        if self.kind in ("additive", "multiplicative"):
            return True
        return self.order + 1 >= self.base.max_degree // 2 + 1

    def a(self, i: int, j: int) -> BaseElem:
        return dict(self.coefficients.get((i, j), {}))

    def coefficient_ring(self, name_x: str = "x", name_y: str = "y", order: int | None = None) -> PolyRing:
        return PolyRing(self.base, [(name_x, -2), (name_y, -2)], order=self.order if order is None else order)

    def as_series(self, order: int | None = None) -> Poly:
        """``F(x, y)`` as a bivariate truncated series."""
        ring = self.coefficient_ring(order=order)
        out = {}
        for (i, j), c in self.coefficients.items():
            for b, v in c.items():
                out[(i, j) + tuple(b)] = v
        return Poly(ring, out)


# ---------------------------------------------------------------------------
# bases


def make_base(kind: str, max_degree: int) -> GradedBase:
    if kind not in KINDS:
        raise ValueError(f"unsupported kind {kind!r}; choose from {KINDS}")
    if max_degree < 0 or max_degree % 2:
        raise ValueError("maxDegree must be an even nonnegative integer")
    D = max_degree // 2
    if kind == "universal-rational":
        return GradedBase(kind, max_degree, tuple((f"m{i}", 2 * i) for i in range(1, D + 1)), rational=True)
    if kind == "universal-integral":
        return GradedBase(kind, max_degree, tuple((f"x{i}", 2 * i) for i in range(1, D + 1)))
    if kind == "additive":
        return GradedBase(kind, max_degree, ())
    if kind == "multiplicative":
        return GradedBase(kind, max_degree, (("b", 2),) if D >= 1 else ())
    raise ValueError("mod-p-reduced laws are not supported by this engine")


def _one(base: GradedBase) -> BaseElem:
    return {base.one(): 1}


# ---------------------------------------------------------------------------
# univariate helpers


def _univariate_ring(base: GradedBase, order: int, name: str = "x") -> PolyRing:
    return PolyRing(base, [(name, -2)], order=order)


def _series_coeffs(p: Poly, order: int) -> list[BaseElem]:
    """Coefficient list ``[c_0, ..., c_order]`` of a one-variable series."""
    out: list[BaseElem] = [dict() for _ in range(order + 1)]
    for k, c in p.terms.items():
        n = k[0]
        if 0 <= n <= order:
            out[n][k[1:]] = c
    return out


def compose(coeffs: Sequence[BaseElem], s: Poly) -> Poly:
    """``sum_n coeffs[n] * s**n`` evaluated in the ring of ``s``."""
    ring = s.ring
    total = ring.zero()
    power = ring.one()
    for n, c in enumerate(coeffs):
        if n:
            power = power * s
            if power.is_zero():
                break
        if c:
            total = total + ring.from_base(c) * power
    return total


def _rational_log_exp(base: GradedBase, order: int) -> tuple[list[BaseElem], list[BaseElem]]:
    ring = _univariate_ring(base, order)
    x = ring.var("x")
    D = base.max_degree // 2
    log = x
    for i in range(1, D + 1):
        log = log + ring.base_gen(f"m{i}") * x ** (i + 1)
    # exp(x) = x - sum m_i exp(x)^(i+1); each pass fixes one more order
    e = x
    for _ in range(order + 1):
        nxt = x
        for i in range(1, D + 1):
            nxt = nxt - ring.base_gen(f"m{i}") * e ** (i + 1)
        if nxt == e:
            break
        e = nxt
    return _series_coeffs(log, order), _series_coeffs(e, order)


# ---------------------------------------------------------------------------
# construction


def make_law(kind: str, max_degree: int, order: int) -> FormalGroupLaw:
    """Build a formal group law of the given kind through total order ``order``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    if kind == "universal-integral":
        from .lazard import integral_generators

        return integral_generators(max_degree, order=order).law
    base = make_base(kind, max_degree)
    coeffs: dict[tuple[int, int], BaseElem] = {(1, 0): _one(base), (0, 1): _one(base)}
    if kind == "additive":
        return FormalGroupLaw(base, order, coeffs)
    if kind == "multiplicative":
        if base.ngens:
            coeffs[(1, 1)] = {(1,): 1}
        return FormalGroupLaw(base, order, coeffs)
    # universal-rational
    log_c, exp_c = _rational_log_exp(base, order + 1)
    ring = PolyRing(base, [("x", -2), ("y", -2)], order=order + 1)
    s = compose(log_c, ring.var("x")) + compose(log_c, ring.var("y"))
    F = compose(exp_c, s)
    coeffs = {}
    for k, c in F.terms.items():
        i, j = k[0], k[1]
        if i + j <= order + 1:
            coeffs.setdefault((i, j), {})[k[2:]] = c
    return FormalGroupLaw(base, order, coeffs, tuple(log_c), tuple(exp_c))


# ---------------------------------------------------------------------------
# operations


def _require_no_constant(s: Poly) -> None:
    if not s.var_part_zero().is_zero():
        raise ValueError("formal group operations need a zero constant term")


def _powers(s: Poly, n: int) -> list[Poly]:
    out = [s.ring.one()]
    for _ in range(n):
        out.append(out[-1] * s)
    return out


def fgl_sum(law: FormalGroupLaw, s: Poly, t: Poly) -> Poly:
    """``F(s, t)``; both arguments live in the same ring over ``law.base``."""
    if s.ring.base != law.base:
        raise ValueError("series base does not match the law")
    s._check(t)
    _require_no_constant(s)
    _require_no_constant(t)
    if s.is_zero():
        return t
    if t.is_zero():
        return s
    ring = s.ring
    n = law.max_index
    ps, pt = _powers(s, n), _powers(t, n)
    acc = ring.zero()
    for (i, j), c in law.coefficients.items():
        term = ps[i] * pt[j]
        if term.is_zero():
            continue
        acc = acc + ring.from_base(c) * term
    return acc


def iterated_fgl_sum(law: FormalGroupLaw, items: Sequence[Poly], ring: PolyRing | None = None) -> Poly:
    if not items:
        if ring is None:
            raise ValueError("empty formal sum needs an explicit ring")
        return ring.zero()
    acc = items[0]
    for s in items[1:]:
        acc = fgl_sum(law, acc, s)
    return acc


def inverse_coefficients(law: FormalGroupLaw, order: int) -> list[BaseElem]:
    """Coefficients of the formal inverse series ``i(x)`` with ``F(x, i(x)) = 0``."""
    ring = _univariate_ring(law.base, order)
    x = ring.var("x")
    inv = -x
    for _ in range(order + 1):
        # F(x, y) = x + y + R(x, y) and so y = -x - R(x, y)
        nxt = -x
        px, py = _powers(x, law.max_index), _powers(inv, law.max_index)
        for (i, j), c in law.coefficients.items():
            if i >= 1 and j >= 1:
                nxt = nxt - ring.from_base(c) * px[i] * py[j]
        if nxt == inv:
            break
        inv = nxt
    return _series_coeffs(inv, order)


def _natural_order(law: FormalGroupLaw, s: Poly) -> int:
    if s.ring.order is not None:
        return s.ring.order
    # coefficients of degree above the base bound vanish, so order D + 1 suffices
    return max(law.base.max_degree // 2 + 1, 1)


def formal_inverse(law: FormalGroupLaw, s: Poly) -> Poly:
    _require_no_constant(s)
    return compose(inverse_coefficients(law, _natural_order(law, s)), s)


def n_series_of(law: FormalGroupLaw, k: int, s: Poly) -> Poly:
    """``[k]_F s`` for any integer ``k`` (negative ``k`` uses the formal inverse)."""
    _require_no_constant(s)
    if k < 0:
        return n_series_of(law, -k, formal_inverse(law, s))
    result = s.ring.zero()
    base = s
    while k:
        if k & 1:
            result = fgl_sum(law, result, base)
        k >>= 1
        if k:
            base = fgl_sum(law, base, base)
    return result


def n_series(law: FormalGroupLaw, k: int, order: int, name: str = "x") -> Poly:
    """``[k]_F x`` as a one-variable series truncated at ``order``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    ring = _univariate_ring(law.base, order, name)
    return n_series_of(law, k, ring.var(name))


def euler_coeff_coeffs(law: FormalGroupLaw, i: int) -> list[BaseElem]:
    """Coefficients (in ``u``) of the ``x^i`` coefficient of ``F(x, u)``."""
    n = law.max_index
    out: list[BaseElem] = [dict() for _ in range(n + 1)]
    for (a, b), c in law.coefficients.items():
        if a == i:
            out[b] = dict(c)
    return out


def euler_coeff_of(law: FormalGroupLaw, i: int, u: Poly) -> Poly:
    """The coefficient of ``x^i`` in ``x +_F u`` evaluated at an element ``u``."""
    if i < 0:
        raise ValueError("index must be nonnegative")
    if i == 0:
        return u
    return compose(euler_coeff_coeffs(law, i), u)


def euler_coeff(law: FormalGroupLaw, i: int, u_var: str = "u", order: int | None = None) -> Poly:
    order = law.order if order is None else order
    if i > law.order + 1:
        raise ValueError(f"index {i} exceeds the law's truncation order {law.order}")
    ring = _univariate_ring(law.base, order, u_var)
    # the x^i u^j term has total order i + j
    return euler_coeff_of(law, i, ring.var(u_var)).truncate(order - i if i else order)


def apply_in_x(law: FormalGroupLaw, v: Poly, max_i: int) -> list[Poly]:
    """Coefficients ``c_0..c_max_i`` of ``F(v, x)`` as a polynomial in a formal ``x``."""
    return [euler_coeff_of(law, i, v) if i else v for i in range(max_i + 1)]


# ---------------------------------------------------------------------------
# comparison and serialisation


def equal_through(a: Poly, b: Poly, order: int | None = None) -> bool:
    """Equality of two series through ``order`` (default: the common order)."""
    if order is None:
        orders = [o for o in (a.ring.order, b.ring.order) if o is not None]
        order = min(orders) if orders else None
    if order is None:
        return a.terms == b.terms
    return a.truncate(order).terms == b.truncate(order).terms


def _coeff_str(c: Coeff) -> str:
    return str(c)


def series_to_json(p: Poly) -> dict:
    ring = p.ring
    nv = ring.nvars
    terms = [
        {"exp": list(k[:nv]), "coeff": _coeff_str(c), "base_monomial": list(k[nv:])}
        for k, c in sorted(p.terms.items())
    ]
    return {"vars": [[n, d] for n, d in ring.variables], "order": ring.order, "terms": terms}


def series_from_json(data: Mapping, base: GradedBase) -> Poly:
    ring = PolyRing(base, [(n, d) for n, d in data["vars"]], order=data.get("order"))
    terms = {}
    for t in data["terms"]:
        c = Fraction(t["coeff"]) if base.rational else int(t["coeff"])
        terms[tuple(t["exp"]) + tuple(t["base_monomial"])] = c
    return Poly(ring, terms)


def law_to_json(law: FormalGroupLaw) -> str:
    payload = {
        "kind": law.kind,
        "max_degree": law.base.max_degree,
        "order": law.order,
        "base_generators": [[n, d] for n, d in law.base.generators],
        "coefficients": [
            {"i": i, "j": j, "terms": [{"base_monomial": list(b), "coeff": _coeff_str(c)} for b, c in sorted(v.items())]}
            for (i, j), v in sorted(law.coefficients.items())
        ],
    }
    return json.dumps(payload, sort_keys=True)
