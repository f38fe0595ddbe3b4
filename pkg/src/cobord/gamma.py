"""The presented rings Gamma(S) attached to subgroup chains, and their structure maps.

For a chain ``S = {H_1 < ... < H_k}`` the ring is generated by Euler classes
``u_L`` for ``L`` in the representative sets ``R_0, ..., R_k`` together with
the coefficient classes ``u_N^(i)`` for ``N`` in ``R_0``.  Classes in
``R_0 .. R_{k-1}`` are invertible; levels ``1 .. k`` are completed.  The
ideal is generated, level by level, by the formal-sum identities
``u_{L1} +_F u_{L2} = (sum)_F u_{M_i}``.

Two groups of variables behave very differently.  The level-0 variables
(the "Phi part") never occur in a relation, so a degree-``d`` piece splits
as a sum over Phi-monomials of pieces of the remaining "W part".
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

from .fgl import FormalGroupLaw, euler_coeff_of, fgl_sum, iterated_fgl_sum, make_law
from .graded import GeneratorRoster, RosterEntry
from .groups import Character, FinAbGroup, SubgroupChain, canonical_lifts
from .poly import Poly, PolyRing

SUPPORTED_LAWS = ("universal-integral", "additive", "multiplicative", "universal-rational")


@dataclass(frozen=True)
class GammaParams:
    """Truncation parameters.

    ``D``: base degrees up to ``2D``.  ``E``: l1 bound on level-0 Laurent
    exponents in the singleton box.  ``P``: weight bound (``u^(i)`` weighs
    ``i``) on coefficient classes in that box.  ``I``: largest ``i`` for
    ``u^(i)`` in boxes.  ``N``: completion precision.  ``M``: Laurent margin
    for saturating relations in completed rings.
    """

    D: int = 3
    E: int = 2
    P: int = 1
    I: int | None = None
    N: int = 4
    M: int = 1
    law: str = "universal-integral"

    def __post_init__(self) -> None:
        for name in ("D", "E", "P", "N", "M"):
            if getattr(self, name) < 0:
                raise ValueError(f"parameter {name} must be nonnegative")
        if self.I is not None and self.I < 1:
            raise ValueError("I must be at least 1")
        if self.law not in SUPPORTED_LAWS:
            raise ValueError(f"unsupported law {self.law!r}")

    @property
    def index_bound(self) -> int:
        return self.I if self.I is not None else self.D + 1

    def with_(self, **kw) -> "GammaParams":
        return replace(self, **kw)

    def to_json(self) -> dict:
        out = asdict(self)
        out["I"] = self.index_bound
        return out


@lru_cache(maxsize=None)
def law_for(kind: str, D: int) -> FormalGroupLaw:
    law = make_law(kind, 2 * D, max(D + 1, 2))
    if not law.complete_for_base():  # pragma: no cover - guarded by the order choice
        raise ValueError("law truncation too short for the base")
    return law


# ---------------------------------------------------------------------------
# representatives


@dataclass(frozen=True)
class RepresentativeSets:
    chain: SubgroupChain
    R: tuple[tuple[Character, ...], ...]

    @property
    def k(self) -> int:
        return self.chain.k

    def level_of(self, chi: Character) -> int | None:
        for j, reps in enumerate(self.R):
            if chi in reps:
                return j
        return None

    @property
    def all(self) -> list[tuple[int, Character]]:
        return [(j, L) for j, reps in enumerate(self.R) for L in reps]

    def _lookup(self, t: int) -> dict:
        H = self.chain.level(t + 1)
        return {L.restriction_key(H): L for L in self.R[t]}


def representative_sets(chain: SubgroupChain) -> RepresentativeSets:
    G = chain.group
    R = tuple(canonical_lifts(G, chain.level(j), chain.level(j + 1)) for j in range(chain.k + 1))
    return RepresentativeSets(chain, R)


class DecompositionError(ArithmeticError):
    pass


def decompose_character(reps: RepresentativeSets, j: int, chi: Character) -> list[Character]:
    """Greedy level ascent writing ``chi`` as a product of representatives."""
    chain = reps.chain
    if not chi.is_trivial_on(chain.level(j)):
        raise DecompositionError(f"{chi} is not trivial on H_{j}")
    out = []
    running = chi
    for t in range(j, chain.k + 1):
        H = chain.level(t + 1)
        key = running.restriction_key(H)
        if any(key):
            M = reps._lookup(t).get(key)
            if M is None:
                raise DecompositionError(f"no representative at level {t} for {running}")
            out.append(M)
            running = running * M.inverse()
    if not running.is_trivial:
        raise DecompositionError(f"residual character {running}")
    return out


# ---------------------------------------------------------------------------
# naming


def char_suffix(chi: Character) -> str:
    if chi.group.rank == 1:
        return str(chi.exponents[0])
    return "(" + ",".join(map(str, chi.exponents)) + ")"


def u_name(chi: Character) -> str:
    return "u" + char_suffix(chi)


def ui_name(chi: Character, i: int) -> str:
    return f"u{char_suffix(chi)}^({i})"


# ---------------------------------------------------------------------------
# presentations


@dataclass(frozen=True)
class VarInfo:
    name: str
    kind: str  # "u" or "ui"
    char: Character
    level: int
    index: int = 0  # i for u^(i)


@dataclass(eq=False)
class GammaPresentation:
    group: FinAbGroup
    chain: SubgroupChain
    reps: RepresentativeSets
    law: FormalGroupLaw
    params: GammaParams
    I: int
    ring: PolyRing
    info: tuple[VarInfo, ...]
    relations: list[Poly] = field(default_factory=list)

    def __post_init__(self) -> None:
        k = self.chain.k
        self.phi_laurent = [i for i, v in enumerate(self.info) if v.kind == "u" and v.level == 0]
        self.phi_weighted = [(i, v.index, None) for i, v in enumerate(self.info) if v.kind == "ui"]
        self.w_blocks = []
        for j in range(1, k + 1):
            idx = [i for i, v in enumerate(self.info) if v.kind == "u" and v.level == j]
            if idx:
                self.w_blocks.append((j, idx, j < k))
        self.w_idx = [i for _, idx, _ in self.w_blocks for i in idx]
        self.laurent_w = {i for _, idx, lau in self.w_blocks if lau for i in idx}
        self.phi_idx = sorted(self.phi_laurent + [i for i, _, _ in self.phi_weighted])
        self._small_cache: dict = {}

    # -- bookkeeping -------------------------------------------------------
    @property
    def k(self) -> int:
        return self.chain.k

    @property
    def N(self) -> int:
        return self.params.N

    def ident(self) -> str:
        return self.chain.ident()

    def var(self, name: str) -> Poly:
        return self.ring.var(name)

    def u(self, chi: Character) -> Poly:
        return self.ring.var(u_name(chi))

    def has_var(self, name: str) -> bool:
        return name in self.ring.index

    def is_invertible(self, name: str) -> bool:
        i = self.ring.index.get(name)
        if i is None:
            return False
        v = self.info[i]
        return v.kind == "u" and v.level < self.k

    def block_sums(self, key: tuple[int, ...]) -> list[int]:
        return [sum(key[i] for i in idx) for _, idx, _ in self.w_blocks]

    def is_small(self, key: tuple[int, ...], N: int | None = None) -> bool:
        """Monomials in the chosen completion neighbourhood of zero."""
        N = self.N if N is None else N
        sums = self.block_sums(key)
        tail = 0
        for s in reversed(sums):
            if s > N + tail:
                return True
            tail += abs(s)
        return False

    def drop_small(self, p: Poly, N: int | None = None) -> Poly:
        if not self.w_blocks:
            return p
        return p.filter(lambda k: not self.is_small(k, N))

    def phi_key(self, key: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(key[i] for i in self.phi_idx)

    def w_key(self, key: tuple[int, ...]) -> tuple[int, ...]:
        """The key with the Phi exponents zeroed (W variables and base part kept)."""
        out = list(key)
        for i in self.phi_idx:
            out[i] = 0
        return tuple(out)

    # -- display -----------------------------------------------------------
    def roster(self) -> GeneratorRoster:
        entries = []
        for v in self.info:
            deg = -2 if v.kind == "u" else 2 * v.index - 2
            if v.kind == "ui":
                mode = "polynomial"
            elif v.level < self.k:
                mode = "laurent"
            else:
                mode = "series"
            entries.append(RosterEntry(v.name, deg, mode, block=v.level))
        prec = {j: self.N for j in range(1, self.k + 1)}
        return GeneratorRoster(self.law.base, tuple(entries), self.params.E, prec, self.params.P)

    def describe(self) -> str:
        lines = [f"Gamma{self.ident()} over G = {self.group}  (law {self.law.kind}, base degrees <= {self.law.base.max_degree})"]
        for j, reps in enumerate(self.reps.R):
            names = ", ".join(u_name(L) for L in reps) or "-"
            lines.append(f"  R_{j}: {names}")
        lines.append("  generators:")
        for e in self.roster().entries:
            lines.append(f"    {e.name:>12}  degree {e.degree:>3}  {e.mode}" + (f" (level {e.block})" if e.mode != "polynomial" else ""))
        lines.append(f"  relations ({len(self.relations)}):")
        for r in self.relations:
            lines.append(f"    {r} = 0")
        lines.append("  params: " + ", ".join(f"{k}={v}" for k, v in self.params.to_json().items()))
        return "\n".join(lines)


def _build_ring(reps: RepresentativeSets, law: FormalGroupLaw, I: int) -> tuple[PolyRing, tuple[VarInfo, ...]]:
    info = []
    for L in reps.R[0]:
        info.append(VarInfo(u_name(L), "u", L, 0))
    for L in reps.R[0]:
        for i in range(1, I + 1):
            info.append(VarInfo(ui_name(L, i), "ui", L, 0, i))
    for j in range(1, reps.k + 1):
        for L in reps.R[j]:
            info.append(VarInfo(u_name(L), "u", L, j))
    ring = PolyRing(law.base, [(v.name, -2 if v.kind == "u" else 2 * v.index - 2) for v in info])
    return ring, tuple(info)


def formal_sum_of(gamma: GammaPresentation, chars: Sequence[Character]) -> Poly:
    return iterated_fgl_sum(gamma.law, [gamma.u(c) for c in chars], gamma.ring)


def relation_set(gamma: GammaPresentation) -> list[Poly]:
    reps = gamma.reps
    out: list[Poly] = []
    seen = set()
    for j in range(1, reps.k + 1):
        Rj = reps.R[j]
        for a in range(len(Rj)):
            for b in range(a, len(Rj)):
                L1, L2 = Rj[a], Rj[b]
                Ms = decompose_character(reps, j, L1 * L2)
                r = fgl_sum(gamma.law, gamma.u(L1), gamma.u(L2)) - formal_sum_of(gamma, Ms)
                if r.is_zero():
                    continue
                key = frozenset(r.terms.items())
                if key not in seen:
                    seen.add(key)
                    out.append(r)
    return out


def build_gamma(G: FinAbGroup, chain: SubgroupChain, params: GammaParams, I: int | None = None) -> GammaPresentation:
    if chain.group != G:
        raise ValueError("chain belongs to a different group")
    law = law_for(params.law, params.D)
    reps = representative_sets(chain)
    I = params.index_bound if I is None else I
    ring, info = _build_ring(reps, law, I)
    gamma = GammaPresentation(G, chain, reps, law, params, I, ring, info)
    gamma.relations = relation_set(gamma)
    return gamma


def target_index_bound(params: GammaParams, k: int, N_fac: int) -> int:
    """Room for the coefficient classes produced by the level-0 rule."""
    return params.index_bound + (2 ** k - 1) * N_fac + 2


# ---------------------------------------------------------------------------
# structure maps


class MapError(ValueError):
    pass


@dataclass(eq=False)
class RingMapSpec:
    source: GammaPresentation
    target: GammaPresentation
    images: dict
    inverse_images: dict
    N_fac: int
    decompositions: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._mono_cache: dict = {}
        self._pow_cache: dict = {}

    def is_identity_on_names(self) -> bool:
        for name, img in self.images.items():
            if name not in self.target.ring.index or img != self.target.var(name):
                return False
        return True

    def _power(self, i: int, e: int) -> Poly:
        key = (i, e)
        hit = self._pow_cache.get(key)
        if hit is not None:
            return hit
        name = self.source.ring.names[i]
        if e > 0:
            base = self.images[name]
            p = base if e == 1 else self.target.drop_small(self._power(i, e - 1) * base, self.N_fac)
        else:
            inv = self.inverse_images.get(name)
            if inv is None:
                raise MapError(f"{name} is not invertible in the source ring")
            p = inv if e == -1 else self.target.drop_small(self._power(i, e + 1) * inv, self.N_fac)
        self._pow_cache[key] = p
        return p

    def apply_key(self, key: tuple[int, ...]) -> Poly:
        """Image of the monomial ``key`` (coefficient 1), small terms dropped."""
        hit = self._mono_cache.get(key)
        if hit is not None:
            return hit
        T = self.target
        nv = self.source.ring.nvars
        acc = T.ring.monomial([0] * T.ring.nvars, key[nv:])
        # negative powers first so that cancellations happen before filtering
        order = sorted((i for i in range(nv) if key[i]), key=lambda i: (key[i] > 0, i))
        for i in order:
            acc = T.drop_small(acc * self._power(i, key[i]), self.N_fac)
            if acc.is_zero():
                break
        acc = T.drop_small(acc)
        self._mono_cache[key] = acc
        return acc

    def apply(self, p: Poly) -> Poly:
        out: dict = {}
        for k, c in p.terms.items():
            for kk, cc in self.apply_key(k).terms.items():
                v = out.get(kk, 0) + c * cc
                if v:
                    out[kk] = v
                else:
                    out.pop(kk, None)
        return Poly(self.target.ring, out)


def _inverse_of_sum(T: GammaPresentation, lead: Character, w: Poly, N_fac: int) -> Poly:
    """``(u_lead +_F w)^{-1}`` expanded as ``u_lead^{-1} sum (-eps)^n``."""
    law = T.law
    ua = T.u(lead)
    ua_inv = T.ring.monomial({u_name(lead): -1})
    eps = w * ua_inv
    wp = T.ring.one()
    maxj = law.max_index
    wpows = [wp]
    for _ in range(maxj):
        wpows.append(T.drop_small(wpows[-1] * w, N_fac))
    uapows = [T.ring.one()]
    for _ in range(maxj):
        uapows.append(uapows[-1] * ua)
    for (i, j), c in law.coefficients.items():
        if i >= 1 and j >= 1:
            eps = eps + T.ring.from_base(c) * uapows[i - 1] * wpows[j]
    eps = T.drop_small(eps, N_fac)
    total = T.ring.one()
    term = T.ring.one()
    for _ in range(8 * (N_fac + 2) * max(T.k, 1)):
        term = T.drop_small(-(term * eps), N_fac)
        if term.is_zero():
            break
        total = total + term
    else:
        raise MapError(f"inverse of u_{lead} +_F (...) did not converge at precision {N_fac}")
    return T.drop_small(ua_inv * total, N_fac)


def structure_map(gS: GammaPresentation, gT: GammaPresentation, N_fac: int | None = None) -> RingMapSpec:
    """The ring map ``Gamma(S) -> Gamma(T)`` for ``S`` a subchain of ``T``."""
    if not gS.chain.is_subchain_of(gT.chain):
        raise MapError(f"{gS.ident()} is not contained in {gT.ident()}")
    N_fac = gT.N if N_fac is None else N_fac
    T = gT
    law = T.law
    images: dict = {}
    inverses: dict = {}
    decomps: dict = {}
    for v in gS.info:
        if v.kind != "u":
            continue
        Ms = decompose_character(T.reps, 0, v.char)
        decomps[v.name] = Ms
        if len(Ms) == 1:
            name = u_name(Ms[0])
            images[v.name] = T.var(name)
            if gS.is_invertible(v.name):
                if not T.is_invertible(name):
                    raise MapError(f"{v.name} maps to the non-invertible {name} in {T.ident()}")
                inverses[v.name] = T.ring.monomial({name: -1})
            continue
        images[v.name] = T.drop_small(formal_sum_of(T, Ms), N_fac)
        if gS.is_invertible(v.name):
            if not T.is_invertible(u_name(Ms[0])):
                raise MapError(f"leading representative of {v.name} is not invertible in {T.ident()}")
            w = formal_sum_of(T, Ms[1:])
            inverses[v.name] = _inverse_of_sum(T, Ms[0], w, N_fac)
    for v in gS.info:
        if v.kind != "ui":
            continue
        Ms = decomps[u_name(v.char)]
        i = v.index
        lead_level = T.reps.level_of(Ms[0])
        if lead_level == 0:
            r = Ms[0]
            rest = Ms[1:]
            if not rest:
                images[v.name] = T.var(ui_name(r, i))
                continue
            vv = T.drop_small(formal_sum_of(T, rest), N_fac)
            images[v.name] = _level0_rule(T, r, vv, i, N_fac)
        else:
            vv = T.drop_small(formal_sum_of(T, Ms), N_fac)
            images[v.name] = T.drop_small(euler_coeff_of(law, i, vv), N_fac)
    return RingMapSpec(gS, gT, images, inverses, N_fac, decomps)


def _level0_rule(T: GammaPresentation, r: Character, v: Poly, i: int, N_fac: int, var_of=None, I: int | None = None) -> Poly:
    """Coefficient of ``x^i`` in ``u_r +_F (v +_F x) = sum_l u_r^(l) (v +_F x)^l``.

    ``var_of(l)`` supplies the class ``u_r^(l)`` when the target is not a Gamma ring.
    """
    law = T.law
    if var_of is None:
        var_of = lambda l: T.var(ui_name(r, l))  # noqa: E731
    I = T.I if I is None else I
    c = [v] + [T.drop_small(euler_coeff_of(law, t, v), N_fac) for t in range(1, i + 1)]
    zero = T.ring.zero()
    power = [T.ring.one()] + [zero] * i  # (v +_F x)^0, truncated at x^i
    total = zero
    l = 0
    while True:
        l += 1
        nxt = [zero] * (i + 1)
        for a in range(i + 1):
            if power[a].is_zero():
                continue
            for b in range(i + 1 - a):
                if not c[b].is_zero():
                    nxt[a + b] = nxt[a + b] + power[a] * c[b]
        power = [T.drop_small(p, N_fac) for p in nxt]
        if all(p.is_zero() for p in power):
            break
        if not power[i].is_zero():
            if l > I:
                raise MapError(f"target {T.ident()} needs u^({l}); raise its index bound")
            total = total + var_of(l) * power[i]
    return T.drop_small(total, N_fac)


__all__ = [
    "DecompositionError",
    "GammaParams",
    "GammaPresentation",
    "MapError",
    "RepresentativeSets",
    "RingMapSpec",
    "build_gamma",
    "decompose_character",
    "law_for",
    "relation_set",
    "representative_sets",
    "structure_map",
    "target_index_bound",
    "u_name",
    "ui_name",
]
