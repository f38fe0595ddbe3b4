"""The staircase of rings for cyclic groups of prime power order.

For ``G = Z/p^n`` the limit over the chain poset collapses to an ``n``-fold
pullback of explicit rings::

    R_k = MU_*[u_j^{+-1}, b_j^(i) : 0 < j < p^k][[u_[k]]] / ([p^(n-k)]_F u_[k])
    S_k = R_k[u_[k]^{-1}]
    R^n = MU_*[u_j^{+-1}, b_j^(i) : 0 < j < p^n]

with ``psi_k: R_k -> S_k`` the localisation and ``phi_k: R_{k+1} -> S_k``
sending ``u_[k+1]`` to ``[p]_F u_[k]``.  The pullback is solved with the
generic engine of :mod:`cobord.limit`, which makes the comparison with the
chain-poset computation a genuine cross-check: the rings, the variables and
the maps are all built independently here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .fgl import euler_coeff_of, iterated_fgl_sum, n_series_of
from .gamma import GammaParams, MapError, RingMapSpec, _level0_rule, law_for, target_index_bound
from .groups import FinAbGroup
from .limit import Constraint, LimitProblem, LimitResult, assemble_diagram, auto_precision, limit_degree
from .poly import Poly, PolyRing

ROLES = ("R", "S", "Rn")


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


@dataclass(eq=False)
class ZpnRing:
    role: str
    p: int
    n: int
    k: int
    params: GammaParams
    I: int
    law: object = field(repr=False)
    ring: PolyRing = field(repr=False)
    relations: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        names = self.ring.names
        self.level0 = [j for j in range(1, self.p**self.k)]
        self.phi_laurent = [names.index(f"u{j}") for j in self.level0]
        self.phi_weighted = [
            (names.index(f"b{j}^({i})"), i, names.index(f"u{j}")) for j in self.level0 for i in range(1, self.I + 1)
        ]
        self.w_idx = [names.index(self.series_name)] if self.series_name in names else []
        self.laurent_w = set(self.w_idx) if self.role == "S" else set()
        self.w_blocks = [(1, self.w_idx, self.role == "S")] if self.w_idx else []
        self.phi_idx = sorted(self.phi_laurent + [i for i, _, _ in self.phi_weighted])

    @property
    def series_name(self) -> str:
        return f"u[{self.k}]"

    @property
    def N(self) -> int:
        return self.params.N

    def ident(self) -> str:
        return {"R": f"R_{self.k}", "S": f"S_{self.k}", "Rn": f"R^{self.n}"}[self.role]

    def var(self, name: str) -> Poly:
        return self.ring.var(name)

    def is_small(self, key: tuple[int, ...], N: int | None = None) -> bool:
        N = self.N if N is None else N
        return bool(self.w_idx) and key[self.w_idx[0]] > N

    def drop_small(self, p: Poly, N: int | None = None) -> Poly:
        if not self.w_idx:
            return p
        return p.filter(lambda k: not self.is_small(k, N))

    def phi_key(self, key: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(key[i] for i in self.phi_idx)

    def w_key(self, key: tuple[int, ...]) -> tuple[int, ...]:
        out = list(key)
        for i in self.phi_idx:
            out[i] = 0
        return tuple(out)

    def describe(self) -> str:
        lines = [f"{self.ident()} for Z/{self.p}^{self.n}"]
        lines.append("  generators: " + ", ".join(f"{n} ({d})" for n, d in self.ring.variables))
        for r in self.relations:
            lines.append(f"  relation: {r} = 0")
        return "\n".join(lines)


def build_zpn_ring(role: str, p: int, n: int, k: int, params: GammaParams, I: int | None = None) -> ZpnRing:
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    if not _is_prime(p) or n < 1:
        raise ValueError("need a prime p and n >= 1")
    if role == "Rn":
        k = n
    elif not 0 <= k <= n - 1:
        raise ValueError(f"k = {k} out of range for n = {n}")
    law = law_for(params.law, params.D)
    I = params.index_bound if I is None else I
    variables = [(f"u{j}", -2) for j in range(1, p**k)]
    variables += [(f"b{j}^({i})", 2 * i) for j in range(1, p**k) for i in range(1, I + 1)]
    if role != "Rn":
        variables.append((f"u[{k}]", -2))
    ring = PolyRing(law.base, variables)
    Z = ZpnRing(role, p, n, k, params, I, law, ring)
    if role != "Rn":
        Z.relations = [n_series_of(law, p ** (n - k), ring.var(f"u[{k}]"))]
    return Z


# ---------------------------------------------------------------------------
# maps


def psi_map(Rk: ZpnRing, Sk: ZpnRing) -> RingMapSpec:
    """Localisation: every generator goes to itself."""
    images = {name: Sk.var(name) for name in Rk.ring.names}
    inverses = {f"u{j}": Sk.ring.monomial({f"u{j}": -1}) for j in Rk.level0}
    return RingMapSpec(Rk, Sk, images, inverses, Sk.N)


def _balanced(m: int, modulus: int) -> int:
    m %= modulus
    return m - modulus if 2 * m > modulus else m


def _inverse_series(T: ZpnRing, g: Poly, lead: Poly, lead_inv: Poly, N_fac: int) -> Poly:
    """``g^{-1}`` as ``lead^{-1} sum (-(g - lead) lead^{-1})^n``."""
    eps = T.drop_small((g - lead) * lead_inv, N_fac)
    total = T.ring.one()
    term = T.ring.one()
    for _ in range(8 * (N_fac + 2)):
        term = T.drop_small(-(term * eps), N_fac)
        if term.is_zero():
            return T.drop_small(lead_inv * total, N_fac)
        total = total + term
    raise MapError(f"inverse did not converge in {T.ident()} at precision {N_fac}")


def _unit_inverse(T: ZpnRing, m: int, N_fac: int) -> tuple[Poly, bool]:
    """Inverse of ``[m]_F u_[k] / u_[k]``; exact when ``m = +-1``, else a p-adic approximation."""
    law = T.law
    u = T.var(T.series_name)
    g = n_series_of(law, m, u)
    # divide by u: every term has u-exponent >= 1
    ui = T.ring.index[T.series_name]
    q = Poly(T.ring, {tuple(e - (1 if t == ui else 0) for t, e in enumerate(k)): c for k, c in g.terms.items()})
    if m in (1, -1):
        return _inverse_series(T, q, T.ring.const(m), T.ring.const(m), N_fac), True
    # p^(n-k) is divisible by u_[k] in S_k, so inverting m modulo a high power of p suffices
    modulus = T.p ** ((T.n - T.k) * (N_fac + 2))
    y = pow(m, -1, modulus)
    delta = q - T.ring.const(m)
    eps = T.drop_small(delta * y, N_fac)
    total = T.ring.one()
    term = T.ring.one()
    for _ in range(8 * (N_fac + 2)):
        term = T.drop_small(-(term * eps), N_fac)
        if term.is_zero():
            break
        total = total + term
    return T.drop_small(total * y, N_fac), False


def phi_map(src: ZpnRing, Sk: ZpnRing, N_fac: int | None = None) -> RingMapSpec:
    """``R_{k+1} -> S_k`` (or ``R^n -> S_{n-1}``).

    ``u_j`` with ``j = r + p^k m`` goes to ``u_r +_F [m]_F u_[k]`` (``u_0 = 0``),
    which is what the identification ``u_[k] = [p^k]_F u`` forces.  The classes
    ``b_j^(i) = u_j^(i) / u_j`` follow the level-0 rule of the Gamma maps.
    """
    N_fac = Sk.N if N_fac is None else N_fac
    law = Sk.law
    p, k = Sk.p, Sk.k
    uk = Sk.var(Sk.series_name)
    images: dict = {}
    inverses: dict = {}
    exact = True
    if src.role == "R":
        images[src.series_name] = Sk.drop_small(n_series_of(law, p, uk), N_fac)
    for j in src.level0:
        r, m = j % p**k, j // p**k
        m = _balanced(m, p ** (Sk.n - k)) if r == 0 else m
        w = Sk.drop_small(n_series_of(law, m, uk), N_fac)
        if r == 0:
            img = w
            unit_inv, ok = _unit_inverse(Sk, m, N_fac)
            exact &= ok
            inv = Sk.drop_small(unit_inv * Sk.ring.monomial({Sk.series_name: -1}), N_fac)
        else:
            ur = Sk.var(f"u{r}")
            ur_inv = Sk.ring.monomial({f"u{r}": -1})
            img = Sk.drop_small(iterated_fgl_sum(law, [ur, w], Sk.ring), N_fac)
            inv = _inverse_series(Sk, img, ur, ur_inv, N_fac)
        images[f"u{j}"] = img
        inverses[f"u{j}"] = inv
        for i in range(1, src.I + 1):
            if r == 0:
                num = Sk.drop_small(euler_coeff_of(law, i, w), N_fac)
            else:
                ur = Sk.var(f"u{r}")
                num = _level0_rule(Sk, None, w, i, N_fac, var_of=lambda l, r=r, ur=ur: Sk.var(f"b{r}^({l})") * ur, I=Sk.I)
            images[f"b{j}^({i})"] = Sk.drop_small(num * inv, N_fac)
    spec = RingMapSpec(src, Sk, images, inverses, N_fac)
    spec.exact_inverses = exact
    return spec


# ---------------------------------------------------------------------------
# the pullback


@dataclass
class ZpnDiagram:
    p: int
    n: int
    params: GammaParams
    R: list
    S: list
    top: ZpnRing
    psi: list
    phi: list
    problem: LimitProblem
    checks: dict = field(default_factory=dict)

    def limit(self, d: int) -> LimitResult:
        sol = self.problem.solve(d)
        res = LimitResult(f"Z/{self.p**self.n}", "zpn", d, sol.invariant_factors, False, self.params.to_json())
        res.witnesses = [
            {src.ident(): str(x) for src, x in zip(self.problem.sources, tup)} for tup in sol.witness_elements()
        ]
        res.diagnostics = {"coordinates": len(sol.coords), "equations": len(sol.equations), "seconds": round(sol.seconds, 3)}
        return res


def _n_fac(params: GammaParams) -> int:
    return params.N + max(2, params.N // 2)


def build_zpn_diagram(p: int, n: int, params: GammaParams, validate: bool = True) -> ZpnDiagram:
    if params.law == "universal-rational":
        raise ValueError("the pullback needs an integral base; use universal-integral")
    nfac = _n_fac(params)
    IT = target_index_bound(params, 1, nfac)
    R = [build_zpn_ring("R", p, n, k, params) for k in range(n)]
    S = [build_zpn_ring("S", p, n, k, params, I=IT) for k in range(n)]
    top = build_zpn_ring("Rn", p, n, n, params)
    psi = [psi_map(R[k], S[k]) for k in range(n)]
    phi = [phi_map(R[k + 1] if k + 1 < n else top, S[k], nfac) for k in range(n)]
    sources = R + [top]
    constraints = [Constraint(S[k], [(k, psi[k]), (k + 1, phi[k])]) for k in range(n)]
    problem = LimitProblem(sources, constraints, params, f"Z/{p**n}", "zpn")
    diagram = ZpnDiagram(p, n, params, R, S, top, psi, phi, problem)
    if validate:
        diagram.checks = validate_zpn(diagram)
    return diagram


def validate_zpn(diagram: ZpnDiagram) -> dict:
    """Each source relation must land in the target ideal (windowed check)."""
    from .limit import ArrowValidationError, _w_zero

    report = {}
    for maps in (diagram.psi, diagram.phi):
        for spec in maps:
            ok = all(_w_zero(spec.target, spec.apply(r), diagram.params.M + 1) for r in spec.source.relations)
            report[f"{spec.source.ident()} -> {spec.target.ident()}"] = ok
            if not ok:
                raise ArrowValidationError(f"{spec.source.ident()} -> {spec.target.ident()} does not preserve relations")
    report["exact_inverses"] = all(getattr(s, "exact_inverses", True) for s in diagram.phi)
    return report


def zpn_schedule(params: GammaParams, degrees: Sequence[int]) -> list[GammaParams]:
    from .limit import default_schedule

    return default_schedule(params, degrees)


def zpn_pullback(p: int, n: int, degrees: Sequence[int] | int, params: GammaParams, schedule: Sequence[GammaParams] | None = None) -> list[LimitResult]:
    """Pullback invariants per degree, stabilised along ``schedule``."""
    if isinstance(degrees, int):
        degrees = [degrees]
    degrees = list(degrees)
    schedule = list(schedule) if schedule else zpn_schedule(params, degrees)
    runs = []
    for prm in schedule:
        dg = build_zpn_diagram(p, n, prm)
        runs.append({d: dg.limit(d) for d in degrees})
    out = []
    for d in degrees:
        last = runs[-1][d]
        last.stable = len(runs) >= 2 and runs[-1][d].invariant_factors == runs[-2][d].invariant_factors
        last.history = [{"params": r[d].params, "invariant_factors": r[d].invariant_factors} for r in runs]
        out.append(last)
    return out


def crosscheck_zpn(p: int, n: int, degrees: Sequence[int], params: GammaParams, schedule: Sequence[GammaParams] | None = None) -> dict:
    """Compare the pullback with the chain-poset limit degree by degree."""
    from .limit import stabilize

    degrees = list(degrees)
    schedule = list(schedule) if schedule else zpn_schedule(params, degrees)
    G = FinAbGroup((p**n,))
    ours = zpn_pullback(p, n, degrees, params, schedule)
    theirs = stabilize(G, degrees, schedule, "P''")
    rows = []
    agree = True
    for a, b in zip(ours, theirs):
        same = a.invariant_factors == b.invariant_factors
        agree &= same
        rows.append({
            "degree": a.degree,
            "zpn": a.invariant_factors,
            "limit": b.invariant_factors,
            "zpn_stable": a.stable,
            "limit_stable": b.stable,
            "agree": same,
        })
    euler = euler_witness(p, n, schedule[-1])
    return {"p": p, "n": n, "params": schedule[-1].to_json(), "agree": agree, "degrees": rows, "euler_tuple": euler}


def euler_witness(p: int, n: int, params: GammaParams) -> dict:
    """The tuple ``(u_[0], u_[0], ..., u_1)`` of Euler classes in degree -2 on both sides."""
    dg = build_zpn_diagram(p, n, params, validate=False)
    sol = dg.problem.solve(-2)
    # in R_k the Euler class of the generating character is u_1 (a unit) unless k = 0
    tup = [dg.R[0].var("u[0]")] + [R.var("u1") for R in dg.R[1:]] + [dg.top.var("u1")]
    ok_zpn = sol.is_compatible(tup)
    G = FinAbGroup((p**n,))
    diagram = assemble_diagram(G, "P''", params, validate=False)
    gsol = diagram.problem.solve(-2)
    gt = []
    for src in diagram.problem.sources:
        gens = [v for v in src.info if v.kind == "u" and v.char.exponents == (1,)]
        gt.append(src.ring.var(gens[0].name) if gens else src.ring.zero())
    ok_gamma = gsol.is_compatible(gt)
    return {"zpn": ok_zpn, "limit": ok_gamma}


__all__ = [
    "ZpnDiagram",
    "ZpnRing",
    "build_zpn_diagram",
    "build_zpn_ring",
    "crosscheck_zpn",
    "phi_map",
    "psi_map",
    "zpn_pullback",
]
