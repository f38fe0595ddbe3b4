"""Degreewise inverse limits of the Gamma diagram.

The limit is computed as a subgroup of the product of the singleton nodes.
Each singleton group is infinitely generated in a fixed degree once Euler
classes are inverted, so we work inside a finite box of level-0 monomials
(the ``E``/``P`` parameters).  Every other node ``T`` only contributes
equations: the images of a tuple under the maps from the singletons of
``T`` must agree modulo the ideal of ``T`` and the completion neighbourhood
of zero.  Those quotients are approximated on a finite window of monomials
around the supports of the images (margin ``M``), and the answer is trusted
only once it stops changing as the precision grows.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .gamma import (
    GammaParams,
    GammaPresentation,
    RingMapSpec,
    build_gamma,
    law_for,
    structure_map,
    target_index_bound,
)
from .groups import ChainPoset, FinAbGroup, chain_poset
from .linalg import QuotientModule, integer_kernel, invariant_factors
from .lazard import partition_count
from .poly import Poly

# ---------------------------------------------------------------------------
# box and window enumeration


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _l1_ball(n: int, radius: int) -> list[tuple[int, ...]]:
    return [v for v in itertools.product(range(-radius, radius + 1), repeat=n) if sum(map(abs, v)) <= radius]


def _weighted(weights: Sequence[int], bound: int) -> list[tuple[int, ...]]:
    out = [()]
    for w in weights:
        nxt = []
        for v in out:
            used = sum(a * b for a, b in zip(v, weights))
            for c in range((bound - used) // w + 1):
                nxt.append(v + (c,))
        out = nxt
    return out


def phi_box(node, E: int, P: int) -> list[tuple[int, ...]]:
    """Full ring keys (zero elsewhere) of the level-0 monomials in the box."""
    lau = node.phi_laurent
    wt = node.phi_weighted
    nkey = node.ring.nvars + node.ring.base.ngens
    out = []
    for b in _l1_ball(len(lau), E):
        for c in _weighted([w for _, w, _ in wt], P):
            key = [0] * nkey
            for idx, e in zip(lau, b):
                key[idx] += e
            for (idx, _, att), e in zip(wt, c):
                key[idx] += e
                if att is not None:
                    key[att] += e
            out.append(tuple(key))
    out.sort(key=lambda k: (sum(abs(x) for x in k), tuple(-x for x in k)))
    return out


def key_degree(node, key: tuple[int, ...]) -> int:
    return node.ring.key_degree(key)


def _base_by_degree(node) -> dict[int, list[tuple[int, ...]]]:
    base = node.ring.base
    out: dict[int, list] = {}
    for m in base.all_monomials():
        out.setdefault(base.degree(m), []).append(m)
    return out


def series_w_basis(node, e: int) -> list[tuple[int, ...]]:
    """W monomials of degree ``e`` for a node whose W variables are all series."""
    nv = node.ring.nvars
    out = []
    for db, monos in sorted(_base_by_degree(node).items()):
        if (db - e) % 2 or db < e:
            continue
        s = (db - e) // 2
        for comp in _compositions(s, len(node.w_idx)):
            key = [0] * nv
            for idx, x in zip(node.w_idx, comp):
                key[idx] = x
            for m in monos:
                out.append(tuple(key) + m)
    return out


def window_w_basis(node, e: int, ranges: dict[int, tuple[int, int]]) -> list[tuple[int, ...]]:
    """W monomials of degree ``e`` inside per-variable exponent ranges, not small."""
    nv = node.ring.nvars
    idxs = list(node.w_idx)
    bases = _base_by_degree(node)
    out = []
    iters = [range(ranges[i][0], ranges[i][1] + 1) for i in idxs]
    for exps in itertools.product(*iters):
        db = e + 2 * sum(exps)
        monos = bases.get(db)
        if not monos:
            continue
        key = [0] * nv
        for i, x in zip(idxs, exps):
            key[i] = x
        for m in monos:
            k = tuple(key) + m
            if not node.is_small(k):
                out.append(k)
    return out


# ---------------------------------------------------------------------------
# node quotients


def _poly_rows(node, relations: Sequence[Poly], multipliers: Sequence[tuple[int, ...]], drop: bool) -> list[dict]:
    rows = []
    ring = node.ring
    for m in multipliers:
        mono = Poly._raw(ring, {m: 1})
        for r in relations:
            prod = r * mono
            if drop:
                prod = node.drop_small(prod)
            if prod.terms:
                rows.append(dict(prod.terms))
    return rows


class SourceQuotients:
    """Exact degree pieces ``W_e / I`` of a node with only series W variables."""

    def __init__(self, node) -> None:
        self.node = node
        self._cache: dict[int, tuple[list, QuotientModule]] = {}

    def get(self, e: int) -> tuple[list, QuotientModule]:
        hit = self._cache.get(e)
        if hit is None:
            basis = series_w_basis(self.node, e)
            if basis:
                mult = series_w_basis(self.node, e + 2)
                rows = _poly_rows(self.node, self.node.relations, mult, drop=False)
            else:
                rows = []
            hit = (basis, QuotientModule.build(basis, rows))
            self._cache[e] = hit
        return hit


def window_quotient(node, e: int, support: Iterable[tuple[int, ...]], extra_rows: Sequence[dict], margin: int) -> QuotientModule:
    """``W_e / (I + small)`` restricted to a window around ``support``."""
    support = list(support)
    ranges = {}
    for i in node.w_idx:
        vals = [k[i] for k in support] or [0]
        lo, hi = min(vals) - margin, max(vals) + margin
        if i not in node.laurent_w:
            lo = max(lo, 0)
        ranges[i] = (lo, hi)
    mult = window_w_basis(node, e + 2, ranges) if node.relations else []
    rows = _poly_rows(node, node.relations, mult, drop=True)
    rows.extend(r for r in extra_rows if r)
    return QuotientModule.build(sorted(support), rows)


# ---------------------------------------------------------------------------
# problem and solution


@dataclass
class Constraint:
    target: object
    legs: list  # [(source position, map)], first leg is the reference


@dataclass
class LimitResult:
    group: str
    flavor: str
    degree: int
    invariant_factors: list[int]
    stable: bool
    params: dict
    witnesses: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return sum(1 for a in self.invariant_factors if a == 0)

    @property
    def torsion(self) -> list[int]:
        return [a for a in self.invariant_factors if a]

    def to_json(self, witnesses: bool = False) -> dict:
        out = {
            "group": self.group,
            "flavor": self.flavor,
            "degree": self.degree,
            "invariant_factors": list(self.invariant_factors),
            "stable": self.stable,
            "params": self.params,
        }
        if witnesses:
            out["witnesses"] = self.witnesses
        return out


class Solution:
    """Kernel data for one degree, kept to test membership of explicit tuples."""

    def __init__(self, problem: "LimitProblem", d: int) -> None:
        self.problem = problem
        self.d = d
        self.t0 = time.perf_counter()
        self._solve()

    # coordinates: (source position, phi key, index)
    def _solve(self) -> None:
        pb = self.problem
        d = self.d
        coords = []
        alphas = {}
        lifts = {}
        for s, src in enumerate(pb.sources):
            for mu in pb.boxes[s]:
                e = d - key_degree(src, mu)
                basis, Q = pb.source_q[s].get(e)
                if not basis:
                    continue
                for i in range(Q.rank):
                    c = (s, mu, i)
                    coords.append(c)
                    alphas[c] = Q.alphas[i]
                    lifts[c] = (mu, Q.lift(i))
        self.coords, self.alphas, self.lifts = coords, alphas, lifts

        def element(c) -> Poly:
            s = c[0]
            mu, vec = lifts[c]
            ring = pb.sources[s].ring
            return Poly(ring, {tuple(a + b for a, b in zip(mu, k)): v for k, v in vec.items()})

        self.element = element
        equations: list[dict] = []
        slack = 0
        self.tq = []  # per constraint: (phi -> (e, Q)), image cache
        images: dict = {}
        for ci, con in enumerate(pb.constraints):
            T = con.target
            img_split = {}  # (leg, coord) -> {phi: {wkey: c}}
            supports: dict[int, set] = {}
            extra: dict[int, list] = {}
            for li, (s, fmap) in enumerate(con.legs):
                for c in coords:
                    if c[0] != s:
                        continue
                    key = (ci, li, c)
                    img = fmap.apply(element(c))
                    split: dict = {}
                    for k, v in img.terms.items():
                        phi = T.phi_key(k)
                        split.setdefault(phi, {})[T.w_key(k)] = v
                    img_split[(li, c)] = split
                    for phi, w in split.items():
                        e = d - _phi_degree(T, phi)
                        supports.setdefault(e, set()).update(w)
                        if alphas[c]:
                            extra.setdefault(e, []).append({k: alphas[c] * v for k, v in w.items()})
            qs = {e: window_quotient(T, e, sup, extra.get(e, ()), pb.params.M) for e, sup in supports.items()}
            self.tq.append(qs)
            # one block of equations per non-reference leg
            for li in range(1, len(con.legs)):
                rows: dict = {}
                for lj, sign in ((0, 1), (li, -1)):
                    s = con.legs[lj][0]
                    for c in coords:
                        if c[0] != s:
                            continue
                        for phi, w in img_split[(lj, c)].items():
                            e = d - _phi_degree(T, phi)
                            vec = qs[e].project(w)
                            for t, v in enumerate(vec):
                                if v:
                                    rows.setdefault((phi, t), {})
                                    r = rows[(phi, t)]
                                    r[c] = r.get(c, 0) + sign * v
                for (phi, t), r in rows.items():
                    e = d - _phi_degree(T, phi)
                    a = qs[e].alphas[t]
                    r = {k: v for k, v in r.items() if v}
                    if a:
                        sv = ("slack", slack)
                        slack += 1
                        r[sv] = -a
                    if r:
                        equations.append(r)
        self.equations = equations
        unknowns = list(coords) + [("slack", i) for i in range(slack)]
        K = integer_kernel(unknowns, equations)
        self.kernel = K
        # relations of the limit: alpha * e_c for torsion coordinates
        rel_rows = []
        for c in coords:
            a = alphas[c]
            if not a:
                continue
            rel_rows.append(self._complete_slacks({c: a}))
        self.rel_rows = [K.coordinates(v) for v in rel_rows]
        self.invariant_factors = invariant_factors(self.rel_rows, len(K.basis))
        self.seconds = time.perf_counter() - self.t0

    def _complete_slacks(self, vec: dict) -> dict:
        if not hasattr(self, "_eq_index"):
            self._eq_index = {}
            self._eq_slack = []
            for n, eq in enumerate(self.equations):
                sv = None
                for k, v in eq.items():
                    if isinstance(k, tuple) and k and k[0] == "slack":
                        sv = (k, v)
                    else:
                        self._eq_index.setdefault(k, []).append(n)
                self._eq_slack.append(sv)
        out = dict(vec)
        touched = sorted({n for k in vec for n in self._eq_index.get(k, ())})
        for n in touched:
            eq = self.equations[n]
            sv = self._eq_slack[n]
            val = sum(v * vec.get(k, 0) for k, v in eq.items() if sv is None or k != sv[0])
            if sv is None:
                if val:
                    raise ArithmeticError("vector violates an exact equation")
                continue
            q, rem = divmod(val, -sv[1])
            if rem:
                raise ArithmeticError("vector is not compatible modulo a torsion coordinate")
            if q:
                out[sv[0]] = q
        return out

    # -- membership and witnesses ---------------------------------------
    def coordinates_of(self, elements: Sequence[Poly]) -> dict:
        """Source coordinates of a tuple of singleton elements (one per source)."""
        pb = self.problem
        out: dict = {}
        for s, (src, x) in enumerate(zip(pb.sources, elements)):
            phis = {}
            for k, v in x.terms.items():
                mu = src.phi_key(k)
                phis.setdefault(mu, {})[src.w_key(k)] = v
            box = {src.phi_key(mu): mu for mu in pb.boxes[s]}
            for phi, w in phis.items():
                if phi not in box:
                    raise ValueError(f"element of {src.ident()} leaves the level-0 box")
                mu = box[phi]
                e = self.d - key_degree(src, mu)
                basis, Q = pb.source_q[s].get(e)
                vec = Q.project(w)
                for i, v in enumerate(vec):
                    if v:
                        out[(s, mu, i)] = v
        return out

    def is_compatible(self, elements: Sequence[Poly]) -> bool:
        z = self.coordinates_of(elements)
        try:
            self._complete_slacks(z)
        except ArithmeticError:
            return False
        return True

    def is_zero(self, elements: Sequence[Poly]) -> bool:
        return not any(self.coordinates_of(elements).values())

    def witness_elements(self) -> list[list[Poly]]:
        pb = self.problem
        out = []
        for b in self.kernel.basis:
            tup = []
            for s, src in enumerate(pb.sources):
                acc = src.ring.zero()
                for c, v in b.items():
                    if isinstance(c, tuple) and c and c[0] == s and c in self.lifts:
                        acc = acc + self.element(c) * v
                tup.append(acc)
            out.append(tup)
        return out

    def recheck_witnesses(self) -> bool:
        for b in self.kernel.basis:
            z = {c: v for c, v in b.items() if c in self.alphas}
            try:
                self._complete_slacks(z)
            except ArithmeticError:
                return False
        return True


def _phi_degree(node, phi: tuple[int, ...]) -> int:
    return sum(e * node.ring.var_degrees[i] for i, e in zip(node.phi_idx, phi))


class LimitProblem:
    """Sources (singleton-type nodes) plus constraints from the other nodes."""

    def __init__(self, sources: list, constraints: list[Constraint], params: GammaParams, label: str = "", flavor: str = "") -> None:
        self.sources = sources
        self.constraints = constraints
        self.params = params
        self.label = label
        self.flavor = flavor
        self.boxes = [phi_box(s, params.E, params.P) for s in sources]
        self.source_q = [SourceQuotients(s) for s in sources]
        self._solutions: dict[int, Solution] = {}

    def solve(self, d: int) -> Solution:
        sol = self._solutions.get(d)
        if sol is None:
            sol = Solution(self, d)
            self._solutions[d] = sol
        return sol


# ---------------------------------------------------------------------------
# diagrams over chain posets


def auto_precision(D: int, E: int, P: int, degrees: Sequence[int], extra: int = 1, I: int | None = None) -> int:
    """Completion precision covering every W exponent of the singleton boxes."""
    I = D + 1 if I is None else I
    top = 2 * E + 2 * P  # largest level-0 degree in the box, generously
    dmin = min(degrees) if degrees else 0
    s_max = max(0, (2 * D - (dmin - top)) // 2)
    return s_max + D + extra


@dataclass
class LimitDiagram:
    group: FinAbGroup
    poset: ChainPoset | None
    params: GammaParams
    nodes: dict
    arrows: dict
    problem: LimitProblem | None
    checks: dict = field(default_factory=dict)

    @property
    def flavor(self) -> str:
        return self.poset.flavor if self.poset else "P''"

    def limit(self, d: int) -> LimitResult:
        return limit_degree(self, d)


def _n_fac(params: GammaParams) -> int:
    return params.N + max(2, params.N // 2)


def assemble_diagram(G: FinAbGroup, flavor: str = "P''", params: GammaParams | None = None, validate: bool = True) -> LimitDiagram:
    params = params or GammaParams()
    if params.law == "universal-rational":
        raise ValueError("limits need an integral base; use universal-integral")
    if G.order == 1:
        return LimitDiagram(G, None, params, {}, {}, None)
    poset = chain_poset(G, flavor)
    nfac = _n_fac(params)
    nodes = {}
    for S in poset.nodes:
        I = params.index_bound if S.k == 1 else target_index_bound(params, S.k, nfac)
        nodes[S.ident()] = build_gamma(G, S, params, I=I)
    arrows = {}
    for i, j in poset.covering():
        S, T = poset.nodes[i], poset.nodes[j]
        arrows[(S.ident(), T.ident())] = structure_map(nodes[S.ident()], nodes[T.ident()], nfac)
    singles = poset.singletons()
    sources = [nodes[poset.nodes[i].ident()] for i in singles]
    pos = {poset.nodes[i].ident(): n for n, i in enumerate(singles)}
    constraints = []
    for T in poset.nodes:
        if T.k == 1:
            continue
        legs = []
        for H in T.links:
            from .groups import SubgroupChain

            Sid = SubgroupChain(G, (H,)).ident()
            key = (Sid, T.ident())
            if key not in arrows:
                arrows[key] = structure_map(nodes[Sid], nodes[T.ident()], nfac)
            legs.append((pos[Sid], arrows[key]))
        constraints.append(Constraint(nodes[T.ident()], legs))
    problem = LimitProblem(sources, constraints, params, str(G), poset.flavor)
    diagram = LimitDiagram(G, poset, params, nodes, arrows, problem)
    if validate:
        diagram.checks["arrows"] = validate_arrows(diagram)
        if poset.flavor == "P":
            diagram.checks["functoriality"] = check_functoriality(diagram)
    return diagram


def _w_zero(T: GammaPresentation, p: Poly, margin: int) -> bool:
    """Whether ``p`` vanishes in ``T`` modulo the windowed ideal, Phi-part by Phi-part."""
    split: dict = {}
    for k, v in p.terms.items():
        split.setdefault(T.phi_key(k), {})[T.w_key(k)] = v
    for phi, w in split.items():
        deg = key_degree(T, next(iter(w))) if w else 0
        Q = window_quotient(T, deg, w.keys(), (), margin)
        if not Q.is_zero(w):
            return False
    return True


class ArrowValidationError(ValueError):
    pass


def validate_arrows(diagram: LimitDiagram) -> dict:
    """Relations of each source must map into the target ideal (checked on a window)."""
    report = {}
    for (sid, tid), spec in diagram.arrows.items():
        ok = True
        for r in spec.source.relations:
            img = spec.apply(r)
            if not _w_zero(spec.target, img, diagram.params.M + 1):
                ok = False
                break
        report[f"{sid} -> {tid}"] = ok
        if not ok:
            raise ArrowValidationError(f"structure map {sid} -> {tid} does not preserve relations")
    return report


def check_functoriality(diagram: LimitDiagram) -> dict:
    """Compare direct maps with composites on generators for composable pairs."""
    poset = diagram.poset
    nfac = _n_fac(diagram.params)
    report = {}
    rel = set(poset.relations)
    for i, j in poset.relations:
        for t in range(len(poset.nodes)):
            if (j, t) not in rel:
                continue
            S, T, U = poset.nodes[i], poset.nodes[j], poset.nodes[t]
            gS, gT, gU = (diagram.nodes[x.ident()] for x in (S, T, U))
            direct = structure_map(gS, gU, nfac)
            first = structure_map(gS, gT, nfac)
            second = structure_map(gT, gU, nfac)
            ok = True
            for v in gS.info:
                if v.kind == "ui" and v.index > diagram.params.index_bound:
                    continue
                key = gS.ring.monomial({v.name: 1})
                a = direct.apply(key)
                b = second.apply(first.apply(key))
                if not _w_zero(gU, a - b, diagram.params.M + 1):
                    ok = False
                    break
            report[f"{S.ident()} -> {T.ident()} -> {U.ident()}"] = ok
    return report


def trivial_group_result(d: int, params: GammaParams, flavor: str = "P''") -> LimitResult:
    """The trivial group: the limit is the base ring itself."""
    D = params.D
    rank = partition_count(d // 2) if d >= 0 and d % 2 == 0 and d <= 2 * D else 0
    law = law_for(params.law, D)
    count = len(law.base.monomials(d)) if d >= 0 and d % 2 == 0 and d <= 2 * D else 0
    assert count == rank or params.law != "universal-integral"
    return LimitResult("1", flavor, d, [0] * count, True, params.to_json(), diagnostics={"base_monomials": count})


def limit_degree(diagram: LimitDiagram, d: int) -> LimitResult:
    if diagram.problem is None:
        return trivial_group_result(d, diagram.params, diagram.flavor)
    sol = diagram.problem.solve(d)
    wit = []
    for tup in sol.witness_elements():
        wit.append({src.ident(): str(x) for src, x in zip(diagram.problem.sources, tup)})
    diag = {
        "coordinates": len(sol.coords),
        "equations": len(sol.equations),
        "kernel_rank": len(sol.kernel.basis),
        "seconds": round(sol.seconds, 3),
        "witnesses_compatible": sol.recheck_witnesses(),
    }
    return LimitResult(str(diagram.group), diagram.flavor, d, sol.invariant_factors, False, diagram.params.to_json(), wit, diag)


# ---------------------------------------------------------------------------
# stabilisation


def default_schedule(params: GammaParams, degrees: Sequence[int], extra: int = 1) -> list[GammaParams]:
    """Two steps: automatic precision, then two more completion orders and a wider window."""
    N0 = auto_precision(params.D, params.E, params.P, degrees, extra=extra, I=params.I)
    return [params.with_(N=N0, M=max(params.M, 1)), params.with_(N=N0 + 2, M=max(params.M, 1) + 2)]


def stabilize(G: FinAbGroup, degrees: Sequence[int] | int, schedule: Sequence[GammaParams], flavor: str = "P''") -> list[LimitResult]:
    """Recompute along the schedule; ``stable`` iff the last two steps agree."""
    if isinstance(degrees, int):
        degrees = [degrees]
    degrees = list(degrees)
    runs: list[dict[int, LimitResult]] = []
    for prm in schedule:
        diagram = assemble_diagram(G, flavor, prm)
        runs.append({d: limit_degree(diagram, d) for d in degrees})
        if G.order == 1:
            break
    out = []
    for d in degrees:
        last = runs[-1][d]
        if G.order == 1:
            last.stable = True
        elif len(runs) >= 2:
            last.stable = runs[-1][d].invariant_factors == runs[-2][d].invariant_factors
        else:
            last.stable = False
        last.history = [{"params": r[d].params, "invariant_factors": r[d].invariant_factors} for r in runs]
        out.append(last)
    return out


def compare_flavors(G: FinAbGroup, degrees: Sequence[int], params: GammaParams) -> dict:
    """Limits over P, P' and P'' at the same truncation, degree by degree."""
    report = {"group": str(G), "params": params.to_json(), "degrees": {}, "agree": True}
    diagrams = {f: assemble_diagram(G, f, params) for f in ("P", "P'", "P''")}
    for d in degrees:
        row = {f: limit_degree(diagrams[f], d).invariant_factors for f in diagrams}
        same = row["P"] == row["P'"] == row["P''"]
        report["degrees"][d] = {"invariant_factors": row, "agree": same}
        report["agree"] &= same
    return report


def result_json(results: Sequence[LimitResult], config: dict | None = None, witnesses: bool = False) -> str:
    payload = {"config": config or {}, "results": [r.to_json(witnesses) for r in results]}
    return json.dumps(payload, sort_keys=True, indent=2)


__all__ = [
    "LimitDiagram",
    "LimitProblem",
    "LimitResult",
    "assemble_diagram",
    "auto_precision",
    "compare_flavors",
    "default_schedule",
    "limit_degree",
    "stabilize",
]
