"""Exact integer linear algebra: Smith forms, presented groups, kernels.

Two layers live here.  The dense layer (``smith_decomposition``) is a plain
Smith normal form with unimodular transforms, used on small residual
matrices.  The sparse layer eliminates unit pivots first, which disposes of
the bulk of the relations produced by formal-group-law identities, and
only hands what is left to the dense layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import flint

Matrix = list[list[int]]
SparseVec = dict


# ---------------------------------------------------------------------------
# dense Smith normal form


def _identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_decomposition(A: Sequence[Sequence[int]], ncols: int | None = None, want_u: bool = True):
    """Return ``(U, D, V, Vinv)`` with ``U A V = D`` in Smith normal form.

    ``U`` and ``V`` are unimodular; ``Vinv`` is the inverse of ``V``.  ``U`` is
    ``None`` when ``want_u`` is false (it is the expensive one and most callers
    only need column transforms).
    """
    m = len(A)
    n = ncols if ncols is not None else (len(A[0]) if m else 0)
    D = [list(map(int, r)) for r in A]
    U = _identity(m) if want_u else None
    V = _identity(n)
    Vi = _identity(n)

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        if U is not None:
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in D:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_row(dst, src, q):  # row dst += q * row src
        if q:
            rd, rs = D[dst], D[src]
            for c in range(n):
                if rs[c]:
                    rd[c] += q * rs[c]
            if U is not None:
                ud, us = U[dst], U[src]
                for c in range(m):
                    if us[c]:
                        ud[c] += q * us[c]

    def add_col(dst, src, q):  # col dst += q * col src
        if q:
            for r in D:
                if r[src]:
                    r[dst] += q * r[src]
            for r in V:
                if r[src]:
                    r[dst] += q * r[src]
            # inverse: row src of Vinv -= q * row dst
            vs, vd = Vi[src], Vi[dst]
            for c in range(n):
                if vd[c]:
                    vs[c] -= q * vd[c]

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero absolute value in the remaining block
        best = None
        for i in range(t, m):
            row = D[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = D[t][t]
            dirty = False
            for i in range(t + 1, m):
                if D[i][t]:
                    q = D[i][t] // p
                    add_row(i, t, -q)
                    if D[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if D[t][j]:
                    q = D[t][j] // p
                    add_col(j, t, -q)
                    if D[t][j]:
                        dirty = True
            if dirty:
                # move the smallest remaining entry of row/column t to the pivot
                cands = [(abs(D[i][t]), i, t) for i in range(t, m) if D[i][t]]
                cands += [(abs(D[t][j]), t, j) for j in range(t, n) if D[t][j]]
                _, i, j = min(cands)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            # divisibility of the rest of the block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if D[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if D[t][t] < 0:
            D[t] = [-x for x in D[t]]
            if U is not None:
                U[t] = [-x for x in U[t]]
        t += 1
    return U, D, V, Vi


def invariant_factors(rows: Sequence[Sequence[int]], ncols: int) -> list[int]:
    """Invariant factors of ``Z^ncols / rowspace``: non-unit diagonal, then zeros."""
    if ncols == 0:
        return []
    nz = [list(map(int, r)) for r in rows if any(r)]
    if not nz:
        return [0] * ncols
    S = flint.fmpz_mat(nz).snf()
    diag = [abs(int(S[i, i])) for i in range(min(S.nrows(), S.ncols()))]
    diag = [d for d in diag if d]
    rank = len(diag)
    return [d for d in diag if d != 1] + [0] * (ncols - rank)


def hnf(rows: Sequence[Sequence[int]]) -> Matrix:
    nz = [list(map(int, r)) for r in rows if any(r)]
    if not nz:
        return []
    H = flint.fmpz_mat(nz).hnf()
    return [r for r in ([int(x) for x in row] for row in H.tolist()) if any(r)]


def in_row_lattice(vec: Sequence[int], basis_hnf: Sequence[Sequence[int]]) -> bool:
    """Membership of ``vec`` in the row lattice of an HNF basis."""
    v = list(vec)
    for row in basis_hnf:
        piv = next(c for c, x in enumerate(row) if x)
        if v[piv] % row[piv]:
            return False
        q = v[piv] // row[piv]
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return not any(v)


# ---------------------------------------------------------------------------
# sparse unit-pivot elimination


def _axpy(dst: dict, src: Mapping, q: int) -> None:
    for k, v in src.items():
        s = dst.get(k, 0) + q * v
        if s:
            dst[k] = s
        else:
            dst.pop(k, None)


class _Eliminator:
    """Eliminate ``+-1`` pivots from a sparse integer system.

    Each pivot expresses one column as an integer combination of the
    remaining columns; ``subs[c]`` records that expression.
    """

    def __init__(self, rows: Iterable[Mapping]) -> None:
        self.rows: dict[int, dict] = {}
        self.colrows: dict = {}
        for r in rows:
            r = {k: int(v) for k, v in r.items() if v}
            if r:
                rid = len(self.rows)
                self.rows[rid] = r
                for c in r:
                    self.colrows.setdefault(c, set()).add(rid)
        self.subs: dict = {}
        self.order: list = []

    def run(self) -> None:
        progress = True
        while progress:
            progress = False
            for rid in sorted(self.rows, key=lambda r: len(self.rows[r])):
                row = self.rows.get(rid)
                if row is None:
                    continue
                units = [c for c, v in row.items() if v in (1, -1)]
                if not units:
                    continue
                c = min(units, key=lambda c: (len(self.colrows[c]), repr(c)))
                self._pivot(rid, c)
                progress = True

    def _pivot(self, rid: int, c) -> None:
        row = self.rows.pop(rid)
        for k in row:
            self.colrows[k].discard(rid)
        s = row[c]  # +-1, so 1/s == s
        expr = {k: -s * v for k, v in row.items() if k != c}
        self.subs[c] = expr
        self.order.append(c)
        for other in list(self.colrows.get(c, ())):
            orow = self.rows[other]
            q = -orow[c] * s
            before = set(orow)
            _axpy(orow, row, q)
            for k in before - set(orow):
                self.colrows[k].discard(other)
            for k in set(orow) - before:
                self.colrows.setdefault(k, set()).add(other)
            if not orow:
                del self.rows[other]
        self.colrows.pop(c, None)


@dataclass
class QuotientModule:
    """``Z^{columns} / <relations>`` put in the normal form ``+ Z/alpha_i``.

    ``project`` sends a sparse vector to its coordinate vector (entries are
    reduced modulo ``alpha`` when ``alpha != 0``); ``lift`` returns a sparse
    representative of the ``i``-th coordinate generator.
    """

    alphas: list[int]
    _subs: dict
    _order: list
    _active: list
    _active_pos: dict
    _V: Matrix
    _Vinv: Matrix
    _keep: list  # indices of the dense block kept as coordinates
    _free_cols: list
    _free_pos: dict
    _cache: dict = field(default_factory=dict)

    @classmethod
    def build(cls, columns: Iterable, relations: Iterable[Mapping]) -> "QuotientModule":
        cols = list(dict.fromkeys(columns))
        el = _Eliminator(relations)
        el.run()
        residual = list(el.rows.values())
        eliminated = set(el.subs)
        seen = set(eliminated)
        active = []
        for r in residual:
            for k in r:
                if k not in seen:
                    seen.add(k)
                    active.append(k)
        active.sort(key=repr)
        extra = [k for k in el.colrows if k not in seen and k not in eliminated]
        free_cols = [k for k in cols if k not in seen] + [k for k in sorted(extra, key=repr) if k not in set(cols)]
        apos = {k: i for i, k in enumerate(active)}
        dense = [[0] * len(active) for _ in residual]
        for i, r in enumerate(residual):
            for k, v in r.items():
                dense[i][apos[k]] = v
        _, D, V, Vi = smith_decomposition(dense, len(active), want_u=False)
        diag = [abs(D[i][i]) if i < len(D) else 0 for i in range(len(active))]
        keep = [i for i, a in enumerate(diag) if a != 1]
        alphas = [diag[i] for i in keep] + [0] * len(free_cols)
        return cls(alphas, el.subs, el.order, active, apos, V, Vi, keep, free_cols, {k: i for i, k in enumerate(free_cols)})

    @property
    def rank(self) -> int:
        return len(self.alphas)

    def invariant_factors(self) -> list[int]:
        tors = sorted(a for a in self.alphas if a)
        return tors + [0] * sum(1 for a in self.alphas if a == 0)

    def _expand(self, c) -> dict:
        """Column ``c`` rewritten in non-eliminated columns."""
        hit = self._cache.get(c)
        if hit is not None:
            return hit
        stack = [c]
        while stack:
            top = stack[-1]
            pending = [k for k in self._subs[top] if k in self._subs and k not in self._cache]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            if top in self._cache:
                continue
            out: dict = {}
            for k, v in self._subs[top].items():
                if k in self._subs:
                    _axpy(out, self._cache[k], v)
                else:
                    out[k] = out.get(k, 0) + v
                    if not out[k]:
                        del out[k]
            self._cache[top] = out
        return self._cache[c]

    def project(self, vec: Mapping) -> list[int]:
        flat: dict = {}
        for k, v in vec.items():
            if not v:
                continue
            if k in self._subs:
                _axpy(flat, self._expand(k), v)
            else:
                s = flat.get(k, 0) + v
                if s:
                    flat[k] = s
                else:
                    flat.pop(k)
        out = [0] * self.rank
        nk = len(self._keep)
        for k, v in flat.items():
            i = self._active_pos.get(k)
            if i is not None:
                row = self._V[i]
                for t, idx in enumerate(self._keep):
                    if row[idx]:
                        out[t] += v * row[idx]
                continue
            j = self._free_pos.get(k)
            if j is None:
                # column never seen by any relation or listing: it is free but unregistered
                raise KeyError(f"column {k!r} is not part of this quotient")
            out[nk + j] += v
        for t, a in enumerate(self.alphas):
            if a:
                out[t] %= a
        return out

    def lift(self, i: int) -> dict:
        nk = len(self._keep)
        if i >= nk:
            return {self._free_cols[i - nk]: 1}
        row = self._Vinv[self._keep[i]]
        return {self._active[c]: v for c, v in enumerate(row) if v}

    def is_zero(self, vec: Mapping) -> bool:
        return not any(self.project(vec))


# ---------------------------------------------------------------------------
# integer kernels


@dataclass
class IntegerKernel:
    """Lattice of integer solutions of a sparse homogeneous linear system."""

    basis: list[dict]
    _param_of: object

    def coordinates(self, vec: Mapping) -> list[int]:
        return self._param_of(vec)


def column_echelon(rows: Sequence[Mapping], columns: Sequence) -> tuple[list[dict], list[dict], int]:
    """Unimodular column operations bringing a sparse matrix to echelon shape.

    Returns ``(V, Vinv, rank)`` with ``V`` as sparse columns and ``Vinv`` as
    sparse rows (both indexed by position in ``columns``).  After the
    transform only the first ``rank`` columns are nonzero, so columns
    ``rank, rank+1, ...`` of ``V`` span the integer kernel.
    """
    n = len(columns)
    pos = {k: i for i, k in enumerate(columns)}
    # D stored by columns: col -> {row: value}
    D: list[dict] = [{} for _ in range(n)]
    for i, r in enumerate(rows):
        for k, v in r.items():
            if v:
                D[pos[k]][i] = int(v)
    V = [{c: 1} for c in range(n)]
    Vi = [{c: 1} for c in range(n)]
    # row -> set of columns with a nonzero entry, kept in sync
    rowcols: dict[int, set] = {}
    for c, col in enumerate(D):
        for i in col:
            rowcols.setdefault(i, set()).add(c)

    def add_col(dst: int, src: int, q: int) -> None:
        # column dst += q * column src; inverse: row src of Vinv -= q * row dst
        before = set(D[dst])
        _axpy(D[dst], D[src], q)
        after = set(D[dst])
        for i in before - after:
            rowcols[i].discard(dst)
        for i in after - before:
            rowcols[i].add(dst)
        _axpy(V[dst], V[src], q)
        _axpy(Vi[src], Vi[dst], -q)

    def swap(a: int, b: int) -> None:
        if a == b:
            return
        for i in set(D[a]) | set(D[b]):
            s = rowcols[i]
            ha, hb = a in s, b in s
            if ha != hb:
                if ha:
                    s.discard(a)
                    s.add(b)
                else:
                    s.discard(b)
                    s.add(a)
        D[a], D[b] = D[b], D[a]
        V[a], V[b] = V[b], V[a]
        Vi[a], Vi[b] = Vi[b], Vi[a]

    t = 0
    done_rows: set = set()
    while t < n:
        # pivot row: fewest live columns, then smallest entry
        best = None
        for i, cols in rowcols.items():
            if i in done_rows:
                continue
            live = [c for c in cols if c >= t]
            if not live:
                continue
            m = min(abs(D[c][i]) for c in live)
            key = (m != 1, len(live), m, i)
            if best is None or key < best[0]:
                best = (key, i)
        if best is None:
            break
        i = best[1]
        while True:
            live = sorted((c for c in rowcols[i] if c >= t), key=lambda c: (abs(D[c][i]), c))
            p = live[0]
            swap(t, p)
            if len(live) == 1:
                break
            piv = D[t][i]
            for c in [c for c in rowcols[i] if c > t]:
                add_col(c, t, -(D[c][i] // piv))
        done_rows.add(i)
        t += 1
    return V, Vi, t


def integer_kernel(unknowns: Sequence, equations: Iterable[Mapping]) -> IntegerKernel:
    """Basis of ``{z in Z^unknowns : E . z = 0 for every equation E}``.

    Equations are sparse maps ``unknown -> coefficient``.  The returned
    ``coordinates`` function recovers the basis coefficients of a kernel
    element.
    """
    el = _Eliminator(equations)
    el.run()
    residual = list(el.rows.values())
    elim = set(el.subs)
    active: list = []
    seen = set()
    for r in residual:
        for k in r:
            if k not in seen:
                seen.add(k)
                active.append(k)
    active.sort(key=repr)
    free = [u for u in unknowns if u not in elim and u not in seen]
    Vcols, Virows, rank = column_echelon(residual, active)
    params = [("free", u) for u in free] + [("dense", i) for i in range(rank, len(active))]

    def complete(partial: dict) -> dict:
        out = dict(partial)
        for c in reversed(el.order):
            v = 0
            for k, coef in el.subs[c].items():
                v += coef * out.get(k, 0)
            if v:
                out[c] = v
        return out

    basis = []
    for kind, x in params:
        if kind == "free":
            basis.append(complete({x: 1}))
        else:
            basis.append(complete({active[r]: v for r, v in Vcols[x].items()}))

    def param_of(vec: Mapping) -> list[int]:
        out = []
        for kind, x in params:
            if kind == "free":
                out.append(vec.get(x, 0))
            else:
                out.append(sum(v * vec.get(active[c], 0) for c, v in Virows[x].items()))
        return out

    return IntegerKernel(basis, param_of)


# ---------------------------------------------------------------------------
# presented groups


@dataclass
class FGAbPresentation:
    """A finitely generated abelian group ``Z^generators / rowspace(relations)``."""

    generators: list
    relations: Matrix
    degree: int | None = None
    _snf: list[int] | None = None

    def __post_init__(self) -> None:
        n = len(self.generators)
        for r in self.relations:
            if len(r) != n:
                raise ValueError("relation row length does not match the generator count")

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def invariant_factors(self) -> list[int]:
        if self._snf is None:
            self._snf = invariant_factors(self.relations, self.ngens)
        return list(self._snf)

    def contains(self, vec: Sequence[int]) -> bool:
        """Whether ``vec`` lies in the relation lattice (is zero in the group)."""
        return in_row_lattice(vec, hnf(self.relations))

    def quotient_module(self) -> QuotientModule:
        rows = [{i: v for i, v in enumerate(r) if v} for r in self.relations]
        return QuotientModule.build(range(self.ngens), rows)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "generators": [str(g) for g in self.generators],
            "relations": [list(map(int, r)) for r in self.relations],
            "invariant_factors": self.invariant_factors(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def smith_structure(p: FGAbPresentation) -> list[int]:
    return p.invariant_factors()


class IllDefinedMap(ValueError):
    pass


@dataclass
class PresentedMap:
    """Homomorphism given on generators: row ``i`` is the image of generator ``i``."""

    source: FGAbPresentation
    target: FGAbPresentation
    matrix: Matrix

    def __post_init__(self) -> None:
        if len(self.matrix) != self.source.ngens:
            raise ValueError("matrix needs one row per source generator")
        if any(len(r) != self.target.ngens for r in self.matrix):
            raise ValueError("matrix rows must have one entry per target generator")

    def image(self, vec: Sequence[int]) -> list[int]:
        out = [0] * self.target.ngens
        for c, row in zip(vec, self.matrix):
            if c:
                for j, v in enumerate(row):
                    out[j] += c * v
        return out

    def check(self) -> None:
        H = hnf(self.target.relations)
        for r in self.source.relations:
            if not in_row_lattice(self.image(r), H):
                raise IllDefinedMap(f"relation {r} does not map into the target relations")


def kernel_of_map(f: PresentedMap) -> FGAbPresentation:
    """Kernel of the induced map on quotients, with explicit generator vectors.

    The generators of the result are integer vectors in source-generator
    coordinates; its relations express the source relations in that basis.
    """
    f.check()
    m, n = f.source.ngens, f.target.ngens
    # x . M = y . R_t, solved for (x, y) in one integer kernel
    unknowns = [("x", i) for i in range(m)] + [("y", i) for i in range(len(f.target.relations))]
    eqs = []
    for j in range(n):
        e = {("x", i): f.matrix[i][j] for i in range(m) if f.matrix[i][j]}
        for t, r in enumerate(f.target.relations):
            if r[j]:
                e[("y", t)] = -r[j]
        if e:
            eqs.append(e)
    K = integer_kernel(unknowns, eqs)
    # project to x; the y part may carry redundancy, so re-basis the x-lattice
    xs = [[b.get(("x", i), 0) for i in range(m)] for b in K.basis]
    gens = hnf(xs)
    rels = [_solve_in_basis(gens, r) for r in f.source.relations if any(r)]
    return FGAbPresentation([tuple(g) for g in gens], rels, f.source.degree)


def _solve_in_basis(basis: Matrix, vec: Sequence[int]) -> list[int]:
    """Integer coefficients ``c`` with ``c . basis = vec`` for an HNF basis."""
    v = list(vec)
    out = []
    for row in basis:
        piv = next(c for c, x in enumerate(row) if x)
        if v[piv] % row[piv]:
            raise ArithmeticError("vector is not in the lattice")
        q = v[piv] // row[piv]
        out.append(q)
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    if any(v):
        raise ArithmeticError("vector is not in the lattice")
    return out
