"""Integer linear algebra: Smith forms, kernels, quotients."""

import itertools
from math import gcd, prod

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobord.linalg import (
    FGAbPresentation,
    IllDefinedMap,
    PresentedMap,
    QuotientModule,
    column_echelon,
    hnf,
    in_row_lattice,
    integer_kernel,
    invariant_factors,
    kernel_of_map,
    smith_decomposition,
)

matrices = st.integers(1, 4).flatmap(
    lambda m: st.integers(1, 4).flatmap(
        lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=m, max_size=m)
    )
)


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def det(M):
    n = len(M)
    if n == 0:
        return 1
    return sum((-1) ** j * M[0][j] * det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(n))


def minors_gcd(A, k):
    g = 0
    m, n = len(A), len(A[0])
    for rs in itertools.combinations(range(m), k):
        for cs in itertools.combinations(range(n), k):
            g = gcd(g, det([[A[r][c] for c in cs] for r in rs]))
    return g


def oracle_factors(A, n):
    """Invariant factors from determinantal divisors d_k = gcd of k-minors."""
    d = [1]
    for k in range(1, min(len(A), n) + 1):
        g = minors_gcd(A, k)
        if g == 0:
            break
        d.append(g)
    diag = [d[i] // d[i - 1] for i in range(1, len(d))]
    return [x for x in diag if x != 1] + [0] * (n - len(diag))


@pytest.mark.parametrize(
    "rows,n,expected",
    [
        ([[2, 0], [0, 3]], 2, [6]),
        ([[2, 4], [6, 8]], 2, [2, 4]),
        ([[4]], 3, [4, 0, 0]),
        ([], 2, [0, 0]),
        ([[1, 1, 1]], 3, [0, 0]),
        ([[2, 0, 0], [0, 2, 0]], 3, [2, 2, 0]),
    ],
)
def test_invariant_factor_examples(rows, n, expected):
    assert invariant_factors(rows, n) == expected


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_smith_decomposition(A):
    n = len(A[0])
    U, D, V, Vi = smith_decomposition(A)
    assert matmul(matmul(U, A), V) == D
    assert matmul(V, Vi) == [[int(i == j) for j in range(n)] for i in range(n)]
    assert abs(det(U)) == 1
    diag = [D[i][i] for i in range(min(len(D), n))]
    for i in range(len(D)):
        for j in range(n):
            if i != j:
                assert D[i][j] == 0
    nz = [x for x in diag if x]
    assert all(x > 0 for x in nz)
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert invariant_factors(A, n) == oracle_factors(A, n)


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_quotient_module_matches_smith(A):
    n = len(A[0])
    rels = [{i: v for i, v in enumerate(r) if v} for r in A]
    Q = QuotientModule.build(range(n), rels)
    assert sorted(Q.alphas) == sorted(invariant_factors(A, n))
    for r in rels:
        assert Q.is_zero(r)
    # lifts of coordinate generators project back to unit vectors
    for i in range(Q.rank):
        v = Q.project(Q.lift(i))
        assert v == [int(j == i) % (Q.alphas[j] or 2**62) for j in range(Q.rank)]


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_integer_kernel(A):
    n = len(A[0])
    eqs = [{i: v for i, v in enumerate(r) if v} for r in A]
    K = integer_kernel(list(range(n)), eqs)
    rank = n - len(hnf(A))
    assert len(K.basis) == rank
    for b in K.basis:
        assert all(sum(e.get(i, 0) * b.get(i, 0) for i in range(n)) == 0 for e in eqs)
    # a primitive lattice: every integer solution in a small box has integer coordinates
    for z in itertools.product(range(-2, 3), repeat=n):
        if all(sum(r[i] * z[i] for i in range(n)) == 0 for r in A):
            c = K.coordinates(dict(enumerate(z)))
            back = [sum(ci * b.get(i, 0) for ci, b in zip(c, K.basis)) for i in range(n)]
            assert back == list(z)


def test_column_echelon_shape():
    rows = [{"a": 2, "b": 4}, {"b": 3, "c": 1}]
    V, Vi, rank = column_echelon(rows, ["a", "b", "c"])
    assert rank == 2
    cols = ["a", "b", "c"]
    for j in range(rank, 3):
        for r in rows:
            assert sum(r.get(cols[i], 0) * v for i, v in V[j].items()) == 0


def test_hnf_membership():
    H = hnf([[2, 0], [0, 3]])
    assert in_row_lattice([4, 9], H)
    assert not in_row_lattice([1, 0], H)


def test_presented_map_kernel():
    # multiplication by 2 on Z/4 has kernel Z/2 generated by 2
    Z4 = FGAbPresentation(["g"], [[4]])
    f = PresentedMap(Z4, Z4, [[2]])
    K = kernel_of_map(f)
    assert K.invariant_factors() == [2]
    assert K.generators == [(2,)]
    # projection Z -> Z/3 has kernel 3Z
    Z = FGAbPresentation(["g"], [])
    K = kernel_of_map(PresentedMap(Z, FGAbPresentation(["h"], [[3]]), [[1]]))
    assert K.generators == [(3,)] and K.invariant_factors() == [0]


def test_ill_defined_map():
    Z4 = FGAbPresentation(["g"], [[4]])
    Z3 = FGAbPresentation(["h"], [[3]])
    with pytest.raises(IllDefinedMap):
        PresentedMap(Z4, Z3, [[1]]).check()


def test_presentation_order():
    P = FGAbPresentation(["a", "b", "c"], [[2, 0, 0], [0, 3, 0]])
    inv = P.invariant_factors()
    assert inv == [6, 0]
    assert prod(x for x in inv if x) == 6
    assert P.contains([4, 3, 0]) and not P.contains([1, 0, 0])
    with pytest.raises(ValueError):
        FGAbPresentation(["a"], [[1, 2]])
