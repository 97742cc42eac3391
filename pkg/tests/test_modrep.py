import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from cyclobraid.braid import axioms_check
from cyclobraid.coeff import QQ, CycloRing, LambdaRing, q_number_coeffs
from cyclobraid.modrep import (
    SeriesMatrix,
    cartan_module,
    ematrix,
    irrep,
    kmatrix,
    kron,
    place_legs,
    reorder_legs,
    rmatrix,
    swap_matrix,
    tensor_module,
)

h = sp.symbols("h")


def sym_coeffs(expr, K):
    s = sp.series(expr, h, 0, K + 1).removeO()
    return [Fraction(str(s.coeff(h, k))) for k in range(K + 1)]


def as_fractions(series):
    return [Fraction(int(c.numerator), int(c.denominator)) for c in series.coeffs]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_quantum_commutator(d):
    K = 5
    V = irrep(d, QQ, K)
    comm = V.E @ V.F - V.F @ V.E
    expect = SeriesMatrix.diagonal((d + 1,), QQ, K, [q_number_coeffs(w, K) for w in V.weights])
    assert comm == expect


def test_r_matrix_on_fundamental_matches_closed_form():
    # R = q^(H(x)H/2) (1 + (q - q^-1) E (x) F) on V(1) (x) V(1), q = e^h
    K = 5
    V = irrep(1, QQ, K)
    R = rmatrix(V, V)
    q = sp.exp(h)
    expect = {
        (0, 0): sp.sqrt(q),
        (1, 1): 1 / sp.sqrt(q),
        (2, 2): 1 / sp.sqrt(q),
        (3, 3): sp.sqrt(q),
        (1, 2): (q - 1 / q) / sp.sqrt(q),
    }
    for i in range(4):
        for j in range(4):
            ref = sym_coeffs(expect.get((i, j), sp.Integer(0)), K)
            assert as_fractions(R.entry(i, j)) == ref, (i, j)


def test_r_matrix_at_order_zero_is_identity():
    V = irrep(2, QQ, 0)
    assert rmatrix(V, V) == SeriesMatrix.identity((3, 3), QQ, 0)


def test_k_matrix_diagonal():
    V = irrep(1, QQ, 2)
    Kmat = kmatrix(V, V)
    half = [mpq(1), mpq(1, 2), mpq(1, 8)]
    neg = [mpq(1), mpq(-1, 2), mpq(1, 8)]
    assert [list(Kmat.entry(i, i).coeffs) for i in range(4)] == [half, neg, neg, half]


@pytest.mark.parametrize("d", [1, 2])
def test_qybe(d):
    V = irrep(d, QQ, 6)
    R = rmatrix(V, V)
    n = d + 1
    dims = (n, n, n)
    R12, R13, R23 = (place_legs(R, p, dims) for p in ((0, 1), (0, 2), (1, 2)))
    assert (R12 @ R13 @ R23 - R23 @ R13 @ R12).is_zero()


def test_axioms_trivial_data():
    ring = QQ
    V = irrep(1, ring, 3)
    W = cartan_module(0, ring, 3)
    one2 = SeriesMatrix.identity((2, 2), ring, 3)
    E = SeriesMatrix.identity((1, 2), ring, 3)
    rep = axioms_check(one2, one2, E, W, V)
    assert all(max(r["residual_per_order"]) == 0 for r in rep)


def test_axioms_detect_nonsymmetric_k():
    ring = LambdaRing(2)
    V = irrep(1, ring, 3)
    W = cartan_module(ring.lam(), ring, 3)
    Kmat = kmatrix(V, V)
    bump = SeriesMatrix(Kmat.dims, ring, 3, {1: {2: (ring.zero, ring.one, ring.zero, ring.zero)}})
    rep = axioms_check(rmatrix(V, V), Kmat + bump, ematrix(W, V, 2), W, V)
    by = {r["relation"]: max(r["residual_per_order"]) for r in rep}
    assert by["K12 = K21"] > 0


def test_ematrix_entries():
    ring = CycloRing(3)
    K = 3
    V = irrep(1, ring, K)
    W = cartan_module(ring.lift(2), ring, K)
    E = ematrix(W, V, 3)
    # v_1 has weight -1 and sigma exponent -1: exp(h (-2 + 1/2)) zeta^-1
    z = ring.zeta(-1)
    x = mpq(-3, 2)
    expect = [z * ring.lift(x**k / math.factorial(k)) for k in range(K + 1)]
    assert list(E.entry(1, 1).coeffs) == expect


@pytest.mark.parametrize("ring", [QQ, CycloRing(3)])
def test_inverse(ring):
    V = irrep(2, ring, 4)
    R = rmatrix(V, V)
    assert (R @ R.inverse()) == SeriesMatrix.identity((3, 3), ring, 4)


def test_tensor_module_is_a_representation():
    # [E, F] = [H]_q persists on V(1) (x) V(2) with the quantum coproduct
    K = 4
    T = tensor_module(irrep(1, QQ, K), irrep(2, QQ, K))
    comm = T.E @ T.F - T.F @ T.E
    expect = SeriesMatrix.diagonal((6,), QQ, K, [q_number_coeffs(w, K) for w in T.weights])
    assert comm == expect


perms = st.permutations([0, 1, 2])


@given(perms)
def test_reorder_legs_matches_swaps(perm):
    ring = QQ
    dims = (2, 2, 2)
    V = irrep(1, ring, 2)
    X = place_legs(rmatrix(V, V), (0, 1), dims) @ place_legs(kron(V.E, V.F), (1, 2), dims)
    Y = reorder_legs(X, perm)
    # dense check: new index (a_p) holds old index with digit perm[p] at position p
    A = X.coeff_dense(1)
    B = Y.coeff_dense(1)
    for i in range(8):
        for j in range(8):
            di = [(i >> (2 - p)) & 1 for p in range(3)]
            dj = [(j >> (2 - p)) & 1 for p in range(3)]
            oi = [0, 0, 0]
            oj = [0, 0, 0]
            for p in range(3):
                oi[perm[p]] = di[p]
                oj[perm[p]] = dj[p]
            assert B[i][j] == A[oi[0] * 4 + oi[1] * 2 + oi[2]][oj[0] * 4 + oj[1] * 2 + oj[2]]


def test_swap_is_involution():
    s = swap_matrix((3, 3), 0, 1, QQ, 2)
    assert s @ s == SeriesMatrix.identity((3, 3), QQ, 2)


def test_place_legs_rejects_bad_input():
    V = irrep(1, QQ, 1)
    R = rmatrix(V, V)
    with pytest.raises(ValueError):
        place_legs(R, (0, 0), (2, 2, 2))
    with pytest.raises(ValueError):
        place_legs(R, (0, 1), (3, 2, 2))


@given(st.lists(st.integers(-3, 3), min_size=16, max_size=16), st.lists(st.integers(-3, 3), min_size=16, max_size=16))
def test_trace_is_conjugation_invariant(a, b):
    ring = QQ
    A = SeriesMatrix.from_dense((4,), ring, [[a[4 * i : 4 * i + 4] for i in range(4)], [[0] * 4] * 4])
    U = SeriesMatrix.from_dense((4,), ring, [np.eye(4, dtype=int).tolist(), [b[4 * i : 4 * i + 4] for i in range(4)]])
    assert (U @ A @ U.inverse()).trace() == A.trace()
