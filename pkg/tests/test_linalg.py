"""Linear algebra kernels against the naive references in gf_refs."""

import numpy as np
import pytest

from codehom.errors import ParameterError, UsageError
from codehom.field import FieldSpec, fe_pow, random_elements
from codehom.linalg import (
    Matrix,
    Vector,
    dot_arrays,
    identity_array,
    mat_vec_mul,
    matmul_arrays,
    matvec_arrays,
    random_unimodular,
    random_unimodular_array,
    rank,
    rank_array,
    rank_batch,
    rref_array,
    solve_canonical,
    solve_canonical_array,
    tensor_row,
    tensor_row_array,
    vandermonde_array,
    vandermonde_rows,
    vec_dot,
)

from gf_refs import ref_det, ref_matvec, ref_mul, ref_rank_by_span

F4 = FieldSpec(2)
F16 = FieldSpec(4)
F256 = FieldSpec(8)


def vec(spec, values):
    return Vector(spec, np.array(values, dtype=spec.dtype))


def mat(spec, rows):
    return Matrix(spec, np.array(rows, dtype=spec.dtype))


# --- products ------------------------------------------------------------------

def test_matvec_identity_and_zero():
    x = vec(F16, [3, 7, 12])
    I = Matrix(F16, identity_array(F16, 3))
    assert mat_vec_mul(I, x) == x
    zero_y = vec(F16, [0, 0, 0])
    assert vec_dot(zero_y, x).value == 0


def test_char2_ones_matrix():
    # all-ones 2x2 times (a, a) gives (a+a, a+a) = 0
    a = 9
    M = mat(F16, [[1, 1], [1, 1]])
    out = mat_vec_mul(M, vec(F16, [a, a]))
    assert out.data.tolist() == [0, 0]


def test_matvec_matches_reference():
    rng = np.random.default_rng(21)
    for _ in range(20):
        m, n = rng.integers(1, 7, size=2)
        A = random_elements(F256, rng, (m, n))
        x = random_elements(F256, rng, n)
        got = matvec_arrays(F256, A, x)
        want = ref_matvec(A.tolist(), x.tolist(), F256.modulus)
        assert got.tolist() == want


def test_matmul_matches_composition():
    rng = np.random.default_rng(22)
    A = random_elements(F256, rng, (5, 4))
    B = random_elements(F256, rng, (4, 6))
    x = random_elements(F256, rng, 6)
    lhs = matvec_arrays(F256, matmul_arrays(F256, A, B), x)
    rhs = matvec_arrays(F256, A, matvec_arrays(F256, B, x))
    assert np.array_equal(lhs, rhs)


def test_matmul_batched():
    rng = np.random.default_rng(23)
    A = random_elements(F16, rng, (10, 3, 4))
    B = random_elements(F16, rng, (10, 4, 2))
    out = matmul_arrays(F16, A, B)
    assert out.shape == (10, 3, 2)
    for t in range(10):
        assert np.array_equal(out[t], matmul_arrays(F16, A[t], B[t]))


def test_dimension_mismatch():
    with pytest.raises(UsageError):
        mat_vec_mul(mat(F16, [[1, 2]]), vec(F16, [1, 2, 3]))
    with pytest.raises(UsageError):
        vec_dot(vec(F16, [1]), vec(F16, [1, 2]))
    with pytest.raises(UsageError):
        vec_dot(vec(F16, [1]), vec(F4, [1]))


# --- rank ----------------------------------------------------------------------

def test_rank_trivial_cases():
    assert rank(mat(F16, [[0, 0], [0, 0], [0, 0]])) == 0
    assert rank(mat(F16, [[1, 2], [1, 2], [3, 4]])) == 2  # repeated row
    pts = [F16.element(v) for v in (2, 3, 7, 11)]
    assert rank(vandermonde_rows(pts, 4)) == 4


def test_rank_matches_span_enumeration():
    rng = np.random.default_rng(31)
    for _ in range(40):
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        A = random_elements(F4, rng, (m, n))
        got = rank_array(F4, A)
        want = ref_rank_by_span(A.tolist(), F4.q, F4.modulus)
        assert got == want, A


def test_rank_batch_matches_scalar():
    rng = np.random.default_rng(32)
    stack = random_elements(F16, rng, (50, 6, 5))
    stack[7, 3] = stack[7, 1]          # force some deficiency
    stack[12] = 0
    stack[20, :, 2] = 0
    got = rank_batch(F16, stack)
    for t in range(50):
        assert got[t] == rank_array(F16, stack[t]), t


def test_rank_invariant_under_unimodular():
    rng = np.random.default_rng(33)
    for _ in range(10):
        A = random_elements(F256, rng, (6, 4))
        A[3] = A[0]  # make it interesting
        R = random_unimodular_array(F256, 4, rng)
        assert rank_array(F256, A) == rank_array(F256, matmul_arrays(F256, A, R))


# --- solving -------------------------------------------------------------------

def test_solve_identity():
    b = vec(F16, [5, 9, 1])
    I = Matrix(F16, identity_array(F16, 3))
    assert solve_canonical(I, b) == b


def test_solve_free_variable_zeroed():
    # [1 1] y = [1] over GF(4): pivot on y_0, free y_1 = 0
    y = solve_canonical(mat(F4, [[1, 1]]), vec(F4, [1]))
    assert y.data.tolist() == [1, 0]


def test_solve_inconsistent():
    A = mat(F16, [[1, 2], [1, 2]])
    b = vec(F16, [3, 4])
    assert solve_canonical(A, b) is None


def test_solve_satisfies_system():
    rng = np.random.default_rng(41)
    for _ in range(30):
        m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        A = random_elements(F256, rng, (m, n))
        y0 = random_elements(F256, rng, n)
        b = matvec_arrays(F256, A, y0)
        y = solve_canonical_array(F256, A, b)
        assert y is not None
        assert ref_matvec(A.tolist(), y.tolist(), F256.modulus) == b.tolist()


def test_solve_deterministic():
    rng = np.random.default_rng(42)
    A = random_elements(F256, rng, (4, 9))
    b = matvec_arrays(F256, A, random_elements(F256, rng, 9))
    y1 = solve_canonical_array(F256, A, b)
    y2 = solve_canonical_array(F256, A.copy(), b.copy())
    assert np.array_equal(y1, y2)


def test_rref_shape_properties():
    rng = np.random.default_rng(43)
    A = random_elements(F16, rng, (5, 7))
    R, pivots = rref_array(F16, A)
    for i, c in enumerate(pivots):
        col = R[:, c]
        assert col[i] == 1 and np.count_nonzero(col) == 1
    assert rank_array(F16, R) == len(pivots) == rank_array(F16, A)


# --- vandermonde and tensor ----------------------------------------------------

def test_vandermonde_frozen_gf4():
    g = F4.gamma                       # gamma^4 = gamma, order 3
    M = vandermonde_rows([g, g * g], 2)
    assert M.data.tolist() == [[2, 3], [3, 2]]


def test_vandermonde_powers_start_at_one():
    pts = [F256.element(v) for v in (3, 5, 17)]
    M = vandermonde_rows(pts, 4)
    assert M.cols == 4
    for i, p in enumerate(pts):
        for j in range(4):
            assert M.entry(i, j).value == fe_pow(p, j + 1).value
    col1 = vandermonde_rows(pts, 1)
    assert col1.data[:, 0].tolist() == [3, 5, 17]


def test_vandermonde_rejects_repeats():
    with pytest.raises(UsageError):
        vandermonde_rows([F16.element(3), F16.element(3)], 2)
    with pytest.raises(ParameterError):
        vandermonde_array(F16, np.array([1], dtype=F16.dtype), 0)


def test_tensor_row_basics():
    assert tensor_row(vec(F16, [0, 0])).data.tolist() == [0, 0, 0, 0]
    assert tensor_row(vec(F16, [1])).data.tolist() == [1]
    a = F256.element(7)
    v = Vector.from_entries([a, a * a])
    t = tensor_row(v)
    assert [e.value for e in t.entries] == [
        fe_pow(a, 2).value, fe_pow(a, 3).value, fe_pow(a, 3).value, fe_pow(a, 4).value,
    ]


def test_tensor_of_vandermonde_row_is_power_range():
    # row (a, ..., a^w) tensored with itself covers exactly a^2 .. a^2w
    a = F256.element(29)
    w = 5
    row = np.array([fe_pow(a, j + 1).value for j in range(w)], dtype=F256.dtype)
    t = tensor_row_array(F256, row)
    want = {fe_pow(a, e).value for e in range(2, 2 * w + 1)}
    assert set(t.tolist()) == want


# --- unimodular sampling -------------------------------------------------------

def test_unimodular_r1():
    rng = np.random.default_rng(51)
    M = random_unimodular(F16, 1, rng)
    assert M.data.tolist() == [[1]]


def test_unimodular_det_one_100_seeds():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        M = random_unimodular_array(F16, 4, rng)
        assert ref_det(M.tolist(), F16.modulus) == 1
        assert rank_array(F16, M) == 4


def test_unimodular_rejects_bad_size():
    with pytest.raises(ParameterError):
        random_unimodular(F16, 0, np.random.default_rng(0))


# --- wrapper hygiene -----------------------------------------------------------

def test_from_entries_validation():
    with pytest.raises(UsageError):
        Vector.from_entries([])
    with pytest.raises(UsageError):
        Vector.from_entries([F4.element(1), F16.element(1)])
    with pytest.raises(UsageError):
        Matrix.from_entries(2, 2, [F16.element(1)] * 3)
    M = Matrix.from_entries(2, 3, [F16.element(v) for v in range(6)])
    assert (M.rows, M.cols) == (2, 3)
    assert [e.value for e in M.entries] == [0, 1, 2, 3, 4, 5]


def test_dot_arrays_batched():
    rng = np.random.default_rng(61)
    a = random_elements(F256, rng, (8, 5))
    b = random_elements(F256, rng, (8, 5))
    out = dot_arrays(F256, a, b)
    assert out.shape == (8,)
    for t in range(8):
        acc = 0
        for j in range(5):
            acc ^= ref_mul(int(a[t, j]), int(b[t, j]), F256.modulus)
        assert int(out[t]) == acc
