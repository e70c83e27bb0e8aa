"""Dense linear algebra over GF(2^k).

Two layers. The array kernels at the bottom work on raw numpy arrays and
carry the batch dimensions used by the experiment harnesses (a stack of
trial matrices is eliminated in lockstep). The Matrix/Vector wrappers on
top hold a FieldSpec next to the data and are what the scheme-level code
passes around.

Elimination pivots deterministically: first nonzero entry scanning
left-to-right, top-to-bottom. solve_canonical returns the unique solution
with that pivot choice and every free variable set to zero, so repeated
calls on the same system agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, UsageError
from .field import FieldElement, FieldSpec, inv_arrays, mul_arrays, random_elements

# ---------------------------------------------------------------------------
# Array kernels.
# ---------------------------------------------------------------------------


def matmul_arrays(spec: FieldSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix product over F_q; leading batch dimensions broadcast."""
    A = np.asarray(A, dtype=spec.dtype)
    B = np.asarray(B, dtype=spec.dtype)
    if A.shape[-1] != B.shape[-2]:
        raise UsageError(f"inner dimensions differ: {A.shape[-1]} vs {B.shape[-2]}")
    batch = np.broadcast_shapes(A.shape[:-2], B.shape[:-2])
    out = np.zeros(batch + (A.shape[-2], B.shape[-1]), dtype=spec.dtype)
    for t in range(A.shape[-1]):  # contraction loop; each step is one table gather
        out ^= mul_arrays(spec, A[..., :, t, None], B[..., t, None, :])
    return out


def matvec_arrays(spec: FieldSpec, A: np.ndarray, x: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=spec.dtype)
    x = np.asarray(x, dtype=spec.dtype)
    if A.shape[-1] != x.shape[-1]:
        raise UsageError(f"matrix has {A.shape[-1]} columns, vector has {x.shape[-1]}")
    return dot_arrays(spec, A, x[..., None, :])


def dot_arrays(spec: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inner product along the last axis; XOR is the field sum."""
    prod = mul_arrays(spec, a, b)
    return np.bitwise_xor.reduce(prod, axis=-1)


def identity_array(spec: FieldSpec, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=spec.dtype)
    np.fill_diagonal(out, 1)
    return out


def rank_array(spec: FieldSpec, A: np.ndarray) -> int:
    R = np.array(A, dtype=spec.dtype, copy=True)
    m, n = R.shape
    pr = 0
    for c in range(n):
        if pr == m:
            break
        nz = np.nonzero(R[pr:, c])[0]
        if nz.size == 0:
            continue
        r = pr + int(nz[0])
        if r != pr:
            R[[pr, r]] = R[[r, pr]]
        below = R[pr + 1 :, c]
        if below.size:
            factors = mul_arrays(spec, below, inv_arrays(spec, R[pr, c : c + 1]))
            R[pr + 1 :] ^= mul_arrays(spec, factors[:, None], R[pr][None, :])
        pr += 1
    return pr


def rank_batch(spec: FieldSpec, A: np.ndarray) -> np.ndarray:
    """Row ranks of a (trials, m, n) stack, eliminated in lockstep.

    Per-trial pivot choice matches rank_array exactly; trials whose pivot
    column is empty simply sit out that round.
    """
    A = np.array(A, dtype=spec.dtype, copy=True)
    T, m, n = A.shape
    pr = np.zeros(T, dtype=np.int64)
    rows = np.arange(m)
    for c in range(n):
        if (pr == m).all():
            break
        candidates = (A[:, :, c] != 0) & (rows[None, :] >= pr[:, None])
        has = candidates.any(axis=1)
        if not has.any():
            continue
        t = np.nonzero(has)[0]
        r1 = pr[t]
        r2 = candidates[t].argmax(axis=1)
        tmp = A[t, r1].copy()
        A[t, r1] = A[t, r2]
        A[t, r2] = tmp
        factors = mul_arrays(spec, A[t, :, c], inv_arrays(spec, A[t, r1, c])[:, None])
        factors = np.where(rows[None, :] > r1[:, None], factors, spec.dtype(0))
        A[t] ^= mul_arrays(spec, factors[:, :, None], A[t, r1][:, None, :])
        pr[t] += 1
    return pr


def rref_array(spec: FieldSpec, A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form and the pivot column list."""
    R = np.array(A, dtype=spec.dtype, copy=True)
    m, n = R.shape
    pivots: list[int] = []
    pr = 0
    for c in range(n):
        if pr == m:
            break
        nz = np.nonzero(R[pr:, c])[0]
        if nz.size == 0:
            continue
        r = pr + int(nz[0])
        if r != pr:
            R[[pr, r]] = R[[r, pr]]
        R[pr] = mul_arrays(spec, R[pr], inv_arrays(spec, R[pr, c : c + 1]))
        others = R[:, c].copy()
        others[pr] = 0
        R ^= mul_arrays(spec, others[:, None], R[pr][None, :])
        pivots.append(c)
        pr += 1
    return R, pivots


def solve_canonical_array(spec: FieldSpec, A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Canonical solution of Ay = b, or None when inconsistent.

    Canonical means: RREF with the deterministic pivot rule, free
    variables zeroed. Same (A, b) always gives the same y.
    """
    A = np.asarray(A, dtype=spec.dtype)
    b = np.asarray(b, dtype=spec.dtype)
    if A.shape[0] != b.shape[0]:
        raise UsageError(f"system has {A.shape[0]} rows but {b.shape[0]} right-hand values")
    n = A.shape[1]
    R, pivots = rref_array(spec, np.concatenate([A, b[:, None]], axis=1))
    if pivots and pivots[-1] == n:  # pivot in the augmented column
        return None
    y = np.zeros(n, dtype=spec.dtype)
    for i, c in enumerate(pivots):
        y[c] = R[i, n]
    return y


def vandermonde_array(spec: FieldSpec, points: np.ndarray, width: int) -> np.ndarray:
    """Rows (a, a^2, ..., a^width); trailing batch shape of points is kept.

    Powers start at 1, not 0: the constant column never appears.
    """
    if width < 1:
        raise ParameterError(f"width must be >= 1, got {width}")
    points = np.asarray(points, dtype=spec.dtype)
    out = np.empty(points.shape + (width,), dtype=spec.dtype)
    out[..., 0] = points
    for j in range(1, width):
        out[..., j] = mul_arrays(spec, out[..., j - 1], points)
    return out


def tensor_row_array(spec: FieldSpec, v: np.ndarray) -> np.ndarray:
    """Entry (j,l) of the result is v_j * v_l, row-major; handles batches."""
    v = np.asarray(v, dtype=spec.dtype)
    n = v.shape[-1]
    out = mul_arrays(spec, v[..., :, None], v[..., None, :])
    return out.reshape(v.shape[:-1] + (n * n,))


def random_unimodular_array(spec: FieldSpec, r: int, rng: np.random.Generator) -> np.ndarray:
    """Random determinant-one matrix: L · U · P.

    L and U are random unitriangular, P a permutation matrix. det(P) = 1
    because -1 = 1 in characteristic 2. Not uniform over the full
    determinant-one group; nothing downstream is sensitive to that.
    """
    if r < 1:
        raise ParameterError(f"matrix size must be >= 1, got {r}")
    L = identity_array(spec, r)
    U = identity_array(spec, r)
    il, jl = np.tril_indices(r, -1)
    iu, ju = np.triu_indices(r, 1)
    L[il, jl] = random_elements(spec, rng, il.size)
    U[iu, ju] = random_elements(spec, rng, iu.size)
    P = np.zeros((r, r), dtype=spec.dtype)
    P[np.arange(r), rng.permutation(r)] = 1
    return matmul_arrays(spec, matmul_arrays(spec, L, U), P)


# ---------------------------------------------------------------------------
# Wrappers.
# ---------------------------------------------------------------------------


class Vector:
    """A vector over one field; thin shell around a 1-D numpy array."""

    __slots__ = ("spec", "data")

    def __init__(self, spec: FieldSpec, data):
        data = np.asarray(data, dtype=spec.dtype)
        if data.ndim != 1:
            raise UsageError(f"vector data must be 1-D, got shape {data.shape}")
        self.spec = spec
        self.data = data

    @classmethod
    def from_entries(cls, entries) -> "Vector":
        entries = list(entries)
        if not entries:
            raise UsageError("empty vector")
        spec = entries[0].spec
        if any(e.spec != spec for e in entries):
            raise UsageError("entries come from different fields")
        return cls(spec, np.array([e.value for e in entries], dtype=spec.dtype))

    @property
    def len(self) -> int:
        return self.data.shape[0]

    @property
    def entries(self) -> list[FieldElement]:
        return [FieldElement(self.spec, int(v)) for v in self.data]

    def entry(self, i: int) -> FieldElement:
        return FieldElement(self.spec, int(self.data[i]))

    def __len__(self):
        return self.data.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, Vector)
            and self.spec == other.spec
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"Vector(len={self.len}, k={self.spec.k})"


class Matrix:
    """A row-major matrix over one field; thin shell around a 2-D numpy array."""

    __slots__ = ("spec", "data")

    def __init__(self, spec: FieldSpec, data):
        data = np.asarray(data, dtype=spec.dtype)
        if data.ndim != 2:
            raise UsageError(f"matrix data must be 2-D, got shape {data.shape}")
        self.spec = spec
        self.data = data

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "Matrix":
        entries = list(entries)
        if len(entries) != rows * cols:
            raise UsageError(f"expected {rows * cols} entries, got {len(entries)}")
        if not entries:
            raise UsageError("empty matrix")
        spec = entries[0].spec
        if any(e.spec != spec for e in entries):
            raise UsageError("entries come from different fields")
        flat = np.array([e.value for e in entries], dtype=spec.dtype)
        return cls(spec, flat.reshape(rows, cols))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def entries(self) -> list[FieldElement]:
        return [FieldElement(self.spec, int(v)) for v in self.data.reshape(-1)]

    def entry(self, i: int, j: int) -> FieldElement:
        return FieldElement(self.spec, int(self.data[i, j]))

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.spec == other.spec
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols}, k={self.spec.k})"


def _check_field(a, b):
    if a.spec != b.spec:
        raise UsageError("operands come from different fields")


def mat_vec_mul(M: Matrix, x: Vector) -> Vector:
    """M·x over F_q."""
    _check_field(M, x)
    if M.cols != x.len:
        raise UsageError(f"matrix has {M.cols} columns, vector has {x.len}")
    return Vector(M.spec, matvec_arrays(M.spec, M.data, x.data))


def vec_dot(y: Vector, c: Vector) -> FieldElement:
    """Inner product ⟨y, c⟩."""
    _check_field(y, c)
    if y.len != c.len:
        raise UsageError(f"vectors have lengths {y.len} and {c.len}")
    return FieldElement(y.spec, int(dot_arrays(y.spec, y.data, c.data)))


def rank(M: Matrix) -> int:
    """Row rank by Gaussian elimination with first-nonzero pivoting."""
    return rank_array(M.spec, M.data)


def solve_canonical(A: Matrix, b: Vector) -> Vector | None:
    """Canonical solution of Ay = b (free variables zero); None if inconsistent."""
    _check_field(A, b)
    y = solve_canonical_array(A.spec, A.data, b.data)
    return None if y is None else Vector(A.spec, y)


def vandermonde_rows(points, width: int) -> Matrix:
    """Matrix with row i = (a_i, a_i^2, ..., a_i^width); points must be distinct."""
    pts = Vector.from_entries(points)
    if len(set(pts.data.tolist())) != pts.len:
        raise UsageError("points must be distinct")
    return Matrix(pts.spec, vandermonde_array(pts.spec, pts.data, width))


def tensor_row(v: Vector) -> Vector:
    """Tensor square of v: the len^2 vector with entry (j,l) = v_j·v_l."""
    return Vector(v.spec, tensor_row_array(v.spec, v.data))


def random_unimodular(spec: FieldSpec, r: int, rng: np.random.Generator) -> Matrix:
    """Random r×r matrix with determinant one."""
    return Matrix(spec, random_unimodular_array(spec, r, rng))
