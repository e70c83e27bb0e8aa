"""The base public-key scheme: trapdoored Vandermonde keys over GF(2^k).

A secret key is a random index set S of size s, n distinct field points
a_1..a_n, and the n x r matrix M whose row i holds the powers a_i..a_i^r,
except that rows inside S are cut off after power s/3. The public key
P = MR hides the cutoff behind a random determinant-one R. Encryption of
m is Px + m*1 + e with sparse noise e; decryption is an inner product
with a vector y supported on S.

y is the canonical solution of the constraint system that also defines
the decryption spaces: sum_i y_i (M_i tensor M_i) = 0, sum_i y_i M_i = 0,
sum_i y_i = 1, y zero off S. On S-rows every tensor or matrix entry is a
power a_i^t with t <= 2s/3, so the whole system collapses to the 2s/3
power equations plus the affine one. Both systems have the same row
space, and reduced row-echelon form depends only on the row space, so
solving the collapsed system yields exactly the canonical solution of
the raw one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, ParameterError, UsageError
from .field import FieldElement, FieldSpec, MODULI, random_distinct, random_elements, random_nonzero
from .linalg import (
    Matrix,
    Vector,
    dot_arrays,
    matmul_arrays,
    matvec_arrays,
    rank_array,
    rank_batch,
    random_unimodular_array,
    solve_canonical_array,
    vandermonde_array,
)


@dataclass(frozen=True)
class Params:
    """Scheme parameters; validated on construction.

    n: ciphertext length, r: randomness dimension, s: trapdoor size,
    eta: per-coordinate noise rate. alpha records the exponent the
    parameters were derived from, when they were derived at all.
    """

    n: int
    r: int
    s: int
    field: FieldSpec
    eta: float
    alpha: float | None = None

    def __post_init__(self):
        if self.s % 3 != 0 or self.s < 3:
            raise ParameterError(f"trapdoor size must be a positive multiple of 3, got {self.s}")
        if self.r < self.s:
            raise ParameterError(f"randomness dimension r={self.r} must be >= s={self.s}")
        if self.n < self.s:
            raise ParameterError(f"ciphertext length n={self.n} must be >= s={self.s}")
        if self.field.q < self.n:
            raise ParameterError(
                f"field size {self.field.q} is below n={self.n}; the scheme needs n distinct points"
            )
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"noise rate must lie in [0,1], got {self.eta}")


def params_from_alpha(n: int, alpha: float, k_cap: int = 64) -> Params:
    """Instantiate the single-exponent parameter family at length n.

    r = n^(1-alpha/8), s = n^(alpha/4), eta = n^-(1-alpha/4), all rounded;
    s is clamped to a multiple of 3 no smaller than 3. The field degree
    starts at ceil(n^alpha) capped at k_cap, then grows to the next
    built-in degree with q >= n, since n distinct points must exist.
    """
    if not 0 < alpha <= 0.25:
        raise ParameterError(f"alpha must lie in (0, 1/4], got {alpha}")
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    r = round(n ** (1 - alpha / 8))
    s = 3 * max(1, round(n ** (alpha / 4) / 3))
    eta = float(n ** -(1 - alpha / 4))
    k_want = min(int(np.ceil(n**alpha)), k_cap)
    k = None
    for deg in sorted(MODULI):
        if deg >= k_want and (1 << deg) >= n:
            k = deg
            break
    if k is None:
        raise ParameterError(f"no built-in field of degree <= 64 fits n={n} with alpha={alpha}")
    return Params(n=n, r=r, s=s, field=FieldSpec(k), eta=eta, alpha=alpha)


class SecretKey:
    """S, the point list a, the trapdoored matrix M, and the decryption vector."""

    __slots__ = ("S", "a", "M", "y_dec", "params")

    def __init__(self, S: tuple[int, ...], a: Vector, M: Matrix, y_dec: Vector, params: Params):
        self.S = S
        self.a = a
        self.M = M
        self.y_dec = y_dec
        self.params = params

    def __repr__(self):
        p = self.params
        return f"SecretKey(n={p.n}, r={p.r}, s={p.s}, k={p.field.k})"


class PublicKey:
    __slots__ = ("P", "params")

    def __init__(self, P: Matrix, params: Params):
        self.P = P
        self.params = params

    def __repr__(self):
        p = self.params
        return f"PublicKey(n={p.n}, r={p.r}, s={p.s}, k={p.field.k})"


class Ciphertext:
    __slots__ = ("v",)

    def __init__(self, v: Vector):
        self.v = v

    def __eq__(self, other):
        return isinstance(other, Ciphertext) and self.v == other.v

    def __repr__(self):
        return f"Ciphertext(n={self.v.len}, k={self.v.spec.k})"


def _decryption_support_vector(spec: FieldSpec, a_S: np.ndarray, s: int) -> np.ndarray:
    # Collapsed system: sum_i y_i a_i^t = 0 for t = 1..2s/3, sum_i y_i = 1.
    A = vandermonde_array(spec, a_S, 2 * s // 3).T
    A = np.concatenate([A, np.ones((1, s), dtype=spec.dtype)], axis=0)
    b = np.zeros(2 * s // 3 + 1, dtype=spec.dtype)
    b[-1] = 1
    y = solve_canonical_array(spec, np.ascontiguousarray(A), b)
    if y is None:
        raise ConstructionError("decryption system inconsistent; distinct points should prevent this")
    return y


def keygen(p: Params, rng: np.random.Generator) -> tuple[PublicKey, SecretKey]:
    """Sample a key pair: uniform S, distinct points, trapdoored M, P = MR."""
    spec = p.field
    S = np.sort(rng.choice(p.n, size=p.s, replace=False))
    a = random_distinct(spec, rng, p.n)
    M = vandermonde_array(spec, a, p.r)
    M[S, p.s // 3 :] = 0
    R = random_unimodular_array(spec, p.r, rng)
    P = matmul_arrays(spec, M, R)
    y = np.zeros(p.n, dtype=spec.dtype)
    y[S] = _decryption_support_vector(spec, a[S], p.s)
    sk = SecretKey(tuple(int(i) for i in S), Vector(spec, a), Matrix(spec, M), Vector(spec, y), p)
    return PublicKey(Matrix(spec, P), p), sk


# ---------------------------------------------------------------------------
# Noise and encryption.
# ---------------------------------------------------------------------------


def noise_array(p: Params, rng: np.random.Generator, shape, eta: float | None = None) -> np.ndarray:
    """Per-entry: zero with probability 1-eta, else uniform over the nonzeros."""
    rate = p.eta if eta is None else eta
    if not 0.0 <= rate <= 1.0:
        raise ParameterError(f"noise rate must lie in [0,1], got {rate}")
    hit = rng.random(shape) < rate
    vals = random_nonzero(p.field, rng, shape)
    return np.where(hit, vals, p.field.dtype(0))


def sample_noise(p: Params, rng: np.random.Generator) -> Vector:
    return Vector(p.field, noise_array(p, rng, p.n))


def encrypt_with(pk: PublicKey, m: FieldElement, x: Vector, e: Vector) -> Ciphertext:
    """Deterministic core: c = Px + m*1 + e."""
    p = pk.params
    if m.spec != p.field or x.spec != p.field or e.spec != p.field:
        raise UsageError("message, randomness, and noise must live in the key's field")
    if x.len != p.r:
        raise UsageError(f"randomness has length {x.len}, expected r={p.r}")
    if e.len != p.n:
        raise UsageError(f"noise has length {e.len}, expected n={p.n}")
    c = matvec_arrays(p.field, pk.P.data, x.data)
    c ^= p.field.dtype(m.value)
    c ^= e.data
    return Ciphertext(Vector(p.field, c))


def encrypt(pk: PublicKey, m: FieldElement, rng: np.random.Generator) -> Ciphertext:
    p = pk.params
    x = Vector(p.field, random_elements(p.field, rng, p.r))
    return encrypt_with(pk, m, x, sample_noise(p, rng))


def encrypt_batch(
    pk: PublicKey, ms: np.ndarray, rng: np.random.Generator, eta: float | None = None
) -> np.ndarray:
    """(T, n) ciphertext block for a (T,) message block; one fresh x, e per row."""
    p = pk.params
    ms = np.asarray(ms, dtype=p.field.dtype)
    T = ms.shape[0]
    X = random_elements(p.field, rng, (T, p.r))
    C = matvec_arrays(p.field, pk.P.data, X)
    C ^= ms[:, None]
    C ^= noise_array(p, rng, (T, p.n), eta=eta)
    return C


def decrypt(sk: SecretKey, c: Ciphertext) -> FieldElement:
    """<y, c>; correctness is probabilistic, the value is always defined."""
    spec = sk.params.field
    return FieldElement(spec, int(dot_arrays(spec, sk.y_dec.data, c.v.data)))


def decrypt_batch(sk: SecretKey, C: np.ndarray) -> np.ndarray:
    spec = sk.params.field
    return dot_arrays(spec, sk.y_dec.data[None, :], np.asarray(C, dtype=spec.dtype))


# ---------------------------------------------------------------------------
# Encryption-space membership.
# ---------------------------------------------------------------------------


def _restricted_basis(sk: SecretKey) -> np.ndarray:
    # Rows of M inside S, truncated to the s/3 live columns.
    p = sk.params
    S = np.asarray(sk.S)
    return sk.M.data[S][:, : p.s // 3]


def enc_membership_batch(sk: SecretKey, ms: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Row t is True iff C[t] is a noiseless-on-S encryption of ms[t].

    c = Mx + m*1 + f with f zero on S constrains only the S rows:
    (c - m*1) restricted to S must lie in the column space of M_S.
    """
    p = sk.params
    spec = p.field
    C = np.asarray(C, dtype=spec.dtype)
    ms = np.asarray(ms, dtype=spec.dtype)
    B = _restricted_basis(sk)
    base = rank_array(spec, B)
    v = C[:, np.asarray(sk.S)] ^ ms[:, None]
    aug = np.concatenate(
        [np.broadcast_to(B, (C.shape[0],) + B.shape), v[:, :, None]], axis=2
    )
    return rank_batch(spec, aug) == base


def enc_space_contains(sk: SecretKey, m: FieldElement, c: Ciphertext) -> bool:
    spec = sk.params.field
    ms = np.array([m.value], dtype=spec.dtype)
    return bool(enc_membership_batch(sk, ms, c.v.data[None, :])[0])


def dec_membership_batch(sk: SecretKey, ms: np.ndarray, C: np.ndarray) -> np.ndarray:
    spec = sk.params.field
    return decrypt_batch(sk, C) == np.asarray(ms, dtype=spec.dtype)


def dec_space_contains(sk: SecretKey, m: FieldElement, c: Ciphertext) -> bool:
    return decrypt(sk, c).value == m.value
