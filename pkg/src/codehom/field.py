"""Arithmetic in binary extension fields GF(2^k).

Elements are stored as integer bit patterns: bit j of the value is the
coefficient of gamma^j, where gamma is the residue of the indeterminate in
F_2[x]/(modulus). Scalar work goes through FieldElement; bulk work goes
through the *_arrays kernels, which operate on numpy integer arrays and
carry no per-element Python overhead.

Multiplication uses log/exp tables for k <= 16 and a shift-and-reduce bit
loop above that. Tables are cached per (k, modulus).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UsageError

# Irreducible moduli over F_2, degree k, leading coefficient included.
MODULI = {
    2: 0b111,                    # x^2 + x + 1
    4: 0x13,                     # x^4 + x + 1
    8: 0x11B,                    # x^8 + x^4 + x^3 + x + 1
    16: 0x1100B,                 # x^16 + x^12 + x^3 + x + 1
    32: 0x100400007,             # x^32 + x^22 + x^2 + x + 1
    64: 0x1000000000000001B,     # x^64 + x^4 + x^3 + x + 1
}

_TABLE_LIMIT = 16   # largest k that gets log/exp tables
_VERIFY_LIMIT = 32  # largest caller-supplied degree that is checked

_table_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
_verified: set[tuple[int, int]] = set()


def _dtype_for(k: int):
    if k <= 8:
        return np.uint8
    if k <= 16:
        return np.uint16
    if k <= 32:
        return np.uint32
    return np.uint64


def _scalar_mul(a: int, b: int, k: int, modulus: int) -> int:
    # Shift-and-reduce on Python ints; reference path and table builder.
    r = 0
    top = 1 << k
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= modulus
    return r


def _poly_mod(a: int, b: int) -> int:
    db = b.bit_length() - 1
    while a.bit_length() - 1 >= db and a:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _is_irreducible(modulus: int, k: int) -> bool:
    """Exhaustive divisor check: no factor of degree 1..k//2."""
    if modulus.bit_length() - 1 != k:
        return False
    for g in range(2, 1 << (k // 2 + 1)):
        if _poly_mod(modulus, g) == 0:
            return False
    return True


def _build_tables(k: int, modulus: int) -> tuple[np.ndarray, np.ndarray]:
    q = 1 << k
    dtype = _dtype_for(k)
    if q == 2:  # trivial multiplicative group
        return np.array([1], dtype=dtype), np.zeros(2, dtype=np.int32)
    # Find a multiplicative generator by walking its powers; the walk fills
    # the exp table. Aborts early when the candidate's order is proper.
    for g in range(2, q):
        exp = np.zeros(2 * q - 3, dtype=dtype)
        t = 1
        ok = True
        for i in range(q - 1):
            exp[i] = t
            t = _scalar_mul(t, g, k, modulus)
            if t == 1 and i < q - 2:
                ok = False
                break
        if ok and t == 1:
            exp[q - 1:] = exp[: q - 2]  # doubled table: exp[i] = g^(i mod q-1)
            log = np.zeros(q, dtype=np.int32)
            log[exp[: q - 1]] = np.arange(q - 1, dtype=np.int32)
            return exp, log
    raise ParameterError(f"no generator found; modulus {modulus:#x} is not irreducible")


class FieldSpec:
    """A binary extension field GF(2^k) with a fixed irreducible modulus.

    Immutable. Two specs compare equal iff they have the same (k, modulus).
    """

    __slots__ = ("k", "modulus", "q", "dtype", "_exp", "_log")

    def __init__(self, k: int, modulus: int | None = None):
        if k < 1:
            raise ParameterError(f"extension degree must be >= 1, got {k}")
        if modulus is None:
            if k not in MODULI:
                raise ParameterError(
                    f"no built-in modulus for k={k}; supply one "
                    f"(built-in degrees: {sorted(MODULI)})"
                )
            modulus = MODULI[k]
        else:
            if modulus.bit_length() - 1 != k:
                raise ParameterError(
                    f"modulus {modulus:#x} has degree {modulus.bit_length() - 1}, expected {k}"
                )
            if modulus != MODULI.get(k) and k <= _VERIFY_LIMIT:
                key = (k, modulus)
                if key not in _verified:
                    if not _is_irreducible(modulus, k):
                        raise ParameterError(f"modulus {modulus:#x} is reducible")
                    _verified.add(key)
        self.k = k
        self.modulus = modulus
        self.q = 1 << k
        self.dtype = _dtype_for(k)
        if k <= _TABLE_LIMIT:
            key = (k, modulus)
            if key not in _table_cache:
                _table_cache[key] = _build_tables(k, modulus)
            self._exp, self._log = _table_cache[key]
        else:
            self._exp = self._log = None

    def __eq__(self, other):
        return (
            isinstance(other, FieldSpec)
            and self.k == other.k
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.k, self.modulus))

    def __repr__(self):
        return f"FieldSpec(k={self.k}, modulus={self.modulus:#x})"

    @property
    def gamma(self) -> "FieldElement":
        """The residue of the indeterminate; an F_2-generator of the field."""
        return FieldElement(self, 2 if self.k > 1 else 1)

    @property
    def hex_digits(self) -> int:
        return (self.k + 3) // 4

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, value)

    def zero(self) -> "FieldElement":
        return FieldElement(self, 0)

    def one(self) -> "FieldElement":
        return FieldElement(self, 1)

    def from_hex(self, s: str) -> "FieldElement":
        if len(s) != self.hex_digits:
            raise UsageError(f"expected {self.hex_digits} hex digits, got {len(s)}")
        return FieldElement(self, int(s, 16))


@dataclass(frozen=True)
class FieldElement:
    """A single element of GF(2^k), canonical (fully reduced)."""

    spec: FieldSpec
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.spec.q:
            raise UsageError(f"value {self.value} outside field of size {self.spec.q}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        _check_same(self, other)
        return FieldElement(self.spec, self.value ^ other.value)

    __sub__ = __add__  # characteristic 2

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        _check_same(self, other)
        return FieldElement(
            self.spec,
            _scalar_mul(self.value, other.value, self.spec.k, self.spec.modulus),
        )

    def __pow__(self, e: int) -> "FieldElement":
        return fe_pow(self, e)

    def __bool__(self):
        return self.value != 0

    def hex(self) -> str:
        return format(self.value, f"0{self.spec.hex_digits}x")

    def __repr__(self):
        return f"FieldElement({self.hex()})"


def _check_same(a: FieldElement, b: FieldElement):
    if a.spec != b.spec:
        raise UsageError("operands come from different fields")


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    """a + b; coefficientwise XOR in characteristic 2."""
    return a + b


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    """Polynomial product reduced modulo the field modulus."""
    return a * b


def fe_inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse; raises ZeroDivisionError on zero."""
    if a.value == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    spec = a.spec
    if spec._log is not None:
        return FieldElement(spec, int(spec._exp[(spec.q - 1) - int(spec._log[a.value])]))
    return fe_pow(a, spec.q - 2)


def fe_pow(a: FieldElement, e: int) -> FieldElement:
    """a^e by square-and-multiply; 0^0 is defined as 1."""
    if e < 0:
        raise UsageError("negative exponent; invert explicitly instead")
    spec = a.spec
    result, base = 1, a.value
    while e:
        if e & 1:
            result = _scalar_mul(result, base, spec.k, spec.modulus)
        base = _scalar_mul(base, base, spec.k, spec.modulus)
        e >>= 1
    return FieldElement(spec, result)


def fe_decompose(a: FieldElement) -> list[int]:
    """Bits (y_0, ..., y_(k-1)) with a = sum gamma^j y_j, least significant first."""
    return [(a.value >> j) & 1 for j in range(a.spec.k)]


def fe_recompose(spec: FieldSpec, bits) -> FieldElement:
    """Inverse of fe_decompose; requires exactly k bits."""
    bits = list(bits)
    if len(bits) != spec.k:
        raise UsageError(f"expected {spec.k} bits, got {len(bits)}")
    value = 0
    for j, b in enumerate(bits):
        if b not in (0, 1):
            raise UsageError(f"bit {j} is {b!r}, expected 0 or 1")
        value |= b << j
    return FieldElement(spec, value)


# ---------------------------------------------------------------------------
# Array kernels. All take/return numpy arrays of the spec's dtype and
# broadcast like the underlying numpy ops.
# ---------------------------------------------------------------------------

def add_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_xor(a, b)


def mul_arrays(spec: FieldSpec, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=spec.dtype)
    b = np.asarray(b, dtype=spec.dtype)
    if spec._log is not None:
        out = spec._exp[spec._log[a] + spec._log[b]]
        zero = (a == 0) | (b == 0)
        return np.where(zero, spec.dtype(0), out)
    return _mul_bitloop(spec, a, b)


def _mul_bitloop(spec: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.broadcast_arrays(a, b)
    acc = np.zeros(a.shape, dtype=spec.dtype)
    aa = a.copy()
    bb = b.copy()
    qmask = spec.dtype(spec.q - 1) if spec.k < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    top = spec.dtype(1 << (spec.k - 1))
    modlow = spec.dtype(spec.modulus & (spec.q - 1))
    zero = spec.dtype(0)
    one = spec.dtype(1)
    for _ in range(spec.k):
        acc ^= np.where((bb & one).astype(bool), aa, zero)
        carry = (aa & top) != 0
        aa = ((aa << one) & qmask) ^ np.where(carry, modlow, zero)
        bb = bb >> one
    return acc


def inv_arrays(spec: FieldSpec, a) -> np.ndarray:
    a = np.asarray(a, dtype=spec.dtype)
    if np.any(a == 0):
        raise ZeroDivisionError("zero has no multiplicative inverse")
    if spec._log is not None:
        return spec._exp[(spec.q - 1) - spec._log[a]]
    return pow_arrays(spec, a, spec.q - 2)


def pow_arrays(spec: FieldSpec, a, e: int) -> np.ndarray:
    """Elementwise a^e; 0^0 is 1."""
    a = np.asarray(a, dtype=spec.dtype)
    result = np.ones(a.shape, dtype=spec.dtype)
    base = a.copy()
    while e:
        if e & 1:
            result = mul_arrays(spec, result, base)
        base = mul_arrays(spec, base, base)
        e >>= 1
    return result


def random_elements(spec: FieldSpec, rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, spec.q, size=shape, dtype=spec.dtype, endpoint=False)


def random_nonzero(spec: FieldSpec, rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(1, spec.q, size=shape, dtype=spec.dtype, endpoint=False)


def random_distinct(spec: FieldSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """n distinct field elements, sampled without replacement by rejection."""
    if n > spec.q:
        raise ParameterError(f"cannot draw {n} distinct elements from a field of size {spec.q}")
    out = np.empty(n, dtype=spec.dtype)
    seen: set[int] = set()
    have = 0
    while have < n:
        batch = rng.integers(0, spec.q, size=n - have + 8, dtype=spec.dtype)
        for v in batch:
            iv = int(v)
            if iv not in seen:
                seen.add(iv)
                out[have] = v
                have += 1
                if have == n:
                    break
    return out


def random_distinct_batch(
    spec: FieldSpec, rng: np.random.Generator, trials: int, n: int
) -> np.ndarray:
    """(trials, n) array; each row is a without-replacement sample.

    Rows containing a collision are redrawn wholesale, which leaves the
    per-row distribution exactly uniform over injective tuples.
    """
    if n > spec.q:
        raise ParameterError(f"cannot draw {n} distinct elements from a field of size {spec.q}")
    out = rng.integers(0, spec.q, size=(trials, n), dtype=spec.dtype)
    while True:
        srt = np.sort(out, axis=1)
        bad = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        if not bad.any():
            return out
        out[bad] = rng.integers(0, spec.q, size=(int(bad.sum()), n), dtype=spec.dtype)
