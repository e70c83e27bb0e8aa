"""Pointwise ciphertext operations.

Addition of two valid encryptions is again a valid encryption. The
pointwise product is weaker: it decrypts to the product but lands outside
the encryption space (the noiseless part picks up tensor structure the
key matrix cannot express), which is exactly what reencryption repairs.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .field import FieldElement, mul_arrays
from .linalg import Vector
from .scheme import Ciphertext, PublicKey


def _check_pair(c: Ciphertext, d: Ciphertext):
    if c.v.spec != d.v.spec:
        raise UsageError("ciphertexts come from different fields")
    if c.v.len != d.v.len:
        raise UsageError(f"ciphertext lengths differ: {c.v.len} vs {d.v.len}")


def ct_add(c: Ciphertext, d: Ciphertext) -> Ciphertext:
    """Pointwise sum; maps Enc(m) x Enc(m') into Enc(m + m')."""
    _check_pair(c, d)
    return Ciphertext(Vector(c.v.spec, c.v.data ^ d.v.data))


def ct_mul(c: Ciphertext, d: Ciphertext) -> Ciphertext:
    """Pointwise product; maps Enc(m) x Enc(m') into Dec(m·m') only."""
    _check_pair(c, d)
    spec = c.v.spec
    return Ciphertext(Vector(spec, mul_arrays(spec, c.v.data, d.v.data)))


def ct_scale(gamma: FieldElement, c: Ciphertext) -> Ciphertext:
    """Pointwise scalar multiple; maps Enc(m) into Enc(gamma·m)."""
    spec = c.v.spec
    if gamma.spec != spec:
        raise UsageError("scalar comes from a different field")
    return Ciphertext(Vector(spec, mul_arrays(spec, c.v.data, spec.dtype(gamma.value))))


def const_ct(pk: PublicKey, m: FieldElement) -> Ciphertext:
    """The trivial encryption m·1: zero randomness, zero noise."""
    p = pk.params
    if m.spec != p.field:
        raise UsageError("message comes from a different field")
    return Ciphertext(Vector(p.field, np.full(p.n, m.value, dtype=p.field.dtype)))
