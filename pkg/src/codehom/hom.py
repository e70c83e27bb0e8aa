"""Replicated layered scheme: k-part ciphertexts, boosted between levels.

A message is encrypted k times independently; decryption is a plurality
vote over the per-part decryptions, so up to half the parts can rot
before the answer moves. Gate operations act pointwise on parts and
degrade them from the strict encryption space (31k/32 good parts) to
the decodable one (15k/16); Boost is the repair step, recomputing every
part as an expander-routed approximate majority of the others while
moving the whole bundle to the next level key.

Evaluation follows the template: inputs are boosted into level 1,
layer-j gates run at level j, and each layer's results are boosted to
level j+1, except that a circuit using all d layers runs its last layer
bare, landing in the decodable space of level d, where the final-level
secret key votes just as well.

Addition of parts is itself only proto-homomorphic here (two 31/32
bundles XOR to a 15/16 one), so by default XOR layers burn a boost
level exactly like multiplicative ones. `count_xor=False` lets XORs
ride within a level instead; each unboosted XOR roughly doubles the
per-part defect rate, eating into the 15/16 decoding margin, so stacks
of them trade key depth against that budget.

Messages entering evaluation must be bits: the majority tree only
reproduces values fixed by G(v, v) = 1 + v*v, which pins 0 and 1.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UsageError
from .booster import boost_arrays, boost_aux_gen, build_expander
from .circuit import MULT_KINDS, Circuit, Gate, LayeredCircuit, build_apxmaj
from .field import FieldElement, FieldSpec
from .linalg import Vector
from .reencrypt import _mul_any, _xor_any
from .scheme import (
    Ciphertext,
    Params,
    SecretKey,
    dec_membership_batch,
    decrypt_batch,
    enc_membership_batch,
    encrypt_batch,
    keygen,
)


def enc_k_threshold(k: int) -> int:
    return -(-31 * k // 32)


def dec_k_threshold(k: int) -> int:
    return -(-15 * k // 16)


class KCiphertext:
    """k parts stacked as a (k, n) block, meant to mostly agree."""

    __slots__ = ("spec", "P")

    def __init__(self, spec: FieldSpec, P):
        P = np.asarray(P, dtype=spec.dtype)
        if P.ndim != 2:
            raise UsageError(f"part block must be 2-D, got shape {P.shape}")
        self.spec = spec
        self.P = P

    @classmethod
    def from_parts(cls, parts: list[Ciphertext]) -> "KCiphertext":
        if not parts:
            raise UsageError("a replicated ciphertext needs at least one part")
        spec = parts[0].v.spec
        for ct in parts:
            if ct.v.spec != spec or ct.v.len != parts[0].v.len:
                raise UsageError("parts must share one field and one length")
        return cls(spec, np.stack([ct.v.data for ct in parts]))

    @property
    def k(self) -> int:
        return self.P.shape[0]

    @property
    def n(self) -> int:
        return self.P.shape[1]

    @property
    def parts(self) -> list[Ciphertext]:
        return [Ciphertext(Vector(self.spec, row)) for row in self.P]

    def __repr__(self):
        return f"KCiphertext(k={self.k}, n={self.n})"


@dataclass(frozen=True)
class BoostConfig:
    """Knobs for the booster built into a key.

    mid_n is the ciphertext length inside the majority chains; boosting
    cost grows with its square, and it only has to carry a bit.
    """

    b: int = 16
    lambda_target: float = 0.6
    mid_n: int = 8
    mid_r: int | None = None
    expander_retries: int = 64
    apxmaj_retries: int = 64
    verify_trials: int = 200


class HomKeys:
    """d+1 level key pairs plus the d boosts linking them.

    Decryption needs only the first and last secret keys (fresh and
    evaluated ciphertexts respectively); the middle ones are retained
    for audits. The public view is every public key and every boost.
    """

    __slots__ = ("params", "k", "levels", "boosts")

    def __init__(self, params: Params, k: int, levels, boosts):
        levels = tuple(levels)
        boosts = tuple(boosts)
        if len(levels) != len(boosts) + 1:
            raise UsageError(
                f"{len(levels)} levels need {len(levels) - 1} boosts, got {len(boosts)}"
            )
        for i, aux in enumerate(boosts):
            if aux.graph.k != k:
                raise UsageError(f"boost {i} replicates {aux.graph.k} parts, keys say {k}")
            if aux.source_params.n != params.n or aux.target_params.n != params.n:
                raise UsageError(f"boost {i} does not preserve the ciphertext length")
        self.params = params
        self.k = k
        self.levels = levels
        self.boosts = boosts

    @property
    def depth(self) -> int:
        return len(self.boosts)

    @property
    def sk0(self) -> SecretKey:
        return self.levels[0][1]

    @property
    def sk_top(self) -> SecretKey:
        return self.levels[-1][1]

    @property
    def pks(self):
        return [pk for pk, _ in self.levels]

    def key_size_fields(self) -> int:
        """Total public key material, counted in field elements."""
        size = sum(pk.P.data.size for pk in self.pks)
        size += sum(link.size for aux in self.boosts for link in aux.links)
        return size

    def __repr__(self):
        return f"HomKeys(n={self.params.n}, k={self.k}, d={self.depth})"


def hom_keygen(
    p: Params,
    k: int,
    d: int,
    rng: np.random.Generator,
    cfg: BoostConfig | None = None,
) -> HomKeys:
    """Sample d+1 independent level keys and the boost between each pair.

    The expander and the majority circuit are sampled once and shared:
    they carry no key material, only wiring.
    """
    if k < 32:
        raise ParameterError(f"part count k={k} is below 32; the 15/16 and 31/32 "
                             "thresholds need that much granularity")
    if d < 1:
        raise ParameterError(f"depth must be >= 1, got {d}")
    cfg = cfg or BoostConfig()
    graph = build_expander(k, cfg.b, cfg.lambda_target, rng, cfg.expander_retries)
    apxmaj = build_apxmaj(
        cfg.b, rng, retries=cfg.apxmaj_retries, verify_trials=cfg.verify_trials, spec=p.field
    )
    levels = [keygen(p, rng) for _ in range(d + 1)]
    boosts = [
        boost_aux_gen(
            levels[i][1], levels[i + 1][0], graph, apxmaj, rng,
            mid_n=cfg.mid_n, mid_r=cfg.mid_r,
        )
        for i in range(d)
    ]
    return HomKeys(p, k, levels, boosts)


def _as_value(spec: FieldSpec, m) -> int:
    if isinstance(m, FieldElement):
        if m.spec != spec:
            raise UsageError("message comes from a different field")
        return m.value
    return FieldElement(spec, int(m)).value


def hom_encrypt(hk: HomKeys, m, rng: np.random.Generator) -> KCiphertext:
    """k independent level-0 encryptions of one message.

    With boosts present the message must be a bit; anything wider
    survives encryption and voting but not evaluation.
    """
    value = _as_value(hk.params.field, m)
    if hk.boosts and value > 1:
        raise UsageError(f"boosted keys carry bits, got message {value}")
    C = encrypt_batch(hk.levels[0][0], np.full(hk.k, value), rng)
    return KCiphertext(hk.params.field, C)


def _plurality(sk: SecretKey, kc: KCiphertext) -> FieldElement:
    spec = sk.params.field
    if kc.spec != spec or kc.n != sk.params.n:
        raise UsageError("replicated ciphertext does not match this key")
    vals = decrypt_batch(sk, kc.P)
    counts = np.bincount(vals, minlength=spec.q)
    # argmax takes the first maximum: ties break toward the smallest value
    return FieldElement(spec, int(np.argmax(counts)))


def hom_decrypt(hk: HomKeys, kc: KCiphertext) -> FieldElement:
    """Plurality vote over per-part decryptions under the level-0 key."""
    return _plurality(hk.sk0, kc)


def hdec(hk: HomKeys, kc: KCiphertext) -> FieldElement:
    """Plurality vote under the final-level key, for evaluated ciphertexts."""
    return _plurality(hk.sk_top, kc)


def enc_k_contains(sk: SecretKey, m, kc: KCiphertext) -> bool:
    """At least ceil(31k/32) parts in the strict encryption space of m."""
    value = _as_value(sk.params.field, m)
    good = int(enc_membership_batch(sk, np.full(kc.k, value), kc.P).sum())
    return good >= enc_k_threshold(kc.k)


def dec_k_contains(sk: SecretKey, m, kc: KCiphertext) -> bool:
    """At least ceil(15k/16) parts decrypting to m."""
    value = _as_value(sk.params.field, m)
    good = int(dec_membership_batch(sk, np.full(kc.k, value), kc.P).sum())
    return good >= dec_k_threshold(kc.k)


def boost_depth(c: Circuit, count_xor: bool = True) -> int:
    """Boost levels the circuit consumes on its worst output path.

    Every XOR, AND and G burns a level by default; with count_xor off
    only the multiplicative kinds do, and the result equals mult_depth.
    """
    bd: dict[str, int | None] = {w: 0 for w in c.inputs}
    for g in c.gates:
        ops = [bd[a] for a in g.args if bd[a] is not None]
        if not ops:
            bd[g.id] = None  # pure constant, valid at every level
        elif g.kind == "COPY":
            bd[g.id] = ops[0]
        else:
            burn = 1 if (g.kind in MULT_KINDS or count_xor) else 0
            bd[g.id] = max(ops) + burn
    return max((bd[o] for o in c.outputs if bd.get(o) is not None), default=0)


def hom_eval(
    hk: HomKeys,
    c: Circuit | LayeredCircuit,
    inputs: list[KCiphertext],
    count_xor: bool = True,
    trace: list | None = None,
) -> list[KCiphertext]:
    """Evaluate a bit circuit on replicated ciphertexts.

    Inputs must decode to bits under the level-0 key; outputs land at
    level d, decryptable with hdec. A circuit whose boost_depth equals
    d runs its final layer bare. Pass a list as trace to receive the
    ("boost"|"gates", level, width) schedule actually executed.

    Only the cone feeding the outputs is evaluated, matching the depth
    precondition, which ignores dead gates too.
    """
    if isinstance(c, LayeredCircuit):
        c = c.circuit
    p = hk.params
    spec = p.field
    d = hk.depth
    if len(inputs) != len(c.inputs):
        raise UsageError(f"circuit takes {len(c.inputs)} inputs, got {len(inputs)}")
    for i, kc in enumerate(inputs):
        if kc.spec != spec or kc.k != hk.k or kc.n != p.n:
            raise UsageError(f"input {i} does not match the keys: {kc!r}")

    need = set(c.outputs)
    for g in reversed(c.gates):
        if g.id in need:
            need.update(g.args)
    cone = [g for g in c.gates if g.id in need]

    # fold constants, resolve copies, assign each gate its run level
    const_val: dict[str, int] = {}
    root: dict[str, str] = {}
    bd: dict[str, int] = {w: 0 for w in c.inputs}
    runs: list[tuple[Gate, int]] = []  # gate with rooted args, run level
    deepest = 0
    for g in cone:
        if g.kind.startswith("CONST"):
            const_val[g.id] = int(g.kind[-1])
            continue
        args = tuple(root.get(a, a) for a in g.args)
        ops = [bd[a] for a in args if a not in const_val]
        if not ops:
            cv = [const_val[a] for a in args]
            if g.kind == "XOR":
                const_val[g.id] = cv[0] ^ cv[1]
            elif g.kind == "AND":
                const_val[g.id] = cv[0] & cv[1]
            elif g.kind == "G":
                const_val[g.id] = 1 ^ (cv[0] & cv[1])
            else:  # COPY
                const_val[g.id] = cv[0]
            continue
        if g.kind == "COPY":
            root[g.id] = args[0]
            continue
        burn = 1 if (g.kind in MULT_KINDS or count_xor) else 0
        base = max(ops)
        deepest = max(deepest, base + burn)
        runs.append((Gate(g.id, g.kind, args), min(base + 1, d)))
        bd[g.id] = base + burn
    if deepest > d:
        raise UsageError(f"circuit needs {deepest} boosted layers, keys provide {d}")

    by_run: dict[int, list[Gate]] = defaultdict(list)
    for g, run in runs:
        by_run[run].append(g)
    last_need: dict[str, int] = {}
    for g, run in runs:
        for a in g.args:
            if a not in const_val:
                last_need[a] = max(last_need.get(a, 0), run)
    out_roots = [root.get(o, o) for o in c.outputs]
    for w in out_roots:
        if w not in const_val:
            last_need[w] = d

    vals: dict[str, np.ndarray] = {}
    if c.inputs:
        X = np.stack([kc.P for kc in inputs])
        if trace is not None:
            trace.append(("boost", 0, len(inputs)))
        B = boost_arrays(hk.boosts[0], X)
        for i, w in enumerate(c.inputs):
            vals[w] = B[i]
    lvl = {w: 1 for w in c.inputs}

    def fetch(a):
        return const_val[a] if a in const_val else vals[a]

    for ell in range(1, d + 1):
        here = by_run.get(ell, ())
        if here and trace is not None:
            trace.append(("gates", ell, len(here)))
        for g in here:
            a = fetch(g.args[0])
            b = fetch(g.args[1])
            if g.kind == "XOR":
                r = _xor_any(a, b)
            else:
                r = _mul_any(spec, a, b)
                if g.kind == "G":
                    r = _xor_any(r, 1)
            vals[g.id] = r
            lvl[g.id] = ell
        if ell == d:
            break
        carry = [w for w, lw in lvl.items() if lw == ell and last_need.get(w, 0) > ell]
        if carry:
            W = np.stack([vals[w] for w in carry])
            if trace is not None:
                trace.append(("boost", ell, len(carry)))
            Bc = boost_arrays(hk.boosts[ell], W)
            for i, w in enumerate(carry):
                vals[w] = Bc[i]
                lvl[w] = ell + 1

    out = []
    for w in out_roots:
        if w in const_val:
            block = np.full((hk.k, p.n), const_val[w], dtype=spec.dtype)
        else:
            block = vals[w]
        out.append(KCiphertext(spec, block))
    return out
