"""Correctness booster: expander-routed homomorphic approximate majority.

A replicated ciphertext is k parts that mostly decrypt to the same bit.
Each boosted output part recomputes that bit as the approximate majority
of b input parts, the b chosen by one side of a random bipartite graph.
The majority circuit runs homomorphically through its own reencryption
chain, one independent chain per output, so a surviving minority of bad
parts cannot spread: outputs seeing at most b/8 bad neighbors come out
as valid fresh encryptions of the right bit.

Two quantitative handles, both checked empirically elsewhere:
- random left-regular graphs concentrate their second singular value
  near 2/sqrt(b); targets below that floor are rejected rather than
  retried forever;
- mixing: when at most k/16 inputs are bad, outputs with b/8 or more
  bad neighbors number at most 16 lambda^2 k.

Messages must be bits here. Majority over a field makes no sense for
anything wider, so boosting a part that encrypts a non-bit silently
produces whatever the majority circuit does to junk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, ParameterError, UsageError
from .circuit import Circuit, leaf_assignment
from .field import mul_arrays
from .linalg import Vector, matmul_arrays
from .reencrypt import aux_gen_basic
from .scheme import Ciphertext, Params, PublicKey, SecretKey, keygen


@dataclass(frozen=True)
class ExpanderGraph:
    """Left-regular bipartite graph: output j reads inputs adjacency[j]."""

    k: int
    b: int
    adjacency: np.ndarray  # (k, b), distinct entries per row
    lambda_measured: float


def second_singular_value(adjacency: np.ndarray, k: int, b: int) -> float:
    """sigma_2 of the degree-normalized biadjacency matrix.

    Power iteration on A A^T finds the top eigenpair, deflating it
    exposes the second; no spectral library involved.
    """
    B = np.zeros((k, k))
    np.add.at(B, (np.repeat(np.arange(k), b), adjacency.reshape(-1)), 1.0)
    M = (B @ B.T) / (b * b)

    def top_eig(mat, start):
        v = start / np.linalg.norm(start)
        lam = 0.0
        for _ in range(1000):
            w = mat @ v
            nrm = np.linalg.norm(w)
            if nrm < 1e-15:
                return 0.0, v
            w /= nrm
            cur = float(w @ mat @ w)
            if abs(cur - lam) < 1e-13:
                return cur, w
            lam, v = cur, w
        return lam, v

    lam1, v1 = top_eig(M, np.ones(k))
    M2 = M - lam1 * np.outer(v1, v1)
    start = np.zeros(k)
    start[0] = 1.0
    start -= (start @ v1) * v1
    if np.linalg.norm(start) < 1e-9:
        start = np.linspace(1, 2, k)
        start -= (start @ v1) * v1
    lam2, _ = top_eig(M2, start)
    return float(np.sqrt(max(lam2, 0.0)))


def build_expander(
    k: int, b: int, lambda_target: float, rng: np.random.Generator, retries: int = 64
) -> ExpanderGraph:
    """Sample left-regular graphs until one meets the target expansion.

    Random graphs sit near the 2/sqrt(b) floor, so a target below that
    is hopeless and fails fast with the floor in the message.
    """
    if not 1 <= b <= k:
        raise ParameterError(f"left degree b={b} must lie in [1, k={k}]")
    if k < 2:
        raise ParameterError(f"side size must be >= 2, got {k}")
    best = np.inf
    for _ in range(retries):
        adjacency = np.argsort(rng.random((k, k)), axis=1)[:, :b]
        lam = second_singular_value(adjacency, k, b)
        if lam <= lambda_target:
            return ExpanderGraph(k, b, adjacency, lam)
        best = min(best, lam)
    raise ConstructionError(
        f"no (k={k}, b={b}) graph reached lambda <= {lambda_target} in {retries} draws "
        f"(best {best:.4f}); random graphs concentrate near the 2/sqrt(b) "
        f"floor {2 / np.sqrt(b):.4f}"
    )


def bad_neighbor_counts(graph: ExpanderGraph, bad_mask: np.ndarray) -> np.ndarray:
    """Per output, how many of its b neighbors the mask marks bad."""
    bad_mask = np.asarray(bad_mask)
    if bad_mask.shape[-1] != graph.k:
        raise UsageError(f"mask covers {bad_mask.shape[-1]} inputs, graph has {graph.k}")
    return bad_mask[..., graph.adjacency].sum(axis=-1)


def heavy_output_bound(graph: ExpanderGraph) -> float:
    """Mixing-lemma cap on outputs with >= b/8 bad neighbors: 16 lambda^2 k."""
    return 16.0 * graph.lambda_measured**2 * graph.k


class BoostAux:
    """Per-output majority chains, flattened for stacked evaluation.

    links[l] holds all k outputs' level-l reencryption arrays stacked
    as (k, n_l, n_{l+1}); the chains share sizes and differ in keys.
    Internal secret keys are not retained.
    """

    __slots__ = ("graph", "circuit", "assignment", "level_params", "links")

    def __init__(self, graph, circuit, assignment, level_params, links):
        self.graph = graph
        self.circuit = circuit
        self.assignment = assignment
        self.level_params = level_params
        self.links = links

    @property
    def source_params(self) -> Params:
        return self.level_params[0]

    @property
    def target_params(self) -> Params:
        return self.level_params[-1]

    @property
    def tree_depth(self) -> int:
        return len(self.links) - 1

    def __repr__(self):
        return (
            f"BoostAux(k={self.graph.k}, b={self.graph.b}, "
            f"n={self.source_params.n} -> {self.target_params.n})"
        )


def boost_aux_gen(
    sk: SecretKey,
    pk_next: PublicKey,
    graph: ExpanderGraph,
    apxmaj: Circuit,
    rng: np.random.Generator,
    mid_n: int = 8,
    mid_r: int | None = None,
    aux_eta: float | None = None,
) -> BoostAux:
    """One fresh chain per output, threading the majority circuit.

    The chain runs source key, tree_depth midway keys of length mid_n,
    target key; every layer of the G-tree crosses one link. mid_n only
    has to carry the bit through, so it is small by default.
    """
    p_src = sk.params
    p_tgt = pk_next.params
    if p_src.field != p_tgt.field:
        raise UsageError("source and target keys must share one field")
    if len(apxmaj.inputs) != graph.b:
        raise UsageError(
            f"majority circuit reads {len(apxmaj.inputs)} wires, graph degree is {graph.b}"
        )
    if mid_n < p_src.s:
        raise ParameterError(f"midway length {mid_n} is below the trapdoor size {p_src.s}")
    assignment = leaf_assignment(apxmaj)
    d_tree = int(np.log2(len(assignment)))
    p_mid = Params(
        n=mid_n,
        r=mid_r if mid_r is not None else max(p_src.s, mid_n // 2),
        s=p_src.s,
        field=p_src.field,
        eta=p_src.eta,
    )
    level_params = [p_src] + [p_mid] * d_tree + [p_tgt]
    links = [
        np.empty((graph.k, a.n, bnext.n), dtype=p_src.field.dtype)
        for a, bnext in zip(level_params[:-1], level_params[1:])
    ]
    for j in range(graph.k):
        sk_prev = sk
        for l in range(d_tree):
            pk_mid, sk_mid = keygen(p_mid, rng)
            links[l][j] = aux_gen_basic(sk_prev, pk_mid, rng, eta=aux_eta).Z
            sk_prev = sk_mid
        links[d_tree][j] = aux_gen_basic(sk_prev, pk_next, rng, eta=aux_eta).Z
    return BoostAux(graph, apxmaj, assignment, level_params, links)


def boost_arrays(aux: BoostAux, C: np.ndarray) -> np.ndarray:
    """Boost raw part blocks: C is (..., k, n_src), result (..., k, n_tgt).

    The G-tree is walked level by level with all outputs (and any batch)
    folded into one array, pairing adjacent wires exactly as the gate
    list does; each level ends with its stacked reencryption.
    """
    spec = aux.source_params.field
    k = aux.graph.k
    C = np.asarray(C, dtype=spec.dtype)
    if C.shape[-2] != k or C.shape[-1] != aux.source_params.n:
        raise UsageError(
            f"expected part block (..., {k}, {aux.source_params.n}), got {C.shape}"
        )

    def reenc(Z, v):
        return matmul_arrays(spec, v[..., None, :], Z)[..., 0, :]

    X = np.moveaxis(C[..., aux.graph.adjacency, :], -2, 0)  # (b, ..., k, n_src)
    V = reenc(aux.links[0], X)
    V = V[aux.assignment]
    one = spec.dtype(1)
    for l in range(1, aux.tree_depth + 1):
        V = mul_arrays(spec, V[0::2], V[1::2])
        V ^= one
        V = reenc(aux.links[l], V)
    return V[0]


def boost(aux: BoostAux, parts: list[Ciphertext]) -> list[Ciphertext]:
    """Boost one replicated ciphertext given as its k parts."""
    k = aux.graph.k
    n = aux.source_params.n
    if len(parts) != k:
        raise UsageError(f"expected {k} parts, got {len(parts)}")
    for ct in parts:
        if ct.v.len != n:
            raise UsageError(f"part length {ct.v.len}, source level expects {n}")
    C = np.stack([ct.v.data for ct in parts])
    out = boost_arrays(aux, C)
    spec = aux.target_params.field
    return [Ciphertext(Vector(spec, row)) for row in out]
