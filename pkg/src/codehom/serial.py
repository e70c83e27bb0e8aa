"""JSON envelopes for keys, ciphertexts, and boost material.

Every file is one object tagged {"format": "codehom/v1", "kind": ...};
field elements are plain integers so a desk-scale file stays greppable
and diffable. A replicated ciphertext nests one complete ciphertext
envelope per part. A full key set is a directory, one file per level
key and per boost, under a meta file naming the shape.

Loaders validate structure and value ranges and raise DataFormatError;
a file that parses as JSON but violates a constructor invariant counts
as malformed data too.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ParameterError, UsageError
from .booster import BoostAux, ExpanderGraph
from .circuit import format_netlist, parse_netlist
from .field import FieldSpec
from .hom import HomKeys, KCiphertext
from .linalg import Matrix, Vector
from .scheme import Ciphertext, Params, PublicKey, SecretKey

FORMAT = "codehom/v1"


def _expect(doc, kind: str) -> None:
    if not isinstance(doc, dict):
        raise DataFormatError(f"envelope must be a JSON object, got {type(doc).__name__}")
    if doc.get("format") != FORMAT:
        raise DataFormatError(f"unknown format {doc.get('format')!r}, expected {FORMAT!r}")
    if doc.get("kind") != kind:
        raise DataFormatError(f"expected kind {kind!r}, found {doc.get('kind')!r}")


def _get(doc: dict, key: str):
    try:
        return doc[key]
    except KeyError:
        raise DataFormatError(f"missing field {key!r}") from None


def _field_array(spec: FieldSpec, data, what: str, ndim: int) -> np.ndarray:
    # bounds-check on a wide dtype first so nothing wraps on the cast
    try:
        A = np.asarray(data, dtype=np.int64)
    except (TypeError, ValueError):
        raise DataFormatError(f"{what} must be nested integer lists") from None
    if A.ndim != ndim:
        raise DataFormatError(f"{what} must be {ndim}-dimensional, got shape {A.shape}")
    if A.size and (A.min() < 0 or A.max() >= spec.q):
        raise DataFormatError(f"{what} holds values outside [0, {spec.q})")
    return A.astype(spec.dtype)


# ---------------------------------------------------------------------------
# Parameters.


def encode_params(p: Params) -> dict:
    return {"n": p.n, "r": p.r, "s": p.s, "field_k": p.field.k, "eta": p.eta, "alpha": p.alpha}


def decode_params(doc) -> Params:
    if not isinstance(doc, dict):
        raise DataFormatError("params must be a JSON object")
    try:
        return Params(
            n=int(_get(doc, "n")),
            r=int(_get(doc, "r")),
            s=int(_get(doc, "s")),
            field=FieldSpec(int(_get(doc, "field_k"))),
            eta=float(_get(doc, "eta")),
            alpha=doc.get("alpha"),
        )
    except (ParameterError, UsageError, TypeError, ValueError) as e:
        raise DataFormatError(f"invalid parameters: {e}") from None


# ---------------------------------------------------------------------------
# Keys and ciphertexts.


def encode_public_key(pk: PublicKey) -> dict:
    return {
        "format": FORMAT,
        "kind": "pk",
        "params": encode_params(pk.params),
        "P": pk.P.data.tolist(),
    }


def decode_public_key(doc) -> PublicKey:
    _expect(doc, "pk")
    p = decode_params(_get(doc, "params"))
    P = _field_array(p.field, _get(doc, "P"), "P", 2)
    if P.shape != (p.n, p.r):
        raise DataFormatError(f"P must be {p.n}x{p.r}, got {P.shape[0]}x{P.shape[1]}")
    return PublicKey(Matrix(p.field, P), p)


def encode_secret_key(sk: SecretKey) -> dict:
    return {
        "format": FORMAT,
        "kind": "sk",
        "params": encode_params(sk.params),
        "S": list(sk.S),
        "a": sk.a.data.tolist(),
        "M": sk.M.data.tolist(),
        "y": sk.y_dec.data.tolist(),
    }


def decode_secret_key(doc) -> SecretKey:
    _expect(doc, "sk")
    p = decode_params(_get(doc, "params"))
    S = _get(doc, "S")
    if (not isinstance(S, list) or len(S) != p.s
            or any(not isinstance(i, int) or not 0 <= i < p.n for i in S)):
        raise DataFormatError(f"S must list {p.s} row indices below {p.n}")
    a = _field_array(p.field, _get(doc, "a"), "a", 1)
    M = _field_array(p.field, _get(doc, "M"), "M", 2)
    y = _field_array(p.field, _get(doc, "y"), "y", 1)
    if a.shape != (p.n,) or y.shape != (p.n,) or M.shape != (p.n, p.r):
        raise DataFormatError("secret key arrays do not match the declared parameters")
    return SecretKey(tuple(S), Vector(p.field, a), Matrix(p.field, M), Vector(p.field, y), p)


def encode_ciphertext(ct: Ciphertext) -> dict:
    return {"format": FORMAT, "kind": "ct", "field_k": ct.v.spec.k, "c": ct.v.data.tolist()}


def decode_ciphertext(doc) -> Ciphertext:
    _expect(doc, "ct")
    try:
        spec = FieldSpec(int(_get(doc, "field_k")))
    except (ParameterError, UsageError, TypeError, ValueError) as e:
        raise DataFormatError(f"invalid field: {e}") from None
    c = _field_array(spec, _get(doc, "c"), "c", 1)
    if c.size == 0:
        raise DataFormatError("empty ciphertext")
    return Ciphertext(Vector(spec, c))


def encode_kciphertext(kc: KCiphertext) -> dict:
    return {
        "format": FORMAT,
        "kind": "kct",
        "parts": [encode_ciphertext(ct) for ct in kc.parts],
    }


def decode_kciphertext(doc) -> KCiphertext:
    _expect(doc, "kct")
    parts = _get(doc, "parts")
    if not isinstance(parts, list) or not parts:
        raise DataFormatError("parts must be a non-empty list of ciphertext envelopes")
    try:
        return KCiphertext.from_parts([decode_ciphertext(d) for d in parts])
    except UsageError as e:
        raise DataFormatError(f"inconsistent parts: {e}") from None


# ---------------------------------------------------------------------------
# Boost material.


def encode_boost_aux(aux: BoostAux) -> dict:
    g = aux.graph
    return {
        "format": FORMAT,
        "kind": "boost-aux",
        "k": g.k,
        "b": g.b,
        "lambda_measured": g.lambda_measured,
        "adjacency": g.adjacency.tolist(),
        "circuit": format_netlist(aux.circuit),
        "assignment": aux.assignment.tolist(),
        "level_params": [encode_params(p) for p in aux.level_params],
        "links": [link.tolist() for link in aux.links],
    }


def decode_boost_aux(doc) -> BoostAux:
    _expect(doc, "boost-aux")
    k, b = int(_get(doc, "k")), int(_get(doc, "b"))
    adjacency = np.asarray(_get(doc, "adjacency"), dtype=np.int64)
    if adjacency.shape != (k, b) or adjacency.min() < 0 or adjacency.max() >= k:
        raise DataFormatError(f"adjacency must be {k}x{b} with entries below {k}")
    graph = ExpanderGraph(k, b, adjacency, float(_get(doc, "lambda_measured")))
    try:
        circuit = parse_netlist(_get(doc, "circuit"))
    except UsageError as e:
        raise DataFormatError(f"bad majority circuit: {e}") from None
    level_params = [decode_params(d) for d in _get(doc, "level_params")]
    if len(level_params) < 2:
        raise DataFormatError("a boost needs at least source and target parameters")
    spec = level_params[0].field
    assignment = np.asarray(_get(doc, "assignment"), dtype=np.int64)
    if assignment.ndim != 1 or (assignment.size and
                                (assignment.min() < 0 or assignment.max() >= b)):
        raise DataFormatError(f"assignment must map leaves to inputs below {b}")
    raw_links = _get(doc, "links")
    if len(raw_links) != len(level_params) - 1:
        raise DataFormatError(
            f"{len(level_params)} levels need {len(level_params) - 1} links, "
            f"got {len(raw_links)}"
        )
    links = []
    for l, raw in enumerate(raw_links):
        L = _field_array(spec, raw, f"links[{l}]", 3)
        want = (k, level_params[l].n, level_params[l + 1].n)
        if L.shape != want:
            raise DataFormatError(f"links[{l}] must have shape {want}, got {L.shape}")
        links.append(L)
    return BoostAux(graph, circuit, assignment, level_params, links)


# ---------------------------------------------------------------------------
# File and directory plumbing.


def save_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataFormatError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path} is not JSON: {e}") from None


def save_public_key(pk: PublicKey, path) -> None:
    save_json(encode_public_key(pk), path)


def load_public_key(path) -> PublicKey:
    return decode_public_key(load_json(path))


def save_secret_key(sk: SecretKey, path) -> None:
    save_json(encode_secret_key(sk), path)


def load_secret_key(path) -> SecretKey:
    return decode_secret_key(load_json(path))


def save_ciphertext(ct: Ciphertext, path) -> None:
    save_json(encode_ciphertext(ct), path)


def load_ciphertext(path) -> Ciphertext:
    return decode_ciphertext(load_json(path))


def save_kciphertext(kc: KCiphertext, path) -> None:
    save_json(encode_kciphertext(kc), path)


def load_kciphertext(path) -> KCiphertext:
    return decode_kciphertext(load_json(path))


def save_hom_keys(hk: HomKeys, directory) -> None:
    """One file per level key and per boost under a meta file."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": FORMAT,
        "kind": "hom-keys",
        "k": hk.k,
        "depth": hk.depth,
        "params": encode_params(hk.params),
    }
    save_json(meta, d / "meta.json")
    for i, (pk, sk) in enumerate(hk.levels):
        save_json(encode_public_key(pk), d / f"level{i}.pk.json")
        save_json(encode_secret_key(sk), d / f"level{i}.sk.json")
    for i, aux in enumerate(hk.boosts):
        save_json(encode_boost_aux(aux), d / f"boost{i}.json")


def load_hom_keys(directory) -> HomKeys:
    d = Path(directory)
    meta = load_json(d / "meta.json")
    _expect(meta, "hom-keys")
    params = decode_params(_get(meta, "params"))
    k, depth = int(_get(meta, "k")), int(_get(meta, "depth"))
    levels = [
        (load_public_key(d / f"level{i}.pk.json"), load_secret_key(d / f"level{i}.sk.json"))
        for i in range(depth + 1)
    ]
    boosts = [decode_boost_aux(load_json(d / f"boost{i}.json")) for i in range(depth)]
    try:
        return HomKeys(params, k, levels, boosts)
    except UsageError as e:
        raise DataFormatError(f"inconsistent key directory: {e}") from None
