"""Circuit IR, netlist parsing, layering, and the two internal builders.

Gate kinds: XOR, AND, G, COPY, CONST0, CONST1, where G(x,y) = 1 - xy
(equal to 1 + xy here, characteristic 2). On {0,1} values XOR and AND
are the boolean gates and G is NAND.

Layering prepares a circuit for chain evaluation: dummy gates (an AND
with the constant one) are inserted until every input-to-output path
crosses the same number of level-consuming gates, one per layer. Which
gates consume a level depends on the evaluator: a plain chain reencrypts
only after multiplicative gates, the replicated scheme boosts after
additions too, so layerize takes count_xor.

CORR_d is the full G-tree self-corrector; APXMAJ is the randomly wired
approximate majority, built by sample-and-verify since the existence
argument it comes from is probabilistic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import ConstructionError, DataFormatError, ParameterError, UsageError
from .field import FieldElement, FieldSpec, mul_arrays, random_nonzero

_ARITY = {"XOR": 2, "AND": 2, "G": 2, "COPY": 1, "CONST0": 0, "CONST1": 0}
MULT_KINDS = ("AND", "G")
_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    args: tuple[str, ...]


class Circuit:
    """Immutable DAG in topological order; operands must precede their gate."""

    __slots__ = ("inputs", "gates", "outputs", "kind_of")

    def __init__(self, inputs, gates, outputs):
        inputs = tuple(inputs)
        gates = tuple(gates)
        outputs = tuple(outputs)
        kind_of: dict[str, str] = {}
        for name in inputs:
            if not _ID_RE.match(name):
                raise UsageError(f"bad identifier {name!r}")
            if name in kind_of:
                raise UsageError(f"duplicate id {name!r}")
            kind_of[name] = "INPUT"
        for g in gates:
            if g.kind not in _ARITY:
                raise UsageError(f"gate {g.id!r} has unknown kind {g.kind!r}")
            if len(g.args) != _ARITY[g.kind]:
                raise UsageError(
                    f"gate {g.id!r}: {g.kind} takes {_ARITY[g.kind]} operand(s), got {len(g.args)}"
                )
            if not _ID_RE.match(g.id):
                raise UsageError(f"bad identifier {g.id!r}")
            if g.id in kind_of:
                raise UsageError(f"duplicate id {g.id!r}")
            for a in g.args:
                if a not in kind_of:
                    raise UsageError(f"gate {g.id!r} uses undefined wire {a!r}")
            kind_of[g.id] = g.kind
        if not outputs:
            raise UsageError("circuit has no outputs")
        for o in outputs:
            if o not in kind_of:
                raise UsageError(f"output {o!r} is undefined")
        self.inputs = inputs
        self.gates = gates
        self.outputs = outputs
        self.kind_of = kind_of

    @property
    def size(self) -> int:
        return len(self.gates)

    def __repr__(self):
        return f"Circuit({len(self.inputs)} in, {self.size} gates, {len(self.outputs)} out)"


def parse_netlist(text: str) -> Circuit:
    """One statement per line; `#` starts a comment. See format_netlist."""
    inputs: list[str] = []
    gates: list[Gate] = []
    outputs: list[str] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] in ("inputs", "input"):
            if len(tok) < 2:
                raise DataFormatError(f"line {ln}: empty input list")
            inputs.extend(tok[1:])
        elif tok[0] in ("outputs", "output"):
            if len(tok) < 2:
                raise DataFormatError(f"line {ln}: empty output list")
            outputs.extend(tok[1:])
        elif len(tok) >= 3 and tok[1] == "=":
            kind = tok[2]
            if kind not in _ARITY:
                raise DataFormatError(f"line {ln}: unknown gate kind {kind!r}")
            if len(tok) - 3 != _ARITY[kind]:
                raise DataFormatError(
                    f"line {ln}: {kind} takes {_ARITY[kind]} operand(s), got {len(tok) - 3}"
                )
            gates.append(Gate(tok[0], kind, tuple(tok[3:])))
        else:
            raise DataFormatError(f"line {ln}: cannot parse {line!r}")
    try:
        return Circuit(inputs, gates, outputs)
    except UsageError as e:
        raise DataFormatError(str(e)) from e


def format_netlist(c: Circuit) -> str:
    lines = []
    if c.inputs:
        lines.append("inputs " + " ".join(c.inputs))
    for g in c.gates:
        rhs = g.kind + ("" if not g.args else " " + " ".join(g.args))
        lines.append(f"{g.id} = {rhs}")
    lines.append("outputs " + " ".join(c.outputs))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Plain evaluation.
# ---------------------------------------------------------------------------


def eval_plain(c: Circuit, inputs, spec: FieldSpec | None = None) -> list[FieldElement]:
    """Reference gate-by-gate evaluation over the field."""
    inputs = list(inputs)
    if len(inputs) != len(c.inputs):
        raise UsageError(f"circuit takes {len(c.inputs)} inputs, got {len(inputs)}")
    if inputs:
        spec = inputs[0].spec
        if any(v.spec != spec for v in inputs):
            raise UsageError("inputs come from different fields")
    elif spec is None:
        raise UsageError("input-free circuit needs an explicit field")
    one = FieldElement(spec, 1)
    zero = FieldElement(spec, 0)
    vals = dict(zip(c.inputs, inputs))
    for g in c.gates:
        if g.kind == "XOR":
            v = vals[g.args[0]] + vals[g.args[1]]
        elif g.kind == "AND":
            v = vals[g.args[0]] * vals[g.args[1]]
        elif g.kind == "G":
            v = one + vals[g.args[0]] * vals[g.args[1]]
        elif g.kind == "COPY":
            v = vals[g.args[0]]
        else:
            v = zero if g.kind == "CONST0" else one
        vals[g.id] = v
    return [vals[o] for o in c.outputs]


def eval_plain_array(spec: FieldSpec, c: Circuit, X: np.ndarray) -> np.ndarray:
    """Batched evaluation: X is (inputs, *batch), result (outputs, *batch)."""
    X = np.asarray(X, dtype=spec.dtype)
    if X.shape[0] != len(c.inputs):
        raise UsageError(f"circuit takes {len(c.inputs)} inputs, got {X.shape[0]}")
    batch = X.shape[1:]
    one = spec.dtype(1)
    vals = {name: X[i] for i, name in enumerate(c.inputs)}
    for g in c.gates:
        if g.kind == "XOR":
            v = vals[g.args[0]] ^ vals[g.args[1]]
        elif g.kind == "AND":
            v = mul_arrays(spec, vals[g.args[0]], vals[g.args[1]])
        elif g.kind == "G":
            v = one ^ mul_arrays(spec, vals[g.args[0]], vals[g.args[1]])
        elif g.kind == "COPY":
            v = vals[g.args[0]]
        else:
            v = np.full(batch, 0 if g.kind == "CONST0" else 1, dtype=spec.dtype)
        vals[g.id] = v
    return np.stack([vals[o] for o in c.outputs])


# ---------------------------------------------------------------------------
# Depth measures and layering.
# ---------------------------------------------------------------------------


def _longest_path(c: Circuit, weight) -> int:
    d = {name: 0 for name in c.inputs}
    for g in c.gates:
        d[g.id] = max((d[a] for a in g.args), default=0) + weight(g.kind)
    return max(d[o] for o in c.outputs)


def depth(c: Circuit) -> int:
    """Most gates on any path; constants are sources and do not count."""
    return _longest_path(c, lambda k: 0 if k.startswith("CONST") else 1)


def mult_depth(c: Circuit) -> int:
    return _longest_path(c, lambda k: 1 if k in MULT_KINDS else 0)


@dataclass(frozen=True)
class LayeredCircuit:
    """A circuit whose paths all cross one level-consuming gate per layer.

    wire_levels maps each wire to the chain level its value lives at once
    inputs have passed the entry reencryption (inputs sit at level 1, a
    layer-j gate's output at j+1). Constant wires are level-free (None):
    the trivial encryption is valid at every level.
    """

    circuit: Circuit
    gate_layers: dict[str, int]
    wire_levels: dict[str, int | None]
    n_layers: int
    counts_xor: bool


def _output_cone(c: Circuit) -> set[str]:
    args = {g.id: g.args for g in c.gates}
    needed = set(c.outputs)
    for g in reversed(c.gates):
        if g.id in needed:
            needed.update(args[g.id])
    return needed


def layerize(c: Circuit, count_xor: bool = False) -> LayeredCircuit:
    """Equalize level-consuming depth across paths with dummy AND-one gates.

    Gates outside the output cone are dropped. The transform preserves
    eval_plain on every input: a dummy multiplies by the constant one.
    """
    leveled = MULT_KINDS + ("XOR",) if count_xor else MULT_KINDS
    cone = _output_cone(c)
    used = {g.id for g in c.gates} | set(c.inputs) | {"__one"}
    new_gates: list[Gate] = []
    lvl: dict[str, int | None] = {name: 0 for name in c.inputs}
    gate_layers: dict[str, int] = {}
    lift_cache: dict[tuple[str, int], str] = {}
    counter = 0
    need_one = False

    def fresh() -> str:
        nonlocal counter
        while True:
            name = f"__lift{counter}"
            counter += 1
            if name not in used:
                used.add(name)
                return name

    def lift(w: str, target: int) -> str:
        nonlocal need_one
        cur = lvl[w]
        while cur < target:
            key = (w, cur + 1)
            if key in lift_cache:
                w = lift_cache[key]
            else:
                need_one = True
                nid = fresh()
                new_gates.append(Gate(nid, "AND", (w, "__one")))
                lvl[nid] = cur + 1
                gate_layers[nid] = cur + 1
                lift_cache[key] = nid
                w = nid
            cur += 1
        return w

    for g in c.gates:
        if g.id not in cone:
            continue
        if g.kind.startswith("CONST"):
            lvl[g.id] = None
            new_gates.append(g)
            continue
        op_lvls = [lvl[a] for a in g.args if lvl[a] is not None]
        base = max(op_lvls, default=0)
        args = tuple(a if lvl[a] is None else lift(a, base) for a in g.args)
        new_gates.append(Gate(g.id, g.kind, args))
        if g.kind in leveled:
            lvl[g.id] = base + 1
            gate_layers[g.id] = base + 1
        else:
            lvl[g.id] = base

    n_layers = max((v for v in lvl.values() if v is not None), default=0)
    outputs = tuple(o if lvl[o] is None else lift(o, n_layers) for o in c.outputs)
    gates = (
        [Gate("__one", "CONST1", ())] + new_gates if need_one else new_gates
    )
    circ = Circuit(c.inputs, gates, outputs)
    if need_one:
        lvl["__one"] = None
    levels = {w: (None if lvl[w] is None else lvl[w] + 1) for w in lvl}
    return LayeredCircuit(circ, gate_layers, levels, n_layers, count_xor)


def check_layering(lc: LayeredCircuit) -> bool:
    """Structural invariant: operand levels agree, leveled gates step by one."""
    leveled = MULT_KINDS + ("XOR",) if lc.counts_xor else MULT_KINDS
    lv = lc.wire_levels
    for name in lc.circuit.inputs:
        if lv[name] != 1:
            return False
    for g in lc.circuit.gates:
        if g.kind.startswith("CONST"):
            if lv[g.id] is not None:
                return False
            continue
        ops = [lv[a] for a in g.args if lv[a] is not None]
        if len(set(ops)) > 1:
            return False
        base = ops[0] if ops else 1
        want = base + 1 if g.kind in leveled else base
        if lv[g.id] != want:
            return False
        if g.kind in leveled and lc.gate_layers.get(g.id) != want - 1:
            return False
    top = lc.n_layers + 1
    return all(lv[o] in (None, top) for o in lc.circuit.outputs)


# ---------------------------------------------------------------------------
# CORR and APXMAJ builders.
# ---------------------------------------------------------------------------


def build_corr(d: int) -> Circuit:
    """Full binary tree of G gates: 2^d inputs, depth d, 2^d - 1 gates."""
    if d < 2 or d % 2 != 0:
        raise UsageError(f"tree depth must be even and >= 2, got {d}")
    prev = [f"x{i}" for i in range(1 << d)]
    inputs = list(prev)
    gates: list[Gate] = []
    level = 0
    while len(prev) > 1:
        level += 1
        cur = []
        for i in range(0, len(prev), 2):
            gid = f"n{level}_{i // 2}"
            gates.append(Gate(gid, "G", (prev[i], prev[i + 1])))
            cur.append(gid)
        prev = cur
    return Circuit(inputs, gates, [prev[0]])


def leaf_assignment(c: Circuit) -> np.ndarray:
    """Recover which input each leaf of a leaf-wired G-tree reads.

    Inverse of the wiring step in build_apxmaj; the identity tree from
    build_corr round-trips too. The builder emits the bottom tree level
    first, so the leaf order is the prefix of gates whose operands are
    both inputs.
    """
    input_ix = {name: i for i, name in enumerate(c.inputs)}
    leaves: list[int] = []
    for g in c.gates:
        if g.kind != "G":
            raise UsageError(f"gate {g.id!r} is {g.kind}, not part of a G-tree")
        if g.args[0] in input_ix or g.args[1] in input_ix:
            if not (g.args[0] in input_ix and g.args[1] in input_ix):
                raise UsageError(f"gate {g.id!r} mixes a leaf with an internal wire")
            leaves.append(input_ix[g.args[0]])
            leaves.append(input_ix[g.args[1]])
        else:
            break
    m = len(leaves)
    if m < 4 or m & (m - 1) or c.size != m - 1:
        raise UsageError("not a full G-tree over its leaf row")
    return np.asarray(leaves)


def _wire_leaves(m: int, assignment: np.ndarray) -> Circuit:
    # CORR tree whose leaves read the given input indices.
    d = 2 * int(np.log2(m)) + 4
    tree = build_corr(d)
    names = [f"x{int(j)}" for j in assignment]
    remap = dict(zip(tree.inputs, names))
    gates = [
        Gate(g.id, g.kind, tuple(remap.get(a, a) for a in g.args)) for g in tree.gates
    ]
    return Circuit([f"x{i}" for i in range(m)], gates, tree.outputs)


def _agreement_patterns(m: int, flips: int):
    for b in (0, 1):
        for j in range(flips + 1):
            for pos in combinations(range(m), j):
                yield b, pos


def verify_apxmaj(
    c: Circuit,
    m: int,
    trials: int,
    rng: np.random.Generator,
    spec: FieldSpec | None = None,
    exhaustive_cap: int = 100_000,
) -> bool:
    """Check the 7/8-agreement contract.

    Boolean patterns with at most m/8 disagreements are enumerated
    exhaustively when there are few enough, sampled otherwise; then
    `trials` patterns get their disagreeing coordinates replaced by
    random nonzero field values.
    """
    if spec is None:
        spec = FieldSpec(4)
    flips = m // 8
    n_pat = 2 * sum(comb(m, j) for j in range(flips + 1))
    if n_pat <= exhaustive_cap:
        cases = list(_agreement_patterns(m, flips))
    else:
        cases = []
        for _ in range(exhaustive_cap):
            b = int(rng.integers(2))
            j = int(rng.integers(flips + 1))
            pos = tuple(rng.choice(m, size=j, replace=False)) if j else ()
            cases.append((b, pos))
    X = np.empty((m, len(cases)), dtype=spec.dtype)
    want = np.empty(len(cases), dtype=spec.dtype)
    for t, (b, pos) in enumerate(cases):
        X[:, t] = b
        for i in pos:
            X[i, t] = 1 - b
        want[t] = b
    if not np.array_equal(eval_plain_array(spec, c, X)[0], want):
        return False
    if trials > 0:
        X = np.empty((m, trials), dtype=spec.dtype)
        want = np.empty(trials, dtype=spec.dtype)
        for t in range(trials):
            b = int(rng.integers(2))
            j = int(rng.integers(flips + 1))
            X[:, t] = b
            if j:
                pos = rng.choice(m, size=j, replace=False)
                X[pos, t] = random_nonzero(spec, rng, j)
            want[t] = b
        if not np.array_equal(eval_plain_array(spec, c, X)[0], want):
            return False
    return True


def build_apxmaj(
    m: int,
    rng: np.random.Generator,
    retries: int = 64,
    verify_trials: int = 200,
    spec: FieldSpec | None = None,
) -> Circuit:
    """Approximate majority on m wires: a randomly wired CORR_{2 log m + 4}.

    Random wiring satisfies the agreement contract with overwhelming
    probability but not certainty, so each sample is verified and
    resampled on failure.
    """
    if m < 8 or m & (m - 1) != 0:
        raise ParameterError(f"input count must be a power of two >= 8, got {m}")
    failures = 0
    for _ in range(retries):
        c = _wire_leaves(m, rng.integers(m, size=16 * m * m))
        if verify_apxmaj(c, m, verify_trials, rng, spec=spec):
            return c
        failures += 1
    raise ConstructionError(
        f"no verified wiring for m={m} after {retries} attempts ({failures} rejected)"
    )
