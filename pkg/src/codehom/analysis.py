"""Monte Carlo harness for the quantitative functionality bounds.

Every stochastic claim is measured the same way: count successes over
trials, wrap a Wilson 95% interval around the rate, and compare failure
rates against their stated bound with a 3-sigma tolerance computed at
the bound itself. Reports merge associatively, so trial batches can be
split across seeds or workers and recombined.

The rank experiment realizes only the t selected key rows: the sampled
evaluation points of a key restricted to T are distributed exactly like
a fresh injective t-tuple, and the unimodular mixing factor is dropped
because an invertible right factor cannot change row rank.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import UsageError
from .booster import boost_arrays, boost_aux_gen, build_expander
from .circuit import build_apxmaj, build_corr, layerize
from .field import FieldSpec, random_distinct_batch, random_elements
from .hom import enc_k_threshold
from .linalg import rank_batch, vandermonde_array
from .reencrypt import aux_gen_basic, aux_is_good, chain_eval_arrays, chain_keygen
from .scheme import (
    Params,
    decrypt_batch,
    enc_membership_batch,
    encrypt_batch,
    keygen,
    noise_array,
)

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Score interval; never collapses to a point at the boundaries."""
    if trials <= 0:
        return (0.0, 1.0)
    ph = successes / trials
    zz = z * z
    den = 1.0 + zz / trials
    center = (ph + zz / (2 * trials)) / den
    half = z * np.sqrt(ph * (1 - ph) / trials + zz / (4 * trials * trials)) / den
    # the score interval touches the boundary exactly at 0 and T successes;
    # clamp so rounding cannot push it off the point estimate
    lo = 0.0 if successes == 0 else max(0.0, float(center - half))
    hi = 1.0 if successes == trials else min(1.0, float(center + half))
    return (lo, hi)


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    parameters: dict
    trials: int
    successes: int
    estimate: float
    interval: tuple[float, float]
    seconds: float

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise UsageError(f"{self.successes} successes in {self.trials} trials")
        lo, hi = self.interval
        if not lo <= self.estimate <= hi:
            raise UsageError("interval must contain the point estimate")


def _report(name: str, parameters: dict, trials: int, successes: int, t0: float) -> ExperimentReport:
    return ExperimentReport(
        name=name,
        parameters=parameters,
        trials=trials,
        successes=successes,
        estimate=successes / trials if trials else 0.0,
        interval=wilson_interval(successes, trials),
        seconds=time.perf_counter() - t0,
    )


def merge_reports(a: ExperimentReport, b: ExperimentReport) -> ExperimentReport:
    """Combine two trial batches of the same experiment."""
    if a.name != b.name or a.parameters != b.parameters:
        raise UsageError("only batches of the same experiment merge")
    trials = a.trials + b.trials
    successes = a.successes + b.successes
    return ExperimentReport(
        name=a.name,
        parameters=a.parameters,
        trials=trials,
        successes=successes,
        estimate=successes / trials if trials else 0.0,
        interval=wilson_interval(successes, trials),
        seconds=a.seconds + b.seconds,
    )


# ---------------------------------------------------------------------------
# Named experiments.


def rank_experiment(
    p: Params, t: int, s_overlap: int, trials: int, rng: np.random.Generator
) -> ExperimentReport:
    """Full-rank frequency of t public key rows, s_overlap of them trapdoored.

    Trapdoored rows keep only their first s/3 columns, so s/3 + 1 of
    them are already dependent; the deterministic deficiency criterion
    is s_overlap >= s/3 + 1 + max(t - r, 0).
    """
    if not 1 <= t <= p.n:
        raise UsageError(f"t={t} must lie in [1, n={p.n}]")
    if not 0 <= s_overlap <= min(t, p.s):
        raise UsageError(f"s_overlap={s_overlap} must lie in [0, min(t, s)={min(t, p.s)}]")
    if t - s_overlap > p.n - p.s:
        raise UsageError(
            f"infeasible overlap: {t - s_overlap} untrapped rows requested, "
            f"only {p.n - p.s} exist"
        )
    t0 = time.perf_counter()
    spec = p.field
    pts = random_distinct_batch(spec, rng, trials, t)
    M = vandermonde_array(spec, pts, p.r)
    M[:, :s_overlap, p.s // 3 :] = 0
    full = min(t, p.r)
    successes = int((rank_batch(spec, M) == full).sum())
    parameters = {
        "n": p.n, "r": p.r, "s": p.s, "k": spec.k, "q": spec.q,
        "t": t, "s_overlap": s_overlap,
    }
    return _report("rank of selected key rows", parameters, trials, successes, t0)


def rank_deficiency_constant(report: ExperimentReport) -> float:
    """deficiency * q / r^2 from a rank report; kept out of the report's
    parameters so trial batches stay mergeable."""
    q, r = report.parameters["q"], report.parameters["r"]
    return (1.0 - report.estimate) * q / (r * r)


def randomness_recovery_experiment(
    p: Params, trials: int, rng: np.random.Generator
) -> ExperimentReport:
    """Frequency of a noiseless first-r window in fresh encryption noise.

    A clean window lets an attacker solve the leading square system for
    the encryption randomness; only that window of the noise is drawn,
    coordinates being independent. Expected rate (1-eta)^r.
    """
    t0 = time.perf_counter()
    E = noise_array(p, rng, (trials, p.r))
    successes = int((E == 0).all(axis=1).sum())
    parameters = {"n": p.n, "r": p.r, "eta": p.eta, "expected": (1 - p.eta) ** p.r}
    return _report("noiseless randomness-recovery window", parameters, trials, successes, t0)


# ---------------------------------------------------------------------------
# Error budget: each proved bound against a measurement.


@dataclass(frozen=True)
class BudgetRow:
    name: str
    bound: float
    trials: int
    failures: int
    measured: float
    tolerance: float  # 3 sigma of the bound's binomial at this trial count
    passed: bool
    seconds: float
    parameters: dict = field(default_factory=dict)


def _budget_row(name, bound, trials, failures, t0, parameters) -> BudgetRow:
    measured = failures / trials if trials else 0.0
    tolerance = 3.0 * float(np.sqrt(bound * (1.0 - bound) / trials)) if trials else 0.0
    return BudgetRow(
        name=name,
        bound=bound,
        trials=trials,
        failures=failures,
        measured=measured,
        tolerance=tolerance,
        passed=measured <= bound + tolerance,
        seconds=time.perf_counter() - t0,
        parameters=parameters,
    )


def _encfail_row(trials: int, rng: np.random.Generator, eta_scale: float) -> BudgetRow:
    # decryption failure of a fresh encryption <= eta*s, any key, any message
    t0 = time.perf_counter()
    p = Params(n=24, r=9, s=3, field=FieldSpec(8), eta=0.05)
    pk, sk = keygen(p, rng)
    ms = random_elements(p.field, rng, trials)
    C = encrypt_batch(pk, ms, rng, eta=p.eta * eta_scale)
    failures = int((decrypt_batch(sk, C) != ms).sum())
    return _budget_row(
        "decryption failure <= eta*s", p.eta * p.s, trials, failures, t0,
        {"n": p.n, "s": p.s, "eta": p.eta, "eta_scale": eta_scale},
    )


def _reenc_row(trials: int, rng: np.random.Generator) -> BudgetRow:
    # a freshly generated reencryption key is good except w.p. n*eta'*s'
    t0 = time.perf_counter()
    p = Params(n=16, r=6, s=3, field=FieldSpec(4), eta=0.004)
    failures = 0
    for _ in range(trials):
        _, sk_src = keygen(p, rng)
        pk_tgt, sk_tgt = keygen(p, rng)
        aux = aux_gen_basic(sk_src, pk_tgt, rng)
        failures += not aux_is_good(aux, sk_src, sk_tgt)
    return _budget_row(
        "reencryption aux good except n*eta'*s'", p.n * p.eta * p.s, trials, failures, t0,
        {"n": p.n, "s": p.s, "eta_tgt": p.eta},
    )


def _corr_row(trials: int, rng: np.random.Generator) -> BudgetRow:
    # CORR_2 over a noiseless chain corrects rate-eta0 input corruption
    # to 6*eta0^2
    t0 = time.perf_counter()
    eta0 = 0.1
    base = Params(n=16, r=6, s=3, field=FieldSpec(4), eta=0.0)
    keys = chain_keygen(16, 0.0, 2, rng, base=base)
    lc = layerize(build_corr(2))
    level_params = [p for p, _, _ in keys.levels]
    links = [a.Z for a in keys.aux]
    ms = rng.integers(2, size=trials, dtype=np.uint8)
    C = encrypt_batch(keys.levels[0][1], np.repeat(ms, 4), rng, eta=eta0 / base.s)
    X = C.reshape(trials, 4, 16).transpose(1, 0, 2)
    out = chain_eval_arrays(level_params, links, lc, X)[0]
    failures = int((decrypt_batch(keys.levels[-1][2], out) != ms).sum())
    return _budget_row(
        "corrected block error <= 6*eta0^2", 6 * eta0 * eta0, trials, failures, t0,
        {"n": 16, "eta0": eta0, "per_input_eta": eta0 / base.s},
    )


def _chain_row(trials: int, rng: np.random.Generator) -> BudgetRow:
    # chain setup error <= sum of per-link aux failure bounds
    t0 = time.perf_counter()
    base = Params(n=16, r=6, s=3, field=FieldSpec(4), eta=0.002)
    d = 3
    failures = 0
    for _ in range(trials):
        keys = chain_keygen(16, 0.0, d, rng, base=base)
        good = all(
            aux_is_good(keys.aux[i], keys.levels[i][2], keys.levels[i + 1][2])
            for i in range(d)
        )
        failures += not good
    return _budget_row(
        "chain setup error <= d*kappa", d * 16 * base.eta * base.s, trials, failures, t0,
        {"n": 16, "d": d, "eta": base.eta},
    )


def _boost_row(trials: int, rng: np.random.Generator) -> BudgetRow:
    # noiseless boost honors the 15/16 -> 31/32 contract surely, so the
    # bound (the key error) is zero and any failure counts
    t0 = time.perf_counter()
    p = Params(n=16, r=6, s=3, field=FieldSpec(4), eta=0.0)
    k, bad = 32, 2
    graph = build_expander(k, 16, 0.6, rng)
    apx = build_apxmaj(16, rng, verify_trials=60, spec=p.field)
    pk0, sk0 = keygen(p, rng)
    pk1, sk1 = keygen(p, rng)
    aux = boost_aux_gen(sk0, pk1, graph, apx, rng, mid_n=4)
    failures = 0
    for _ in range(trials):
        m = int(rng.integers(2))
        C = encrypt_batch(pk0, np.full(k, m), rng)
        C[rng.choice(k, size=bad, replace=False)] = random_elements(p.field, rng, (bad, p.n))
        out = boost_arrays(aux, C)
        good = int(enc_membership_batch(sk1, np.full(k, m), out).sum())
        failures += good < enc_k_threshold(k)
    return _budget_row(
        "boost contract at k/16 corruption", 0.0, trials, failures, t0,
        {"n": p.n, "k": k, "b": 16, "corrupted": bad},
    )


BUDGET_TRIALS = {"encfail": 4000, "reenc": 1200, "corr": 2500, "chain": 400, "boost": 30}


def error_budget(
    rng: np.random.Generator,
    trials: dict | None = None,
    negative_control: bool = False,
) -> list[BudgetRow]:
    """Measure every proved error bound at desk parameters.

    negative_control doubles the noise actually used for the first row
    while leaving its bound alone; the row must then fail, which keeps
    the harness honest about its own power.
    """
    t = dict(BUDGET_TRIALS, **(trials or {}))
    return [
        _encfail_row(t["encfail"], rng, 2.0 if negative_control else 1.0),
        _reenc_row(t["reenc"], rng),
        _corr_row(t["corr"], rng),
        _chain_row(t["chain"], rng),
        _boost_row(t["boost"], rng),
    ]


# ---------------------------------------------------------------------------
# Emitters.


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def to_json(obj) -> str:
    """JSON for a report, a budget row, or a list of either."""
    if isinstance(obj, list):
        return json.dumps([asdict(o) for o in obj], indent=2, default=_plain)
    return json.dumps(asdict(obj), indent=2, default=_plain)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def reports_text(reports: list[ExperimentReport]) -> str:
    rows = [
        [
            r.name,
            str(r.trials),
            str(r.successes),
            f"{r.estimate:.6f}",
            f"[{r.interval[0]:.6f}, {r.interval[1]:.6f}]",
            f"{r.seconds:.2f}s",
        ]
        for r in reports
    ]
    return _table(["experiment", "trials", "successes", "estimate", "95% interval", "time"], rows)


def budget_text(rows: list[BudgetRow]) -> str:
    body = [
        [
            r.name,
            f"{r.bound:.6f}",
            f"{r.measured:.6f}",
            f"{r.tolerance:.6f}",
            str(r.trials),
            "pass" if r.passed else "FAIL",
        ]
        for r in rows
    ]
    return _table(["bound", "limit", "measured", "3-sigma", "trials", "verdict"], body)


def reports_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["name", "trials", "successes", "estimate", "lo", "hi", "seconds", "parameters"])
    for r in reports:
        w.writerow([
            r.name, r.trials, r.successes, f"{r.estimate:.8f}",
            f"{r.interval[0]:.8f}", f"{r.interval[1]:.8f}", f"{r.seconds:.4f}",
            json.dumps(r.parameters, default=_plain),
        ])
    return buf.getvalue()
