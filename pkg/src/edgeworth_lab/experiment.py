"""Config-driven experiment runner and command-line interface.

A single JSON document describes the model, the horizons, the replicate
budget and the requested tasks; the runner writes a machine-readable JSON
report plus CSV tables.  All randomness derives from the config seed through
per-task, per-horizon, per-replicate stream keys, and cross-worker reduction
is ordered by replicate index, so output files are byte-identical for any
worker count.

CSV schema (``results.csv``)::

    task,n,N,target,metric,value,se,verdict,seed_path

Pricing rows additionally go to ``pricing.csv`` with columns
``K,n,mode,price,se,oracle_gap``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics, metrics, moments, pricing, surrogate
from .edgeworth import EdgeworthApprox
from .errors import InfeasibleSkewError, ParameterError
from .models import (GarchSpec, IteratedSpec, LinearSpec, ModelConfig,
                     TransformSpec, VolterraSpec, estimate_centering,
                     simulate_path, simulate_sums_range)
from .rngkit import DistSpec, StreamKey

__all__ = ["ExperimentConfig", "RunResult", "load_config", "run",
           "convergence_study", "main"]

TASKS = ("cumulants", "edgeworth", "wasserstein", "dependence",
         "assumptions", "cf-scan", "be-characteristic", "price")
_TASK_ID = {name: i + 1 for i, name in enumerate(TASKS)}
_CONVERGENCE_ID = len(TASKS) + 1
_CENTERING_ID = len(TASKS) + 2

_PARALLEL_BLOCK = 16384
_CSV_COLUMNS = ("task", "n", "N", "target", "metric", "value", "se",
                "verdict", "seed_path")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    model: ModelConfig
    n_list: tuple[int, ...]
    replicates: int
    tasks: tuple[str, ...]
    workers: int = 0
    out_dir: str = "out"
    warn_only: bool = False
    centering_replicates: int = 50_000
    blocks: dict = field(default_factory=dict)   # per-task parameter blocks


def _fail(path: str, message: str) -> ParameterError:
    return ParameterError(f"{path}: {message}")


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise _fail(f"{path}.{key}", "missing required field")
        return default
    return d[key]


def _coerce_pairs(raw, path: str) -> tuple[tuple[float, float], ...]:
    try:
        return tuple((float(a), float(b)) for a, b in raw)
    except (TypeError, ValueError):
        raise _fail(path, "expected a list of [x, y] pairs") from None


def _parse_family(d: dict, path: str):
    kind = _get(d, "kind", path)
    if kind == "garch":
        return GarchSpec(
            p=int(_get(d, "p", path)), q=int(_get(d, "q", path)),
            g_coeffs=_coerce_pairs(_get(d, "g_coeffs", path), f"{path}.g_coeffs"),
            c_coeffs=_coerce_pairs(_get(d, "c_coeffs", path), f"{path}.c_coeffs"),
            lam=float(_get(d, "lam", path, required=False, default=1.0)),
            burn_in=int(_get(d, "burn_in", path, required=False, default=1000)))
    if kind == "iterated":
        clamp = _get(d, "clamp", path, required=False)
        return IteratedSpec(
            a=float(_get(d, "a", path)), b=float(_get(d, "b", path)),
            c=float(_get(d, "c", path, required=False, default=0.0)),
            d=float(_get(d, "d", path, required=False, default=0.0)),
            v0=float(_get(d, "v0", path, required=False, default=0.0)),
            clamp=tuple(float(x) for x in clamp) if clamp is not None else None,
            burn_in=int(_get(d, "burn_in", path, required=False, default=1000)))
    if kind == "linear":
        return LinearSpec(
            kernel=str(_get(d, "kernel", path)),
            m_max=int(_get(d, "m_max", path, required=False, default=64)),
            ratio=float(_get(d, "ratio", path, required=False, default=0.5)),
            theta=float(_get(d, "theta", path, required=False, default=2.0)),
            coeffs=tuple(_get(d, "coeffs", path, required=False, default=())),
            inner=str(_get(d, "inner", path, required=False, default="identity")),
            outer=str(_get(d, "outer", path, required=False, default="identity")),
            outer_holder=tuple(_get(d, "outer_holder", path, required=False,
                                    default=(1.0, 0.0, 1.0))))
    if kind == "volterra":
        return VolterraSpec(
            orders=int(_get(d, "orders", path, required=False, default=2)),
            kernel=str(_get(d, "kernel", path)),
            m_max=int(_get(d, "m_max", path, required=False, default=32)),
            base=float(_get(d, "base", path, required=False, default=1.0)),
            ratio=float(_get(d, "ratio", path, required=False, default=0.5)),
            coeffs=tuple(_get(d, "coeffs", path, required=False, default=())))
    raise _fail(f"{path}.kind", f"unknown family kind {kind!r}")


def _parse_transform(d: dict, path: str) -> TransformSpec:
    kind = str(_get(d, "kind", path, required=False, default="identity"))
    holder = _get(d, "holder", path, required=False)
    return TransformSpec(
        kind=kind,
        order=int(_get(d, "order", path, required=False, default=2)),
        exponent=float(_get(d, "exponent", path, required=False, default=1.0)),
        signed=bool(_get(d, "signed", path, required=False, default=True)),
        coeffs=tuple(_get(d, "coeffs", path, required=False, default=())),
        holder=tuple(float(x) for x in holder) if holder is not None else None,
        centering=float(_get(d, "centering", path, required=False, default=0.0)))


def _parse_model(d: dict, path: str) -> ModelConfig:
    try:
        family = _parse_family(_get(d, "family", path), f"{path}.family")
        innovation = DistSpec.from_dict(_get(d, "innovation", path))
        transform = _parse_transform(
            _get(d, "transform", path, required=False, default={}),
            f"{path}.transform")
        return ModelConfig(family=family, innovation=innovation,
                           transform=transform,
                           n=int(_get(d, "n", path, required=False, default=256)))
    except ParameterError:
        raise
    except (TypeError, ValueError) as err:
        raise _fail(path, str(err)) from None


def _family_to_dict(fam) -> dict:
    if isinstance(fam, GarchSpec):
        return {"kind": "garch", "p": fam.p, "q": fam.q,
                "g_coeffs": [list(x) for x in fam.g_coeffs],
                "c_coeffs": [list(x) for x in fam.c_coeffs],
                "lam": fam.lam, "burn_in": fam.burn_in}
    if isinstance(fam, IteratedSpec):
        return {"kind": "iterated", "a": fam.a, "b": fam.b, "c": fam.c,
                "d": fam.d, "v0": fam.v0,
                "clamp": list(fam.clamp) if fam.clamp else None,
                "burn_in": fam.burn_in}
    if isinstance(fam, LinearSpec):
        return {"kind": "linear", "kernel": fam.kernel, "m_max": fam.m_max,
                "ratio": fam.ratio, "theta": fam.theta,
                "coeffs": list(fam.coeffs), "inner": fam.inner,
                "outer": fam.outer, "outer_holder": list(fam.outer_holder)}
    return {"kind": "volterra", "orders": fam.orders, "kernel": fam.kernel,
            "m_max": fam.m_max, "base": fam.base, "ratio": fam.ratio,
            "coeffs": list(fam.coeffs)}


def model_to_dict(model: ModelConfig) -> dict:
    t = model.transform
    return {
        "family": _family_to_dict(model.family),
        "innovation": model.innovation.to_dict(),
        "transform": {"kind": t.kind, "order": t.order, "exponent": t.exponent,
                      "signed": t.signed, "coeffs": list(t.coeffs),
                      "holder": list(t.holder) if t.holder else None,
                      "centering": t.centering},
        "n": model.n,
    }


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise _fail(str(path), f"invalid JSON: {err}") from None
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    version = _get(raw, "schema_version", "config", required=False, default=1)
    if version != 1:
        raise _fail("config.schema_version", f"unsupported version {version}")
    model = _parse_model(_get(raw, "model", "config"), "config.model")
    n_list = tuple(int(n) for n in
                   _get(raw, "n_list", "config", required=False,
                        default=[model.n]))
    if not n_list or min(n_list) < 1:
        raise _fail("config.n_list", "need at least one horizon >= 1")
    tasks = tuple(_get(raw, "tasks", "config"))
    for t in tasks:
        if t not in TASKS:
            raise _fail("config.tasks", f"unknown task {t!r}; known: {TASKS}")
    blocks = {t: raw.get(t, {}) for t in TASKS}
    if "price" in tasks and "K" not in blocks["price"]:
        raise _fail("price.K", "missing required field")
    blocks["convergence"] = raw.get("convergence", {})
    return ExperimentConfig(
        seed=int(_get(raw, "seed", "config")),
        model=model,
        n_list=n_list,
        replicates=int(_get(raw, "replicates", "config")),
        tasks=tasks,
        workers=int(_get(raw, "workers", "config", required=False, default=0)),
        out_dir=str(_get(raw, "out_dir", "config", required=False, default="out")),
        warn_only=bool(_get(raw, "warn_only", "config", required=False,
                            default=False)),
        centering_replicates=int(_get(raw, "centering_replicates", "config",
                                      required=False, default=50_000)),
        blocks=blocks)


# ---------------------------------------------------------------------------
# parallel replicate sums
# ---------------------------------------------------------------------------

def _sum_block(args) -> np.ndarray:
    model, key, lo, hi = args
    return simulate_sums_range(model, key, lo, hi)


class _Runner:
    """Maps replicate blocks over an optional process pool, in index order."""

    def __init__(self, workers: int):
        self.workers = workers
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
        return False

    def sums(self, model: ModelConfig, key: StreamKey, count: int) -> np.ndarray:
        blocks = [(model, key, lo, min(lo + _PARALLEL_BLOCK, count))
                  for lo in range(0, count, _PARALLEL_BLOCK)]
        if self._pool is None or len(blocks) == 1:
            parts = [_sum_block(b) for b in blocks]
        else:
            parts = list(self._pool.map(_sum_block, blocks))
        return np.concatenate(parts)


def _resolve_workers(config: ExperimentConfig, cli_workers: int | None) -> int:
    if cli_workers is not None:
        workers = cli_workers
    else:
        env = os.environ.get("EDGEWORTH_LAB_WORKERS")
        if env is not None:
            workers = int(env)
        else:
            workers = config.workers
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, workers)


# ---------------------------------------------------------------------------
# rows and reports
# ---------------------------------------------------------------------------

def _row(task: str, n: int, count: int, target: str, metric: str, value,
         se=None, verdict: str = "", seed_path: str = "") -> dict:
    return {"task": task, "n": n, "N": count, "target": target,
            "metric": metric, "value": value, "se": se, "verdict": verdict,
            "seed_path": seed_path}


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, rows: list[dict], columns) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


@dataclass
class RunResult:
    exit_code: int
    rows: list[dict]
    pricing_rows: list[dict]
    report: dict
    out_dir: Path


# ---------------------------------------------------------------------------
# shared task helpers
# ---------------------------------------------------------------------------

def _centered_model(config: ExperimentConfig, n: int, runner: _Runner):
    """Model at horizon n with the transform centering resolved.

    Identity transforms of mean-zero innovations are exactly centered; any
    other combination gets an estimated E f(Y) with its standard error.
    """
    model = config.model.with_n(n)
    if model.transform.centering != 0.0:
        return model, model.transform.centering, 0.0
    if model.transform.kind == "identity" and model.innovation.mean() == 0.0:
        return model, 0.0, 0.0
    key = StreamKey(config.seed, (_CENTERING_ID, n))
    est = estimate_centering(model, config.centering_replicates, key)
    return model.with_centering(est.mu), est.mu, est.se


def _w1_bounds(sample: np.ndarray, cdf, scale: float) -> tuple[float, float]:
    lo = min(float(sample[0]), -8.0 * scale)
    hi = max(float(sample[-1]), 8.0 * scale)
    for _ in range(40):
        probe = np.asarray(cdf(np.array([lo, hi])), dtype=float)
        if probe[0] <= 1e-8 and probe[1] >= 1.0 - 1e-8:
            return lo, hi
        span = hi - lo
        if probe[0] > 1e-8:
            lo -= 0.25 * span
        if probe[1] < 1.0 - 1e-8:
            hi += 0.25 * span
    return lo, hi


# ---------------------------------------------------------------------------
# task implementations
# ---------------------------------------------------------------------------

def _task_cumulants(config, n, model, runner, key, rows, frag):
    count = config.replicates
    sums = runner.sums(model, key, count)
    est = moments.estimate_cumulants(sums, n)
    path = key.pretty()
    verdict = "flag" if not est.ok_for_expansion() else ""
    rows.append(_row("cumulants", n, count, "sum", "s2", est.s2, est.se_s2,
                     verdict, path))
    rows.append(_row("cumulants", n, count, "sum", "k3", est.k3, est.se_k3,
                     "", path))
    x_path, _ = simulate_path(model.with_n(max(4 * n, 4000)), key.child(0xA11))
    bandwidth = max(1, round(len(x_path) ** (1.0 / 3.0)))
    lrv = moments.longrun_variance(x_path, bandwidth)
    rows.append(_row("cumulants", n, count, "path", "lrv", lrv.value, None,
                     "flag" if lrv.negative else "", path))
    frag["cumulants"] = {"s2": est.s2, "k3": est.k3, "se_s2": est.se_s2,
                         "se_k3": est.se_k3, "lrv": lrv.value,
                         "lrv_bandwidth": bandwidth}


def _task_edgeworth(config, n, model, runner, key, rows, frag):
    count = config.replicates
    block = config.blocks.get("edgeworth", {})
    refine = int(block.get("refine", 8))
    sums = np.sort(runner.sums(model, key, count))
    est = moments.estimate_cumulants(sums, n)
    s = math.sqrt(est.s2)
    approx = EdgeworthApprox(s=s, k3=est.k3, mode="classical")
    from scipy.special import ndtr
    path = key.pretty()
    d_edge = metrics.kolmogorov_distance(
        sums, approx.cdf, refine=0 if approx.is_monotone() else refine)
    d_gauss = metrics.kolmogorov_distance(sums, lambda x: ndtr(x / s))
    rows.append(_row("edgeworth", n, count, "edgeworth", "kolmogorov",
                     d_edge, None, "", path))
    rows.append(_row("edgeworth", n, count, "gaussian", "kolmogorov",
                     d_gauss, None, "", path))
    frag["edgeworth"] = {"kolmogorov_edgeworth": d_edge,
                         "kolmogorov_gaussian": d_gauss,
                         "s2": est.s2, "k3": est.k3,
                         "monotone": approx.is_monotone()}


def _task_wasserstein(config, n, model, runner, key, rows, frag):
    count = config.replicates
    sums = np.sort(runner.sums(model, key, count))
    est = moments.estimate_cumulants(sums, n)
    s = math.sqrt(est.s2)
    law = surrogate.from_cumulants(est.s2, est.k3)
    from scipy.special import ndtr

    def gauss_cdf(x):
        return ndtr(np.asarray(x, dtype=float) / s)

    path = key.pretty()
    out = {}
    for name, cdf in (("surrogate", law.cdf), ("gaussian", gauss_cdf)):
        lo, hi = _w1_bounds(sums, cdf, s)
        fast = metrics.cached_cdf(cdf, lo, hi)
        w1 = metrics.wasserstein1_cdf(sums, fast, lo, hi)
        rows.append(_row("wasserstein", n, count, name, "wasserstein1",
                         w1, None, "", path))
        out[name] = w1
    frag["wasserstein"] = {**out, "s2": est.s2, "k3": est.k3,
                           "sigma_z2": law.sigma_z2,
                           "gamma_shape": law.gamma_shape,
                           "gamma_rate": law.gamma_rate}


def _task_dependence(config, n, model, runner, key, rows, frag):
    block = config.blocks.get("dependence", {})
    p = float(block.get("p", 2.0))
    lags = [int(l) for l in block.get("lags", list(range(1, 21)))]
    count = int(block.get("replicates", 20_000))
    profile = diagnostics.dependence_profile(model, p, lags, count, key)
    path = key.pretty()
    for i, lag in enumerate(profile.lags):
        rows.append(_row("dependence", n, count, "star", f"lambda_lag{lag}",
                         float(profile.lambda_hat[i]), float(profile.se[i]),
                         "flag" if profile.all_zero else "", path))
    if profile.fit is not None:
        rows.append(_row("dependence", n, count, "star", "fit_slope",
                         profile.fit.slope, None, "", path))
        rows.append(_row("dependence", n, count, "star", "fit_r2",
                         profile.fit.r2, None, "", path))
    frag["dependence"] = {
        "p": p, "lags": list(profile.lags),
        "lambda_hat": [float(v) for v in profile.lambda_hat],
        "se": [float(v) for v in profile.se],
        "all_zero": profile.all_zero,
        "fit": dataclasses.asdict(profile.fit) if profile.fit else None}


def _task_assumptions(config, n, model, runner, key, rows, frag):
    block = config.blocks.get("assumptions", {})
    q = float(block.get("q", 2.0))
    delta = float(block.get("delta", 0.1))
    xi_grid = np.asarray(block.get("xi_grid", [0.5, 1.0, 2.0, 3.0]), dtype=float)
    n_outer = int(block.get("n_outer", 2000))
    n_inner = int(block.get("n_inner", 4000))
    count = int(block.get("replicates", 10_000))
    path = key.pretty()
    failures = []
    out = {}

    fam = model.family
    if isinstance(fam, GarchSpec):
        g = diagnostics.gamma_c(fam, model.innovation, q)
        verdict = "pass" if g.stationary else "fail"
        rows.append(_row("assumptions", n, count, "family", "gamma_c",
                         g.value, g.se or None, verdict, path))
        out["gamma_c"] = {"value": g.value, "per_lag": list(g.per_lag),
                          "method": g.method, "stationary": g.stationary}
        if not g.stationary:
            failures.append("gamma_c")
    elif isinstance(fam, IteratedSpec):
        c = diagnostics.contraction_coefficient(fam, model.innovation, q,
                                                delta=delta)
        verdict = "pass" if c.passes else "fail"
        rows.append(_row("assumptions", n, count, "family", "lq_contraction",
                         c.lq_norm, None, verdict, path))
        rows.append(_row("assumptions", n, count, "family", "smallball_sup",
                         c.smallball_sup, None, verdict, path))
        out["contraction"] = dataclasses.asdict(c)
        if not c.passes:
            failures.append("contraction")
    elif isinstance(fam, LinearSpec):
        h_beta = model.transform.holder_triple(n)[2]
        partial, converges = diagnostics.linear_kernel_check(fam, h_beta)
        verdict = "pass" if converges else "fail"
        rows.append(_row("assumptions", n, count, "family", "kernel_sum",
                         partial, None, verdict, path))
        out["kernel_sum"] = {"partial": partial, "converges": converges}
        if not converges:
            failures.append("kernel_sum")
    else:
        h_beta = model.transform.holder_triple(n)[2]
        partial, converges = diagnostics.volterra_kernel_check(
            fam, model.innovation, q, h_beta)
        rows.append(_row("assumptions", n, count, "family", "kernel_sum",
                         partial, None, "pass", path))
        out["kernel_sum"] = {"partial": partial, "converges": converges}

    small_ball = model.innovation.mass_near_zero()
    rows.append(_row("assumptions", n, count, "innovation", "smallball_mass",
                     int(small_ball), None, "pass" if small_ball else "fail",
                     path))
    if not small_ball:
        failures.append("smallball")

    nl = diagnostics.nonlattice_check(model, xi_grid, n_outer, n_inner,
                                      key.child(1))
    for i, xi in enumerate(nl.xi):
        verdict = "pass" if nl.passes[i] else "fail"
        rows.append(_row("assumptions", n, n_outer, "nonlattice",
                         f"cf_inner_xi{xi:g}", float(nl.estimate[i]),
                         float(nl.se[i]), verdict, key.child(1).pretty()))
    if not nl.overall:
        failures.append("nonlattice")
    out["nonlattice"] = {"xi": [float(v) for v in nl.xi],
                         "estimate": [float(v) for v in nl.estimate],
                         "overall": nl.overall}

    sums = runner.sums(model, key.child(2), count)
    est = moments.estimate_cumulants(sums, n)
    positive = est.s2 - 4.0 * est.se_s2 > 0.0
    rows.append(_row("assumptions", n, count, "sum", "s2_positive",
                     est.s2, est.se_s2, "pass" if positive else "fail",
                     key.child(2).pretty()))
    if not positive:
        failures.append("s2_positive")
    out["s2"] = {"value": est.s2, "se": est.se_s2, "positive": positive}

    frag["assumptions"] = out
    return failures


def _task_cf_scan(config, n, model, runner, key, rows, frag):
    block = config.blocks.get("cf-scan", {})
    a = float(block.get("a", 1.0))
    b = float(block.get("b", 5.0))
    grid_size = int(block.get("grid_size", 128))
    count = config.replicates
    sums = runner.sums(model, key, count)
    scan = metrics.cf_sup_scan(sums, a, b, grid_size)
    path = key.pretty()
    rows.append(_row("cf-scan", n, count, "empirical", "cf_sup", scan.sup,
                     1.0 / math.sqrt(count), "", path))
    rows.append(_row("cf-scan", n, count, "empirical", "cf_argmax",
                     scan.argmax_xi, None, "", path))
    frag["cf-scan"] = {"a": a, "b": b, "sup": scan.sup,
                       "argmax_xi": scan.argmax_xi,
                       "modulus": [float(v) for v in scan.modulus]}


def _task_be_characteristic(config, n, model, runner, key, rows, frag):
    block = config.blocks.get("be-characteristic", {})
    a = float(block.get("a", 1.0))
    doublings = int(block.get("b_doublings", 10))
    x_points = int(block.get("x_grid_size", 129))
    count = int(block.get("replicates", min(config.replicates, 20_000)))
    sums = runner.sums(model, key, count)
    est = moments.estimate_cumulants(sums, n)
    b_grid = a * 2.0 ** np.arange(doublings + 1)
    x_grid = np.linspace(-8.0 * math.sqrt(est.s2), 8.0 * math.sqrt(est.s2),
                         x_points)
    cf = metrics.cf_from_sample(sums)
    value = metrics.berry_esseen_characteristic(cf, a, b_grid, x_grid)
    path = key.pretty()
    rows.append(_row("be-characteristic", n, count, "empirical",
                     "be_characteristic", value, None, "", path))
    frag["be-characteristic"] = {"a": a, "value": value,
                                 "b_grid": [float(b) for b in b_grid]}


def _task_price(config, n, model, runner, key, rows, frag, pricing_rows):
    block = config.blocks.get("price", {})
    strikes = block["K"]
    if not isinstance(strikes, (list, tuple)):
        strikes = [strikes]
    strikes = [float(k) for k in strikes]
    count = config.replicates
    drift_cfg = block.get("drift")
    if drift_cfg is None:
        drift = math.sqrt(n) * model.transform.centering
        drift_se = 0.0
    else:
        drift = float(drift_cfg)
        drift_se = 0.0
    sums = runner.sums(model, key, count)
    est = moments.estimate_cumulants(sums, n)
    s = math.sqrt(est.s2)
    path = key.pretty()
    out = []
    for strike in strikes:
        pay = np.maximum(strike - np.exp(sums + drift), 0.0)
        mc = float(pay.mean())
        mc_se = float(pay.std(ddof=1) / math.sqrt(count))
        edge = pricing.price_put_edgeworth(est, drift, strike)
        oracle = pricing.price_put_gaussian_oracle(s, strike, drift)
        for mode, value, se in (("mc", mc, mc_se), ("edgeworth", edge, None),
                                ("gaussian-oracle", oracle, None)):
            rows.append(_row("price", n, count, mode, f"price_K{strike:g}",
                             value, se, "", path))
            pricing_rows.append({"K": strike, "n": n, "mode": mode,
                                 "price": value, "se": se,
                                 "oracle_gap": value - oracle})
        out.append({"K": strike, "mc": mc, "mc_se": mc_se, "edgeworth": edge,
                    "gaussian_oracle": oracle})
    frag["price"] = {"drift": drift, "drift_se": drift_se, "prices": out}


# ---------------------------------------------------------------------------
# run / convergence
# ---------------------------------------------------------------------------

def run(config: ExperimentConfig, cli_workers: int | None = None,
        out_dir: str | None = None, warn_only: bool | None = None) -> RunResult:
    """Execute every requested task at every horizon and write reports."""
    workers = _resolve_workers(config, cli_workers)
    warn = config.warn_only if warn_only is None else warn_only
    out_path = Path(out_dir if out_dir is not None else config.out_dir)
    out_path.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    pricing_rows: list[dict] = []
    fragments: dict = {}
    assumption_failures: list[str] = []
    errors: list[str] = []

    with _Runner(workers) as runner:
        for n_index, n in enumerate(config.n_list):
            model, mu, mu_se = _centered_model(config, n, runner)
            frag = fragments.setdefault(str(n), {})
            frag["centering"] = {"mu": mu, "se": mu_se}
            for task in config.tasks:
                key = StreamKey(config.seed, (_TASK_ID[task], n_index))
                try:
                    if task == "cumulants":
                        _task_cumulants(config, n, model, runner, key, rows, frag)
                    elif task == "edgeworth":
                        _task_edgeworth(config, n, model, runner, key, rows, frag)
                    elif task == "wasserstein":
                        _task_wasserstein(config, n, model, runner, key, rows, frag)
                    elif task == "dependence":
                        _task_dependence(config, n, model, runner, key, rows, frag)
                    elif task == "assumptions":
                        failed = _task_assumptions(config, n, model, runner,
                                                   key, rows, frag)
                        assumption_failures.extend(
                            f"n={n}:{name}" for name in failed)
                    elif task == "cf-scan":
                        _task_cf_scan(config, n, model, runner, key, rows, frag)
                    elif task == "be-characteristic":
                        _task_be_characteristic(config, n, model, runner, key,
                                                rows, frag)
                    elif task == "price":
                        _task_price(config, n, model, runner, key, rows, frag,
                                    pricing_rows)
                except InfeasibleSkewError as err:
                    message = (f"surrogate infeasible at n={n}: "
                               f"max |k3| = {err.max_abs_k3!r} ({err})")
                    errors.append(message)
                    rows.append(_row(task, n, config.replicates, "", "error",
                                     None, None, "error", key.pretty()))
                except Exception as err:  # noqa: BLE001 - report, don't hide
                    errors.append(f"{task} at n={n}: {err}")
                    rows.append(_row(task, n, config.replicates, "", "error",
                                     None, None, "error", key.pretty()))

    if errors:
        exit_code = 1
    elif assumption_failures and not warn:
        exit_code = 2
    else:
        exit_code = 0

    report = {
        "schema_version": 1,
        "library_version": __version__,
        "seed": config.seed,
        "model": model_to_dict(config.model),
        "n_list": list(config.n_list),
        "replicates": config.replicates,
        "tasks": list(config.tasks),
        "results": fragments,
        "assumption_failures": assumption_failures,
        "errors": errors,
        "exit_code": exit_code,
    }
    _write_csv(out_path / "results.csv", rows, _CSV_COLUMNS)
    if pricing_rows:
        _write_csv(out_path / "pricing.csv", pricing_rows,
                   ("K", "n", "mode", "price", "se", "oracle_gap"))
    (out_path / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    return RunResult(exit_code=exit_code, rows=rows, pricing_rows=pricing_rows,
                     report=report, out_dir=out_path)


def convergence_study(config: ExperimentConfig, cli_workers: int | None = None,
                      out_dir: str | None = None) -> RunResult:
    """Error-decay study over a geometric horizon list.

    For each target law (gaussian, skew-corrected, surrogate) and each metric
    (kolmogorov, wasserstein1) this fits the log-log slope of the error
    against the horizon, with a bootstrap confidence interval over seed
    batches, and reports whether the corrected approximation beats the
    gaussian one at every horizon.
    """
    if len(config.n_list) < 3:
        raise ParameterError("convergence study needs at least 3 horizons")
    ratios = [config.n_list[i + 1] / config.n_list[i]
              for i in range(len(config.n_list) - 1)]
    if len(set(ratios)) > 1 and (max(ratios) - min(ratios)) > 1e-9:
        raise ParameterError("convergence study needs a geometric n_list")
    block = config.blocks.get("convergence", {})
    batches = int(block.get("seed_batches", 5))
    boot = int(block.get("bootstrap", 500))
    workers = _resolve_workers(config, cli_workers)
    out_path = Path(out_dir if out_dir is not None else config.out_dir)
    out_path.mkdir(parents=True, exist_ok=True)

    targets = ("gaussian", "edgeworth", "surrogate")
    mets = ("kolmogorov", "wasserstein1")
    err = {(t, m): np.zeros((len(config.n_list), batches))
           for t in targets for m in mets}

    from scipy.special import ndtr

    with _Runner(workers) as runner:
        for n_index, n in enumerate(config.n_list):
            model, _, _ = _centered_model(config, n, runner)
            for batch in range(batches):
                key = StreamKey(config.seed, (_CONVERGENCE_ID, n_index, batch))
                sums = np.sort(runner.sums(model, key, config.replicates))
                est = moments.estimate_cumulants(sums, n)
                s = math.sqrt(est.s2)
                approx = EdgeworthApprox(s=s, k3=est.k3, mode="classical")
                law = surrogate.from_cumulants(est.s2, est.k3)

                def gauss_cdf(x, s=s):
                    return ndtr(np.asarray(x, dtype=float) / s)

                cdfs = {"gaussian": gauss_cdf, "edgeworth": approx.cdf,
                        "surrogate": law.cdf}
                for t in targets:
                    refine = 8 if t == "edgeworth" else 0
                    err[(t, "kolmogorov")][n_index, batch] = \
                        metrics.kolmogorov_distance(sums, cdfs[t], refine=refine)
                    lo, hi = _w1_bounds(sums, cdfs[t], s)
                    fast = metrics.cached_cdf(cdfs[t], lo, hi)
                    err[(t, "wasserstein1")][n_index, batch] = \
                        metrics.wasserstein1_cdf(sums, fast, lo, hi)

    log_n = np.log(np.asarray(config.n_list, dtype=float))
    rng = np.random.Generator(np.random.Philox(
        StreamKey(config.seed, (_CONVERGENCE_ID, 0xB007)).seed_sequence()))
    rows: list[dict] = []
    table: dict = {}
    for (t, m), e in err.items():
        pooled = e.mean(axis=1)
        slope = float(np.polyfit(log_n, np.log(pooled), 1)[0])
        boot_slopes = np.empty(boot)
        for i in range(boot):
            pick = rng.integers(0, batches, size=batches)
            boot_slopes[i] = np.polyfit(
                log_n, np.log(e[:, pick].mean(axis=1)), 1)[0]
        ci = (float(np.percentile(boot_slopes, 2.5)),
              float(np.percentile(boot_slopes, 97.5)))
        for n_index, n in enumerate(config.n_list):
            rows.append(_row("convergence", n, config.replicates, t, m,
                             float(pooled[n_index]),
                             float(e[n_index].std(ddof=1) / math.sqrt(batches))))
        rows.append(_row("convergence", 0, config.replicates, t,
                         f"{m}_slope", slope,
                         float(boot_slopes.std(ddof=1))))
        table[f"{t}/{m}"] = {"slope": slope, "ci": ci,
                             "errors": [float(v) for v in pooled]}
    for m in mets:
        beats = bool(np.all(err[("edgeworth", m)].mean(axis=1)
                            < err[("gaussian", m)].mean(axis=1)))
        rows.append(_row("convergence", 0, config.replicates, "edgeworth",
                         f"{m}_beats_gaussian", int(beats), None,
                         "pass" if beats else "fail"))
        table[f"edgeworth_beats_gaussian/{m}"] = beats

    report = {
        "schema_version": 1,
        "library_version": __version__,
        "seed": config.seed,
        "model": model_to_dict(config.model),
        "n_list": list(config.n_list),
        "replicates": config.replicates,
        "seed_batches": batches,
        "slopes": table,
    }
    _write_csv(out_path / "convergence.csv", rows, _CSV_COLUMNS)
    (out_path / "convergence_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    return RunResult(exit_code=0, rows=rows, pricing_rows=[], report=report,
                     out_dir=out_path)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="edgeworth-lab",
        description="Monte Carlo experiments for skewness-corrected normal "
                    "approximations of volatility-model sums.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the tasks in a config file")
    run_p.add_argument("config", help="path to the experiment JSON config")
    run_p.add_argument("--workers", type=int, default=None,
                       help="process count (0 = auto); falls back to "
                            "EDGEWORTH_LAB_WORKERS, then the config")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--warn-only", action="store_true",
                       help="report assumption failures without exit code 2")

    conv_p = sub.add_parser("convergence",
                            help="error-decay study over the config n_list")
    conv_p.add_argument("config")
    conv_p.add_argument("--workers", type=int, default=None)
    conv_p.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "run":
            result = run(config, cli_workers=args.workers, out_dir=args.out,
                         warn_only=args.warn_only or None)
        else:
            result = convergence_study(config, cli_workers=args.workers,
                                       out_dir=args.out)
    except ParameterError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for message in result.report.get("errors", []):
        print(f"error: {message}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
