"""Manifest-driven experiments: parameter handling and report-row assembly.

Each experiment kind mirrors one verification stage: ``noise-lab`` sweeps
effective-noise goodness of fit, ``transform`` measures per-bin error rates
of the wrapped scheme against the Gaussian baseline, ``quantize`` runs the
dither derandomization search, ``convexity`` runs the floored-read cell
probe, and ``simulate`` is a plain Monte Carlo of an inner scheme.  All
runs are deterministic in the manifest seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coding import build_inner_scheme
from .dither import derandomize_dither
from .network import NetworkModel, TrafficDemand, load_network, validate_network
from .noiselab import convergence_sweep
from .pipeline import (
    convexity_probe,
    epsilon_kb_report,
    estimate_error_probability,
    fano_rate_bound,
    gaussian_twin,
    transform_scheme,
)

__all__ = [
    "EXPERIMENT_KINDS",
    "ManifestError",
    "ExperimentManifest",
    "load_manifest",
    "ExperimentResult",
    "run_experiment",
    "NOISE_LAB_COLUMNS",
    "PIPELINE_COLUMNS",
    "QUANTIZE_COLUMNS",
]

EXPERIMENT_KINDS = ("noise-lab", "transform", "quantize", "convexity", "simulate")

NOISE_LAB_COLUMNS = (
    "family", "sigma2", "b", "bin", "trials", "ks", "critical", "variance", "pass",
)
PIPELINE_COLUMNS = (
    "experiment", "family", "sigma2", "b", "k", "bin", "trials",
    "eps_hat", "ci_lo", "ci_hi", "eps_k_baseline", "fano_bound",
)
QUANTIZE_COLUMNS = (
    "m", "candidate_id", "trials", "error_estimate", "ci_low", "ci_high", "selected",
)


class ManifestError(ValueError):
    """Malformed manifest or invalid parameters (CLI exit 2)."""


@dataclass(frozen=True)
class ExperimentManifest:
    experiment: str
    network_path: Path
    parameters: dict


def load_manifest(path: str | Path) -> ExperimentManifest:
    p = Path(path)
    if not p.is_file():
        raise ManifestError(f"manifest file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"manifest {p} must be a JSON object")
    kind = doc.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ManifestError(f"unknown experiment kind {kind!r} in {p}")
    if "network" not in doc:
        raise ManifestError(f"manifest {p} is missing the network path")
    net_path = (p.parent / str(doc["network"])).resolve()
    if not net_path.is_file():
        raise ManifestError(f"network file not found: {net_path}")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ManifestError(f"manifest {p} parameters must be an object")
    if "seed" not in params or not isinstance(params["seed"], int) or params["seed"] < 0:
        raise ManifestError(f"manifest {p} requires an integer seed >= 0")
    return ExperimentManifest(kind, net_path, dict(params))


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    columns: tuple[str, ...]
    rows: tuple[dict, ...]
    violations: tuple[str, ...]
    summary: dict


def _require_int(params: dict, key: str, minimum: int = 1) -> int:
    value = params.get(key)
    if not isinstance(value, int) or value < minimum:
        raise ManifestError(f"parameter {key!r} must be an integer >= {minimum}")
    return value


def _load_validated(manifest: ExperimentManifest) -> tuple[NetworkModel, TrafficDemand]:
    try:
        net, demand = load_network(manifest.network_path)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc
    report = validate_network(net, demand)
    if report:
        raise ManifestError(
            f"network {manifest.network_path} is invalid: " + "; ".join(report)
        )
    return net, demand


def _inner_scheme(net, demand, params):
    spec = dict(params.get("inner_scheme", {}))
    kind = spec.pop("kind", "uncoded_pam")
    spec.setdefault("precision", 8)
    try:
        return build_inner_scheme(kind, net, demand, **spec)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"inner_scheme invalid: {exc}") from exc


def _b_list(params) -> list[int]:
    blist = params.get("b_list")
    if (
        not isinstance(blist, list)
        or not blist
        or any(not isinstance(b, int) or b < 2 or b % 2 for b in blist)
        or blist != sorted(blist)
    ):
        raise ManifestError("parameter 'b_list' must be an ascending list of even integers")
    return blist


def _dest_noise(net, demand):
    dest = demand.demands[0][1][0]
    return net.noise[dest]


def run_experiment(
    manifest: ExperimentManifest,
    seed: int | None = None,
    trials: int | None = None,
    threads: int = 1,
) -> ExperimentResult:
    """Execute the manifest's experiment; overrides replace manifest values."""
    params = dict(manifest.parameters)
    if seed is not None:
        params["seed"] = int(seed)
    if trials is not None:
        params["trials"] = int(trials)
    net, demand = _load_validated(manifest)
    runner = {
        "noise-lab": _run_noise_lab,
        "transform": _run_transform,
        "quantize": _run_quantize,
        "convexity": _run_convexity,
        "simulate": _run_simulate,
    }[manifest.experiment]
    rows, violations, headline = runner(net, demand, params, threads)
    summary = {
        "experiment": manifest.experiment,
        "network": str(manifest.network_path),
        "parameters": params,
        "rows": len(rows),
        "violations": list(violations),
        "headline": headline,
    }
    columns = {
        "noise-lab": NOISE_LAB_COLUMNS,
        "quantize": QUANTIZE_COLUMNS,
    }.get(manifest.experiment, PIPELINE_COLUMNS)
    return ExperimentResult(manifest.experiment, columns, tuple(rows), tuple(violations), summary)


def _run_noise_lab(net, demand, params, threads):
    seed = _require_int(params, "seed", 0)
    trials = _require_int(params, "trials")
    blist = _b_list(params)
    alpha = float(params.get("alpha", 0.01))
    kinds = params.get("bins", ["I", "II", "III", "IV"])

    specs = []
    for spec in net.noise:
        if spec.variance > 0.0 and spec not in specs:
            specs.append(spec)
    if not specs:
        raise ManifestError("noise-lab needs at least one node with sigma^2 > 0")

    rows, violations = [], []
    for si, spec in enumerate(specs):
        for ki, kind in enumerate(kinds):
            swept = [b for b in blist if b >= 4 or kind in ("I", "IV")]
            if not swept:
                continue
            reports = convergence_sweep(
                spec, swept, trials, bin_kind=kind,
                seed=seed + 1000 * si + 10 * ki, alpha=alpha, threads=threads,
            )
            for rep in reports:
                rows.append({
                    "family": rep.family,
                    "sigma2": rep.sigma2,
                    "b": rep.b,
                    "bin": rep.bin,
                    "trials": rep.trials,
                    "ks": rep.ks,
                    "critical": rep.critical,
                    "variance": rep.variance,
                    "pass": rep.passed,
                })
            last = reports[-1]
            if not last.passed:
                violations.append(
                    f"{spec.family} bin kind {kind}: KS {last.ks:.5f} at b={last.b} "
                    f"is not below the {alpha:.0%} critical value {last.critical:.5f}"
                )
    headline = {"families": [s.family for s in specs], "alpha": alpha}
    return rows, violations, headline


def _scheme_rows(report, spec, experiment):
    rows = []
    for be in report.bins:
        rows.append({
            "experiment": experiment,
            "family": spec.family,
            "sigma2": spec.variance,
            "b": report.b,
            "k": report.k,
            "bin": be.bin,
            "trials": be.trials,
            "eps_hat": be.estimate,
            "ci_lo": be.ci_low,
            "ci_hi": be.ci_high,
            "eps_k_baseline": report.eps_k.estimate,
            "fano_bound": report.fano_bounds[0],
        })
    return rows


def _run_transform(net, demand, params, threads):
    seed = _require_int(params, "seed", 0)
    trials = _require_int(params, "trials")
    blist = _b_list(params)
    inner = _inner_scheme(net, demand, params)
    spec = _dest_noise(net, demand)
    rows = []
    headline = {}
    for bi, b in enumerate(blist):
        report = epsilon_kb_report(
            transform_scheme(inner, b), net, trials, seed + bi, threads
        )
        rows.extend(_scheme_rows(report, spec, "transform"))
        headline[str(b)] = {
            "eps_kb": report.eps_kb,
            "eps_k_baseline": report.eps_k.estimate,
            "fano_bound": report.fano_bounds[0],
        }
    return rows, [], headline


def _run_quantize(net, demand, params, threads):
    seed = _require_int(params, "seed", 0)
    trials = _require_int(params, "trials")
    candidates = _require_int(params, "candidates")
    m_list = params.get("m_list", [params.get("m", 8)])
    if not isinstance(m_list, list) or any(not isinstance(m, int) or m < 0 for m in m_list):
        raise ManifestError("parameter 'm_list' must be a list of integers >= 0")
    inner = _inner_scheme(net, demand, params)

    plain = estimate_error_probability(inner, net, trials, seed + 999, threads)
    rows, violations = [], []
    headline = {"unquantized": plain.estimate}
    for mi, m in enumerate(m_list):
        rng = np.random.default_rng(np.random.SeedSequence((seed, mi)))
        result = derandomize_dither(inner, net, m, candidates, trials, rng, threads)
        for cand in result.candidates:
            rows.append({
                "m": m,
                "candidate_id": cand.candidate_id,
                "trials": cand.trials,
                "error_estimate": cand.estimate,
                "ci_low": cand.ci_low,
                "ci_high": cand.ci_high,
                "selected": cand.selected,
            })
        if result.best_estimate > result.mean_estimate + 1e-15:
            violations.append(f"m={m}: selected estimate exceeds the candidate mean")
        if result.best_estimate > 2.0 * plain.estimate:
            violations.append(
                f"m={m}: selected estimate {result.best_estimate:.5f} exceeds "
                f"twice the unquantized estimate {plain.estimate:.5f}"
            )
        headline[str(m)] = {
            "best": result.best_estimate,
            "mean": result.mean_estimate,
        }
    return rows, violations, headline


def _run_convexity(net, demand, params, threads):
    seed = _require_int(params, "seed", 0)
    probes = _require_int(params, "probes")
    inner = _inner_scheme(net, demand, params)
    spec = _dest_noise(net, demand)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 3)))
    result = convexity_probe(inner, net, probes, rng)
    rows = [{
        "experiment": "convexity",
        "family": spec.family,
        "sigma2": spec.variance,
        "b": 0,
        "k": inner.block_length,
        "bin": -1,
        "trials": result.probes,
        "eps_hat": result.violations / max(result.probes, 1),
        "ci_lo": 0.0,
        "ci_hi": 0.0,
        "eps_k_baseline": 0.0,
        "fano_bound": 0.0,
    }]
    violations = []
    if result.violations:
        violations.append(f"convexity probe found {result.violations} violations")
    headline = {"probes": result.probes, "violations": result.violations}
    return rows, violations, headline


def _run_simulate(net, demand, params, threads):
    seed = _require_int(params, "seed", 0)
    trials = _require_int(params, "trials")
    inner = _inner_scheme(net, demand, params)
    spec = _dest_noise(net, demand)
    est = estimate_error_probability(inner, net, trials, seed, threads)
    baseline = estimate_error_probability(inner, gaussian_twin(net), trials, seed + 1, threads)
    rows = []
    for i, rate in enumerate(inner.rates):
        rows.append({
            "experiment": "simulate",
            "family": spec.family,
            "sigma2": spec.variance,
            "b": 0,
            "k": inner.block_length,
            "bin": i,
            "trials": trials,
            "eps_hat": est.estimate,
            "ci_lo": est.ci_low,
            "ci_hi": est.ci_high,
            "eps_k_baseline": baseline.estimate,
            "fano_bound": fano_rate_bound(rate, est.estimate, inner.block_length),
        })
    headline = {"error": est.estimate, "gaussian_baseline": baseline.estimate}
    return rows, [], headline
