"""Command-line front end.

Subcommands mirror the verification stages (noise-lab, transform, quantize,
convexity, simulate); ``run`` dispatches on the manifest's experiment kind.
Reports are written as CSV or JSON with a stable column order and floats at
12 significant digits, so identical inputs produce byte-identical files.

Exit codes: 0 success, 1 invariant violation during the run, 2 malformed
manifest or invalid parameters.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENT_KINDS,
    ExperimentResult,
    ManifestError,
    load_manifest,
    run_experiment,
)

__all__ = ["emit_report", "main"]


def _fmt12(x: float) -> str:
    return f"{x:.12g}"


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt12(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(_fmt12(value))
    return value


def emit_report(results, fmt: str, path: str | Path, columns=None) -> Path:
    """Write result rows with a stable column order and deterministic bytes."""
    rows = list(results)
    if not rows:
        raise ValueError("refusing to emit an empty report")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    cols = list(columns) if columns else list(rows[0].keys())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for row in rows:
                writer.writerow([_csv_cell(row[c]) for c in cols])
    else:
        doc = [{c: _json_value(row[c]) for c in cols} for row in rows]
        path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def _write_summary(result: ExperimentResult, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result.summary, indent=2, sort_keys=True, default=str) + "\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", required=True, help="experiment manifest (JSON)")
    common.add_argument("--seed", type=int, default=None, help="override the manifest seed")
    common.add_argument("--trials", type=int, default=None, help="override the manifest trials")
    common.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: NOISEFORGE_THREADS or 1)",
    )
    common.add_argument("--out", default="reports", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(
        prog="noiseforge",
        description="Additive-noise network experiments: noise mixing, "
        "transformed coding schemes, dithered quantization, convexity probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the manifest's experiment kind")
    for kind in EXPERIMENT_KINDS:
        sub.add_parser(kind, parents=[common], help=f"run a {kind} manifest")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        threads = args.threads
    else:
        threads = int(os.environ.get("NOISEFORGE_THREADS", "1"))
    if threads < 1:
        print(f"noiseforge: thread count must be >= 1, got {threads}", file=sys.stderr)
        return 2

    try:
        manifest = load_manifest(args.manifest)
        if args.command != "run" and manifest.experiment != args.command:
            raise ManifestError(
                f"manifest declares {manifest.experiment!r} but the "
                f"{args.command!r} subcommand was invoked"
            )
        result = run_experiment(manifest, seed=args.seed, trials=args.trials, threads=threads)
    except ManifestError as exc:
        print(f"noiseforge: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"noiseforge: invalid parameters: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"noiseforge: invariant violated: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    report_path = emit_report(
        result.rows, args.format, out / f"{result.kind}.{args.format}", result.columns
    )
    summary_path = _write_summary(result, out / f"{result.kind}_summary.json")
    print(f"wrote {report_path} and {summary_path} ({len(result.rows)} rows)")
    for message in result.violations:
        print(f"violation: {message}", file=sys.stderr)
    return 1 if result.violations else 0


if __name__ == "__main__":
    sys.exit(main())
