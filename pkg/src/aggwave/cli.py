"""Command-line front end.

Subcommands::

    aggwave simulate SCENARIO --out DIR       run a scenario file (or preset:NAME)
    aggwave compare SCENARIO --against EST --out DIR
    aggwave calibrate --panel A.csv --weights Y.csv --estimator EST --out DIR
    aggwave signal NAME --M 512 [--sd 7 | --raw] [--out FILE]
    aggwave presets

Exit codes: 0 success, 2 validation error, 3 runtime or numerical error,
4 I/O error. Nothing is written unless the whole command succeeds.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as dt
import hashlib
import io
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import InvalidInputError
from .gamma_posterior import GammaModel, shrink_panel_gamma
from .harness import (
    ComparisonResult,
    compare_methods,
    replication_csv,
    run_scenario,
    summary_csv,
)
from .io import commit_outputs, fmt, matrix_csv, read_matrix_csv
from .models import grid, project_components, reconstruct_components, validate_weights
from .noise import GammaNoiseSpec
from .ram import RamConfig
from .scenario import ESTIMATORS, ScenarioSpec, expand_document
from .shrinkage import PriorConfig, shrink_panel_level_dependent, universal_soft_threshold
from .signals import SIGNALS, dj_function
from .wavelets import FILTERS, TransformPlan, dwt

log = logging.getLogger("aggwave")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
PRESET_PREFIX = "preset:"
WEIGHT_TOL = 1e-6


# ---------------------------------------------------------------- scenarios

def preset_names() -> list[str]:
    root = resources.files("aggwave") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def _read_document(source: str) -> tuple[dict, str]:
    """Parsed YAML document and its raw text, from a path or ``preset:NAME``."""
    if source.startswith(PRESET_PREFIX):
        name = source[len(PRESET_PREFIX):]
        if name not in preset_names():
            raise InvalidInputError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
        text = (resources.files("aggwave") / "presets" / f"{name}.yaml").read_text()
    else:
        text = Path(source).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidInputError(f"{source}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{source}: scenario document must be a mapping")
    return doc, text


def _apply_overrides(doc: dict, assignments: list[str]) -> dict:
    doc = copy.deepcopy(doc)
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidInputError(f"--set expects KEY=VALUE, got {item!r}")
        value = yaml.safe_load(raw)
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InvalidInputError(f"--set {key}: {part} is not a section")
        node[parts[-1]] = value
        # An explicit override beats a sweep over the same key.
        if isinstance(doc.get("sweep"), dict):
            doc["sweep"].pop(key, None)
    return doc


def load_specs(args) -> list[ScenarioSpec]:
    doc, _ = _read_document(args.scenario)
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    doc = _apply_overrides(doc, overrides)
    specs = expand_document(doc, paper_scale=args.paper_scale)
    ids = [s.id for s in specs]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise InvalidInputError(f"duplicate scenario ids: {', '.join(dup)}")
    return specs


def _batch_digest(specs: list[ScenarioSpec]) -> str:
    return hashlib.sha256("".join(s.digest() for s in specs).encode()).hexdigest()


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _manifest(command: str, started: str, files: list[str], *, seed, scenario_hash: str,
              extra: dict | None = None) -> str:
    body = {
        "tool": "aggwave",
        "version": __version__,
        "command": command,
        "scenario_hash": scenario_hash,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "files": sorted(files + ["manifest.json"]),
    }
    body.update(extra or {})
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def cmd_simulate(args) -> int:
    started = _now()
    specs = load_specs(args)
    results = []
    for spec in specs:
        if not args.quiet:
            log.info("running %s (R=%d, %s)", spec.id, spec.replications, spec.estimator)
        res = run_scenario(spec, threads=args.threads)
        if res.failures:
            log.warning("%s: %d of %d replications failed", spec.id, res.failures, spec.replications)
        results.append(res)
    files = {"summary.csv": summary_csv(results), "replications.csv": replication_csv(results)}
    files["manifest.json"] = _manifest(
        "simulate", started, list(files), seed=sorted({s.seed for s in specs}),
        scenario_hash=_batch_digest(specs),
        extra={"scenarios": {s.id: s.digest() for s in specs}, "paper_scale": args.paper_scale},
    )
    commit_outputs(args.out, files)
    if not args.quiet:
        print(files["summary.csv"], end="")
    return EXIT_OK


COMPARISON_HEADER = ["scenario_id", "component", "estimator_a", "amse_a", "sd_a",
                     "estimator_b", "amse_b", "sd_b", "mean_diff", "sd_diff", "R", "pairs"]
DIFFERENCE_HEADER = ["scenario_id", "replication", "component", "mse_a", "mse_b", "diff"]


def _comparison_csvs(comparisons: list[ComparisonResult]) -> tuple[str, str]:
    table, diffs = io.StringIO(), io.StringIO()
    wt = csv.writer(table, lineterminator="\n")
    wd = csv.writer(diffs, lineterminator="\n")
    wt.writerow(COMPARISON_HEADER)
    wd.writerow(DIFFERENCE_HEADER)
    for comp in comparisons:
        sid = comp.first.spec.id
        for row in comp.table():
            wt.writerow([sid, row["component"], row["estimator_a"], fmt(row["amse_a"]), fmt(row["sd_a"]),
                         row["estimator_b"], fmt(row["amse_b"]), fmt(row["sd_b"]),
                         fmt(row["mean_diff"]), fmt(row["sd_diff"]), comp.first.spec.replications,
                         comp.differences(row["component"]).size])
        for a, b in zip(comp.first.replications, comp.second.replications):
            if not (a.ok and b.ok):
                continue
            for name, va in a.metrics():
                vb = b.metric(name)
                wd.writerow([sid, a.index, name, fmt(va), fmt(vb), fmt(va - vb)])
    return table.getvalue(), diffs.getvalue()


def cmd_compare(args) -> int:
    started = _now()
    specs = load_specs(args)
    comparisons = []
    for spec in specs:
        other = spec.replace(estimator=args.against)
        if not args.quiet:
            log.info("comparing %s: %s vs %s", spec.id, spec.estimator, other.estimator)
        comparisons.append(compare_methods(spec, other, threads=args.threads))
    table, diffs = _comparison_csvs(comparisons)
    files = {"comparison.csv": table, "differences.csv": diffs}
    files["manifest.json"] = _manifest(
        "compare", started, list(files), seed=sorted({s.seed for s in specs}),
        scenario_hash=_batch_digest(specs), extra={"against": args.against},
    )
    commit_outputs(args.out, files)
    if not args.quiet:
        print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------- calibrate

def _fit_length(A: np.ndarray, truncate: bool, pad: bool) -> np.ndarray:
    M = A.shape[0]
    if M >= 2 and M & (M - 1) == 0:
        return A
    if truncate:
        return A[: 1 << (M.bit_length() - 1)]
    if pad:
        target = 1 << M.bit_length()
        return np.pad(A, ((0, target - M), (0, 0)), mode="symmetric")
    raise InvalidInputError(
        f"panel has M={M} rows, which is not a power of two; rerun with --truncate "
        f"(keep the first {1 << (M.bit_length() - 1)} rows) or --pad (mirror-extend to "
        f"{1 << M.bit_length()} rows)"
    )


def calibrate_panel(A, y, args) -> np.ndarray:
    """Estimate the (M, L) component matrix from panel ``A`` and weights ``y``."""
    plan = TransformPlan(A.shape[0], args.J0, args.filter)
    D = dwt(A, plan)
    prior = PriorConfig(p=args.p, h=args.h, tau=args.tau)
    if args.estimator == "identity":
        shrunk = D
    elif args.estimator == "correlated-bayes":
        shrunk = shrink_panel_level_dependent(D, plan, prior)
    elif args.estimator == "universal-threshold":
        shrunk = universal_soft_threshold(D, plan)
    else:
        if args.gamma_shape is None or args.gamma_rate is None:
            raise InvalidInputError("gamma-bayes needs --gamma-shape and --gamma-rate")
        gamma = GammaNoiseSpec(shape=args.gamma_shape, rate=args.gamma_rate)
        model = GammaModel(plan, gamma, prior, args.spike_fraction)
        config = RamConfig(iterations=args.iterations, seed=args.seed or 0)
        shrunk, chains = shrink_panel_gamma(D, model, config, np.random.SeedSequence(args.seed or 0))
        if not args.quiet:
            rate = np.mean([c.acceptance_rate for c in chains])
            log.info("mean acceptance rate %.3f over %d chains", rate, len(chains))
    return reconstruct_components(project_components(shrunk, y), plan)


def cmd_calibrate(args) -> int:
    started = _now()
    header, A, _ = read_matrix_csv(args.panel, label_column="t")
    _, y, names = read_matrix_csv(args.weights, label_column="component")
    if A.shape[1] != y.shape[1]:
        raise InvalidInputError(f"panel has {A.shape[1]} samples but weights have {y.shape[1]} columns")
    validate_weights(y, tol=WEIGHT_TOL)
    M = A.shape[0]
    A_fit = _fit_length(A, args.truncate, args.pad)
    alpha = calibrate_panel(A_fit, y, args)
    if A_fit.shape[0] > M:
        alpha = alpha[:M]
    names = names or [f"component_{l + 1}" for l in range(y.shape[0])]
    t = grid(alpha.shape[0])
    files = {"components.csv": matrix_csv(names, alpha, labels=list(t))}
    digest = hashlib.sha256()
    for path in (args.panel, args.weights):
        digest.update(Path(path).read_bytes())
    files["manifest.json"] = _manifest(
        "calibrate", started, list(files), seed=args.seed, scenario_hash=digest.hexdigest(),
        extra={"estimator": args.estimator, "filter": args.filter, "J0": args.J0,
               "rows_in": M, "rows_used": int(A_fit.shape[0]), "samples": int(A.shape[1]),
               "inputs": [str(args.panel), str(args.weights)]},
    )
    commit_outputs(args.out, files)
    return EXIT_OK


# ---------------------------------------------------------------- utilities

def cmd_signal(args) -> int:
    if args.name not in SIGNALS:
        raise InvalidInputError(f"unknown signal {args.name!r}; valid names: {', '.join(sorted(SIGNALS))}")
    values = dj_function(args.name, args.M, None if args.raw else args.sd)
    text = matrix_csv([args.name], values[:, None], labels=list(grid(args.M)))
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        commit_outputs(out.parent if str(out.parent) else ".", {out.name: text})
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in preset_names():
        doc, _ = _read_document(PRESET_PREFIX + name)
        specs = expand_document(doc)
        print(f"{name}\t{len(specs)} scenarios\t{doc.get('description', '')}".rstrip())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # Shared by the main parser and every subparser so the flags may appear
    # on either side of the subcommand. Only the main parser sets defaults.
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (overrides the file)")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads for replications")
    p.add_argument("--paper-scale", action="store_true", default=d(False),
                   help="apply the file's paper_scale overrides (long runs)")
    p.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress output")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggwave",
        description="Wavelet calibration of aggregated functional data.",
        parents=[_global_flags(True)],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _global_flags(False)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario file")
    p.add_argument("scenario", help="YAML scenario file or preset:NAME")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a (dotted) scenario key; may repeat")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common], help="paired comparison of two estimators")
    p.add_argument("scenario", help="YAML scenario file or preset:NAME")
    p.add_argument("--against", required=True, choices=ESTIMATORS,
                   help="second estimator, run on the same panels")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("calibrate", parents=[common], help="estimate components from data files")
    p.add_argument("--panel", required=True, help="M x N panel CSV (optional leading 't' column)")
    p.add_argument("--weights", required=True,
                   help="L x N weights CSV (optional leading 'component' name column)")
    p.add_argument("--estimator", required=True, choices=ESTIMATORS)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--filter", default="db8", choices=FILTERS)
    p.add_argument("--J0", type=int, default=3, help="coarsest resolution level")
    p.add_argument("--p", type=float, default=None,
                   help="fixed spike weight (default: level rule for correlated-bayes, 0.75 for gamma-bayes)")
    p.add_argument("--h", type=float, default=2.0, help="exponent of the level rule")
    p.add_argument("--tau", type=float, default=5.0, help="logistic slab scale")
    p.add_argument("--gamma-shape", type=float, help="Gamma noise shape a (gamma-bayes)")
    p.add_argument("--gamma-rate", type=float, help="Gamma noise rate b (gamma-bayes)")
    p.add_argument("--iterations", type=int, default=5000, help="RAM chain length (gamma-bayes)")
    p.add_argument("--spike-fraction", type=float, default=1e-4,
                   help="spike scale as a fraction of tau (gamma-bayes)")
    fit = p.add_mutually_exclusive_group()
    fit.add_argument("--truncate", action="store_true", help="drop rows down to a power of two")
    fit.add_argument("--pad", action="store_true", help="mirror-extend rows up to a power of two")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("signal", parents=[common], help="write a test signal as CSV")
    p.add_argument("name", help=f"one of {', '.join(sorted(SIGNALS))}")
    p.add_argument("--M", type=int, required=True, help="number of grid points")
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--sd", type=float, default=7.0, help="rescale to this standard deviation")
    scale.add_argument("--raw", action="store_true", help="closed-form values, no rescaling")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("presets", parents=[common], help="list bundled scenario presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="aggwave: %(message)s", stream=sys.stderr)
    if args.command == "calibrate" and args.p is None and args.estimator == "gamma-bayes":
        args.p = 0.75
    if args.threads < 1:
        print("aggwave: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"aggwave: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"aggwave: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"aggwave: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
