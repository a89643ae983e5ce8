"""Command-line interface: ``dislog {fit,gof,km,simulate,pmf-table}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import EMBEDDED, digest, embedded_text, ingest
from .distribution import DiscreteLS
from .errors import DataError, DislogError, DomainError
from .estimation import default_xi_grid, fit, profile_fit
from .gof import goodness_of_fit, kaplan_meier, survival_table
from .kernels import Family, KernelSpec
from .samples import CensoredSample, UncensoredSample
from .simulation import SimConfig, default_workers, run_study, study_csv, study_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# parsing helpers

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _axis(spec: str) -> list[float]:
    """``a:b`` (integer steps), ``a:b:h`` or ``v1,v2,...``."""
    spec = spec.strip()
    if ":" in spec:
        parts = [float(v) for v in spec.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1.0
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError(spec)
        if step <= 0 or stop < start:
            raise ValueError(spec)
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(v) for v in spec.split(",") if v.strip()]


def parse_xi_grid(spec: str, family: Family) -> list[tuple[float, ...]]:
    """Grid flag: ``default``, one axis (``1:100``) or a product ``0.1:0.9:0.1;1:100``."""
    if spec == "default":
        return default_xi_grid(family)
    try:
        axes = [_axis(part) for part in spec.split(";")]
    except ValueError:
        raise UsageError(f"malformed --xi-grid {spec!r}") from None
    grid = [()]
    for axis in axes:
        grid = [g + (v,) for g in grid for v in axis]
    return grid


def _g17(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_g17(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool) else v for v in row])
    return buf.getvalue()


def _manifest(args, command: str, data_text: str | None = None) -> dict:
    arguments = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items() if k != "func"}
    return {
        "command": command,
        "arguments": arguments,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "input_digest": None if data_text is None else digest(data_text),
    }


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _emit(args, files: dict, manifest: dict, stdout_key: str):
    """Write ``files`` (name -> text) plus ``manifest.json`` to ``--out``, or print one of them."""
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text, encoding="utf-8")
        (out / "manifest.json").write_text(_dump_json(manifest), encoding="utf-8")
    else:
        sys.stdout.write(files[stdout_key])


def _load(args):
    source = args.data
    text = embedded_text(source) if source in EMBEDDED else None
    sample = ingest(source)
    if text is None:
        text = Path(source).read_text(encoding="utf-8")
    return sample, text


def _kernel(args) -> KernelSpec:
    try:
        return KernelSpec(args.kernel, args.xi or ())
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _workers(args) -> int:
    return args.threads if args.threads else default_workers()


# --------------------------------------------------------------------------
# commands

def _fit_sample(args, sample):
    family = Family.parse(args.kernel)
    kwargs = {"fix_phi": args.fix_phi, "censoring": args.censored_term}
    if args.xi_grid:
        if args.xi:
            raise UsageError("--xi and --xi-grid are mutually exclusive")
        try:
            grid = parse_xi_grid(args.xi_grid, family)
            return profile_fit(sample, family, grid, **kwargs)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
    return fit(sample, _kernel(args), **kwargs)


def _fit_rows(result):
    return [
        ("lambda", result.lam, result.se_lambda if result.se_lambda is not None else math.nan),
        ("phi", result.phi, result.se_phi if result.se_phi is not None else math.nan),
    ]


def cmd_fit(args) -> int:
    sample, text = _load(args)
    result = _fit_sample(args, sample)
    report = {"fit": result.to_dict()}
    files = {"fit.csv": _csv(("param", "estimate", "se"), _fit_rows(result))}
    if isinstance(sample, UncensoredSample):
        gof = goodness_of_fit(sample, result, args.n_boot, args.seed, _workers(args))
        report["gof"] = gof.to_dict()
        files["gof.csv"] = _csv(
            ("cell", "observed", "expected"),
            [(c.label(), c.observed, c.expected) for c in gof.binning],
        )
    else:
        km = kaplan_meier(sample)
        xs = np.arange(int(sample.x.max()) + 2)
        table = survival_table({result.kernel.name: result}, km, xs)
        files["survival.csv"] = _csv(list(table), zip(*table.values()))
    if result.profile:
        files["profile.csv"] = _csv(
            ("xi", "loglik"), [(";".join(_g17(v) for v in xi), ll) for xi, ll in result.profile]
        )
    manifest = _manifest(args, "fit", text)
    report["manifest"] = manifest
    files["fit.json"] = _dump_json(report)
    _emit(args, files, manifest, "fit.json" if args.format == "json" else "fit.csv")
    if not result.converged:
        print(f"dislog: fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_gof(args) -> int:
    sample, text = _load(args)
    if not isinstance(sample, UncensoredSample):
        raise UsageError("gof needs a frequency (uncensored) dataset")
    result = fit(sample, _kernel(args), fix_phi=args.fix_phi)
    gof = goodness_of_fit(sample, result, args.n_boot, args.seed, _workers(args))
    manifest = _manifest(args, "gof", text)
    files = {
        "gof.json": _dump_json({"fit": result.to_dict(), "gof": gof.to_dict(), "manifest": manifest}),
        "gof.csv": _csv(("cell", "observed", "expected"), [(c.label(), c.observed, c.expected) for c in gof.binning]),
    }
    _emit(args, files, manifest, "gof.json" if args.format == "json" else "gof.csv")
    return EXIT_OK


def cmd_km(args) -> int:
    sample, text = _load(args)
    if not isinstance(sample, CensoredSample):
        raise UsageError("km needs a censored dataset (columns x,events,censored)")
    km = kaplan_meier(sample)
    xs = np.arange(int(sample.x.max()) + 2)
    idx = np.searchsorted(km.times, xs)
    at_risk = [int(km.at_risk[i]) if i < km.times.size else 0 for i in idx]
    events = [int(km.events[i]) if i < km.times.size and km.times[i] == x else 0 for i, x in zip(idx, xs)]
    rows = zip(xs, at_risk, events, km.at_least(xs).astype(float), km.beyond(xs).astype(float))
    files = {"km.csv": _csv(("x", "at_risk", "events", "km", "km_beyond"), rows)}
    manifest = _manifest(args, "km", text)
    if args.format == "json":
        files["km.json"] = _dump_json({
            "x": xs, "km": km.at_least(xs), "km_beyond": km.beyond(xs), "manifest": manifest,
        })
    _emit(args, files, manifest, "km.json" if args.format == "json" else "km.csv")
    return EXIT_OK


def cmd_pmf_table(args) -> int:
    try:
        dist = DiscreteLS.from_params(_kernel(args), args.lam, args.phi)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if args.xmax < 0:
        raise UsageError("--xmax must be nonnegative")
    table = dist.pmf_table(args.xmax)
    files = {"pmf.csv": _csv(list(table), zip(*table.values()))}
    manifest = _manifest(args, "pmf-table")
    if args.format == "json":
        files["pmf.json"] = _dump_json({**table, "manifest": manifest})
    _emit(args, files, manifest, "pmf.json" if args.format == "json" else "pmf.csv")
    return EXIT_OK


def cmd_simulate(args) -> int:
    kernel = _kernel(args)
    try:
        config = SimConfig(
            kernel=kernel, lambda_true=args.lam, phi_values=args.phi, n_values=args.n,
            censoring_props=args.censoring, replications=args.reps, master_seed=args.seed,
            censoring=args.censored_term,
        )
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    reports = run_study(config, workers=_workers(args))
    manifest = _manifest(args, "simulate")
    files = {"study.csv": study_csv(reports), "study.txt": study_table(reports)}
    if args.format == "json":
        files["study.json"] = _dump_json({
            "cells": [
                {
                    "n": r.n, "phi_true": r.phi_true, "censoring": r.censoring,
                    "failed": r.failed_fits, "invalid": r.invalid,
                    **{p: vars(s) for p, s in r.summaries.items()},
                }
                for r in reports
            ],
            "manifest": manifest,
        })
    _emit(args, files, manifest, "study.json" if args.format == "json" else "study.csv")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dislog", description="Discrete log-symmetric distributions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, kernel=True):
        if data:
            p.add_argument("--data", required=True, help="embedded key (%s) or CSV path" % ", ".join(EMBEDDED))
        if kernel:
            p.add_argument("--kernel", default="normal", help="kernel family")
            p.add_argument("--xi", type=_floats, default=None, help="extra parameters, v[,v]")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help="worker processes (default: $DISLOG_THREADS or CPU count)")
        p.add_argument("--out", default=None, help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)

    p = sub.add_parser("fit", help="maximum-likelihood fit with goodness of fit")
    common(p)
    p.add_argument("--xi-grid", default=None, help="profile grid: default | a:b[:h] | v,v | axis;axis")
    p.add_argument("--fix-phi", type=float, default=None)
    p.add_argument("--censored-term", choices=("inclusive", "strict"), default="inclusive",
                   help="censored rows contribute P(X >= x) (inclusive) or P(X > x) (strict)")
    p.add_argument("--n-boot", type=int, default=200)
    p.set_defaults(func=cmd_fit, default_format="json")

    p = sub.add_parser("gof", help="chi-square and Cramer-von Mises tests")
    common(p)
    p.add_argument("--fix-phi", type=float, default=None)
    p.add_argument("--n-boot", type=int, default=200)
    p.set_defaults(func=cmd_gof, default_format="json")

    p = sub.add_parser("km", help="Kaplan-Meier estimate")
    common(p, kernel=False)
    p.set_defaults(func=cmd_km, default_format="csv")

    p = sub.add_parser("pmf-table", help="pmf, cdf, rf and hazard on 0..xmax")
    common(p, data=False)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--xmax", type=int, required=True)
    p.set_defaults(func=cmd_pmf_table, default_format="csv")

    p = sub.add_parser("simulate", help="Monte Carlo study of the estimators")
    common(p, data=False)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--n", type=_ints, default=(40, 120, 400))
    p.add_argument("--phi", type=_floats, default=(1.0, 4.0, 8.0))
    p.add_argument("--censoring", type=_floats, default=(0.0, 0.1, 0.3), help="censoring proportions p[,p]")
    p.add_argument("--censored-term", choices=("inclusive", "strict"), default="strict")
    p.add_argument("--reps", type=int, default=None, help="replications (default 1000; 250 for heavy kernels)")
    p.set_defaults(func=cmd_simulate, default_format="csv")
    return parser


HEAVY_KERNELS = (Family.STUDENT_T, Family.CONTAMINATED_NORMAL, Family.POWER_EXPONENTIAL,
                 Family.EXTENDED_BS, Family.EXTENDED_BS_T)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    del args.default_format
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    if getattr(args, "n_boot", 200) < 200:
        parser.error("--n-boot must be at least 200")
    try:
        if hasattr(args, "kernel"):
            try:
                family = Family.parse(args.kernel)
            except DomainError as exc:
                raise UsageError(str(exc)) from None
            if args.command == "simulate" and args.reps is None:
                args.reps = 250 if family in HEAVY_KERNELS else 1000
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dislog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"dislog: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DislogError, ArithmeticError) as exc:
        print(f"dislog: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
