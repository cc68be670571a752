"""Command-line front end: ``cdfdr {fit,reject,pi0,simulate,diagnose}``."""

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .estimator import StageError, fit_pipeline
from .inference import cd_bh, efron_density_reject, hc_threshold, local_fdr_reject
from .io import IngestError, atomic_write, ingest, load_model, save_model
from .null_model import SIDES, THEORETICAL_NULL, pvalues_from_z
from .pi0 import mdc_pi0
from .sim import (MixtureNormalConfig, MixtureUniformConfig, PipelineOptions, run_study,
                  uniform_grid_study)
from .skewbeta import uniformity_diagnostic
from .validation import clamp_pvalues

__all__ = ["build_parser", "main"]

METHOD_NAMES = {"bh": "cd_bh", "hc": "hc", "locfdr": "local_fdr", "efron": "efron_density"}


class CommandError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def _dump(data, fh):
    json.dump(data, fh, indent=2, sort_keys=True)
    fh.write("\n")


def _write_json(path, data):
    if path is None or path == "-":
        _dump(data, sys.stdout)
    else:
        atomic_write(path, lambda fh: _dump(data, fh))


def _read_sample(args):
    try:
        return ingest(args.input, args.kind, df=args.df, column=args.column)
    except (OSError, ValueError) as exc:
        raise CommandError("ingest", exc) from exc


def _read_model(path, required, why=""):
    if path is None:
        if required:
            raise CommandError("model", f"a fitted model (--model) is required{why}")
        return None
    try:
        return load_model(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CommandError("model", f"cannot load {path}: {exc}") from exc


def _pvalues(sample, model, sided):
    """Unclamped p-values: as given, or from z through the model's null."""
    if sample.scale == "p":
        return sample.values
    if model is not None and model.sided is not None:
        null, sided = model.null or THEORETICAL_NULL, model.sided
    else:
        null = THEORETICAL_NULL
    return pvalues_from_z(sample.values, null, sided, clamp=False)


def cmd_fit(args):
    sample = _read_sample(args)
    report = fit_pipeline(sample.values, kind="p" if sample.scale == "p" else "z",
                          null=args.null, sided=args.sided, max_degree=args.max_degree,
                          gamma=args.gamma, grid_step=args.step, M=args.M)
    summary = {"input": sample.summary(), "fit": report.summary(), "version": __version__}
    if not args.deterministic:
        summary["created"] = datetime.now(timezone.utc).isoformat()
    save_model(report.model, args.model)
    _write_json(args.report, summary)
    return 0


def cmd_reject(args):
    method = METHOD_NAMES[args.method]
    sample = _read_sample(args)
    model_based = method in ("local_fdr", "efron_density")
    model = _read_model(args.model, model_based, f" for --method {args.method}")
    pi0 = args.pi0
    if pi0 is None:
        pi0 = model.pi0 if model is not None and model.pi0 is not None else 1.0
    try:
        u = _pvalues(sample, model, args.sided)
        if method == "cd_bh":
            result = cd_bh(u, args.alpha, pi0)
        elif method == "hc":
            result = hc_threshold(u, args.alpha0)
        elif method == "efron_density":
            result = efron_density_reject(u, model, args.alpha, pi0)
        elif sample.scale == "p":
            result = local_fdr_reject(sample.values, model, args.fdr_cutoff, pi0, scale="p")
        else:
            result = local_fdr_reject(sample.values, model, args.fdr_cutoff, pi0, scale="z")
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise CommandError("reject", exc) from exc
    summary = result.summary()
    summary["input"] = sample.summary()
    value_name = "p" if method != "local_fdr" or sample.scale == "p" else "z"
    if args.out:
        atomic_write(args.out + ".csv", lambda fh: result.write_csv(fh, value_name))
        atomic_write(args.out + ".json", lambda fh: _dump(summary, fh))
    _dump(summary, sys.stdout)
    return 0


def cmd_pi0(args):
    sample = _read_sample(args)
    model = _read_model(args.model, True, " for pi0")
    try:
        u = clamp_pvalues(_pvalues(sample, model, args.sided), model.n or None)
        estimate = mdc_pi0(u, model, args.gamma, args.step, args.M)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise CommandError("pi0", exc) from exc
    summary = estimate.to_dict()
    del summary["path"]
    summary["gamma"] = args.gamma
    summary["step"] = args.step
    if args.out:
        atomic_write(args.out + "_path.csv", estimate.write_path_csv)
        atomic_write(args.out + ".json", lambda fh: _dump(summary, fh))
    _dump(summary, sys.stdout)
    return 0


def _write_report(report, prefix, extra):
    atomic_write(prefix + ".json", lambda fh: report.write_json(fh, extra))
    atomic_write(prefix + "_records.csv", report.write_records_csv)
    atomic_write(prefix + "_curves.csv", report.write_curves_csv)


def cmd_simulate(args):
    options = PipelineOptions(null=args.null, sided=args.sided, alpha=args.alpha,
                              alpha0=args.alpha0, fdr_cutoff=args.fdr_cutoff,
                              max_degree=args.max_degree, gamma=args.gamma,
                              grid_step=args.step, M=args.M)
    extra = {"version": __version__}
    if not args.deterministic:
        extra["created"] = datetime.now(timezone.utc).isoformat()
    try:
        if args.scenario == "normal":
            cfg = MixtureNormalConfig(n=args.n, pi0=args.pi0_true, mu=args.mu,
                                      reps=args.reps, seed=args.seed)
            reports = [("", run_study(cfg, options, args.threads))]
        elif args.scenario == "uniform":
            cfg = MixtureUniformConfig(n=args.n, pi0=args.pi0_true, a=args.a,
                                       reps=args.reps, seed=args.seed)
            reports = [("", run_study(cfg, options, args.threads))]
        else:
            grid = uniform_grid_study(n=args.n, reps=args.reps, seed=args.seed,
                                      options=options, workers=args.threads)
            reports = [(f"_cell{i}", r) for i, r in enumerate(grid)]
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise CommandError("simulate", exc) from exc
    overview = []
    for suffix, report in reports:
        if args.out:
            _write_report(report, args.out + suffix, extra)
        agg = report.aggregates()
        overview.append({"scenario": report.scenario, "config": report.to_dict()["config"],
                         "n_failed": report.n_failed,
                         "median_pi0_hat": agg["pi0_hat"]["median"],
                         "median_tail_mise": agg["tail_mise"]["median"],
                         "median_tail_mise_naive": agg["tail_mise_naive"]["median"]})
    _dump(overview, sys.stdout)
    return 0


def cmd_diagnose(args):
    sample = _read_sample(args)
    try:
        u = _pvalues(sample, None, args.sided)
        stat, pval = uniformity_diagnostic(clamp_pvalues(u))
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise CommandError("diagnose", exc) from exc
    _write_json(args.out, {"input": sample.summary(), "statistic": stat, "p_value": pval})
    return 0


def _add_input(p):
    p.add_argument("input", help="file with one value per line, or a CSV with --column")
    p.add_argument("--kind", choices=("z", "p", "t"), default="z")
    p.add_argument("--df", type=float, help="degrees of freedom for t input")
    p.add_argument("--column", help="CSV column to read")
    p.add_argument("--sided", choices=SIDES, default="two_sided",
                   help="tail used to turn z-scores into p-values (default: two_sided)")


def _add_grid(p):
    p.add_argument("--gamma", type=float, default=3.5, help="largest density threshold")
    p.add_argument("--step", type=float, default=0.01, help="threshold grid step")
    p.add_argument("-M", type=int, default=10, help="Legendre degrees in the deviance")


def build_parser():
    parser = argparse.ArgumentParser(prog="cdfdr",
                                     description="Comparison-density false discovery rate tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit null, skew-beta density and pi0; save the model")
    _add_input(p)
    p.add_argument("--null", choices=("empirical", "theoretical"), default="empirical")
    p.add_argument("--max-degree", type=int, default=10)
    _add_grid(p)
    p.add_argument("--model", required=True, help="where to write the model JSON")
    p.add_argument("--report", help="where to write the fit report (default: stdout)")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reject", help="apply a rejection rule")
    _add_input(p)
    p.add_argument("--model", help="model JSON from 'fit'")
    p.add_argument("--method", choices=tuple(METHOD_NAMES), default="bh")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--alpha0", type=float, default=0.1)
    p.add_argument("--fdr-cutoff", type=float, default=0.2)
    p.add_argument("--pi0", type=float, help="null proportion (default: model's, else 1)")
    p.add_argument("--out", help="output prefix for <prefix>.csv and <prefix>.json")
    p.set_defaults(func=cmd_reject)

    p = sub.add_parser("pi0", help="minimum deviance null proportion and its path")
    _add_input(p)
    p.add_argument("--model", required=True, help="model JSON from 'fit'")
    _add_grid(p)
    p.add_argument("--out", help="output prefix for <prefix>_path.csv and <prefix>.json")
    p.set_defaults(func=cmd_pi0)

    p = sub.add_parser("simulate", help="run a seeded simulation study")
    p.add_argument("--scenario", choices=("normal", "uniform", "uniform-grid"), default="normal")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--pi0", dest="pi0_true", type=float, default=0.9, help="true null proportion")
    p.add_argument("--mu", type=float, default=2.0, help="non-null mean scale (normal)")
    p.add_argument("--a", type=float, default=0.02, help="non-null p-value range (uniform)")
    p.add_argument("--reps", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, help="worker threads (default: CDFDR_THREADS or 1)")
    p.add_argument("--null", choices=("empirical", "theoretical"), default="theoretical")
    p.add_argument("--sided", choices=SIDES, default="right")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--alpha0", type=float, default=0.1)
    p.add_argument("--fdr-cutoff", type=float, default=0.2)
    p.add_argument("--max-degree", type=int, default=10)
    _add_grid(p)
    p.add_argument("--out", help="output prefix for the report JSON and CSV files")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="likelihood-ratio check of p-value uniformity")
    _add_input(p)
    p.add_argument("--out", help="where to write the JSON (default: stdout)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, StageError, IngestError) as exc:
        print(f"cdfdr {args.command}: error in {exc}", file=sys.stderr)
    except (OSError, ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"cdfdr {args.command}: error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
