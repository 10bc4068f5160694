"""Command-line interface.

Subcommands: fit, predict, simulate, split-eval, amse-check, cv-table.
Every command accepts --seed and prints a single machine-readable JSON
summary on success; identical invocations on identical inputs produce
identical outputs.  The FDAREG_NUM_THREADS environment variable sets the
default worker count for split-eval replicates.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import dataio
from .exceptions import DegenerateFitError
from .selection import cross_validate, fit_pipeline
from .simulate import (
    ScoreVarianceSpec,
    SyntheticDesign,
    amse_factor_check,
    generate_sample,
    split_experiment,
)
from .wls import predict_weighted_values


def _design_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["i", "ii", "constant"], default="i",
                        help="error model of the synthetic design")
    parser.add_argument("--grid-points", type=int, default=365)
    parser.add_argument("--interval", type=float, nargs=2, default=[1.0, 365.0],
                        metavar=("LO", "HI"))
    parser.add_argument("--n-terms", type=int, default=24,
                        help="number of Karhunen-Loeve components")
    parser.add_argument("--eigen-scale", type=float, default=12000.0)
    parser.add_argument("--beta-grouping", choices=["linear", "reciprocal"],
                        default="linear")
    parser.add_argument("--constant-noise", type=float, default=0.5,
                        help="error scale for --model constant")


def _design_from_args(args) -> SyntheticDesign:
    return SyntheticDesign(
        interval=(args.interval[0], args.interval[1]),
        n_points=args.grid_points,
        n_terms=args.n_terms,
        eigen_scale=args.eigen_scale,
        beta_grouping=args.beta_grouping,
        error_model=args.model,
        constant_noise=args.constant_noise,
        seed=args.seed,
    )


def _emit(summary: dict) -> None:
    json.dump(summary, sys.stdout)
    sys.stdout.write("\n")


def _cmd_fit(args) -> int:
    sample = dataio.load_dataset(args.data)
    if args.cv:
        selection = cross_validate(
            sample, args.rmax, args.kmax, args.variant, folds=args.cv_folds
        )
        r, k = selection.chosen
    else:
        if args.r is None or args.k is None:
            raise SystemExit("fit: supply --r and --k, or use --cv")
        selection, r, k = None, args.r, args.k
    pipeline = fit_pipeline(sample, r, k, args.variant, selection=selection)
    dataio.save_model(pipeline, args.out)
    summary = {
        "command": "fit",
        "variant": args.variant,
        "r": r,
        "k": k,
        "cross_validated": bool(args.cv),
        "n": sample.n_observations,
        "grid_points": len(sample.grid),
        "variance_model": {
            "c2": pipeline.variance.c2,
            "a": pipeline.variance.a,
            "status": pipeline.variance.status,
        },
        "model": str(args.out),
    }
    if selection is not None:
        summary["w_min"] = float(selection.w_grid[r, k])
        summary["ties_broken"] = selection.ties_broken
    _emit(summary)
    return 0


def _cmd_predict(args) -> int:
    pipeline = dataio.load_model(args.model_file)
    model_grid = pipeline.pilot.basis.grid
    grid, curve_values, _ = dataio.load_curves(args.data)
    if grid != model_grid:
        grid, curve_values, _ = dataio.load_curves(args.data, resample_to=model_grid)
    predictions = predict_weighted_values(pipeline.weighted, curve_values)
    dataio.write_predictions_csv(predictions, args.out)
    _emit({
        "command": "predict",
        "n": int(len(predictions)),
        "model": str(args.model_file),
        "out": str(args.out),
    })
    return 0


def _cmd_simulate(args) -> int:
    design = _design_from_args(args)
    generated = generate_sample(design, args.n)
    dataio.write_dataset(generated.sample, args.out)
    summary = {
        "command": "simulate",
        "n": args.n,
        "seed": args.seed,
        "error_model": design.error_model,
        "out": str(args.out),
    }
    if args.truth_out:
        dataio.write_truth_csv(generated, args.truth_out)
        summary["truth_out"] = str(args.truth_out)
    if args.slope_out:
        dataio.write_slope_csv(generated.beta, args.slope_out)
        summary["slope_out"] = str(args.slope_out)
    _emit(summary)
    return 0


def _cmd_split_eval(args) -> int:
    if args.data:
        data = dataio.load_dataset(args.data)
        target = args.target or "y"
    else:
        data = generate_sample(_design_from_args(args), args.n)
        target = args.target or "mu"
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    report = split_experiment(
        data,
        B=args.B,
        variants=variants,
        seed=args.seed,
        target=target,
        r_max=args.rmax,
        k_max=args.kmax,
        n_jobs=args.jobs,
    )
    if args.out_json:
        dataio.write_report_json(report, args.out_json)
    if args.out_csv:
        dataio.write_report_csv(report, args.out_csv)
    summary = {
        "command": "split-eval",
        "seed": args.seed,
        "summary": report.summary(),
        "metadata": report.metadata,
    }
    if args.out_json:
        summary["out_json"] = str(args.out_json)
    if args.out_csv:
        summary["out_csv"] = str(args.out_csv)
    _emit(summary)
    return 0


def _variance_spec(const, coefs, indices, label: str) -> ScoreVarianceSpec:
    coefs = coefs or []
    indices = indices or []
    if len(coefs) != len(indices):
        raise SystemExit(
            f"amse-check: --{label}-coef and --{label}-index must be repeated "
            "the same number of times"
        )
    return ScoreVarianceSpec(const, tuple(coefs), tuple(indices))


def _cmd_amse_check(args) -> int:
    sigma = _variance_spec(args.sigma2_const, args.sigma2_coef, args.sigma2_index,
                           "sigma2")
    if args.tau_like_sigma is not None:
        tau = sigma.scaled(args.tau_like_sigma)
    elif args.tau2_const is not None:
        tau = _variance_spec(args.tau2_const, args.tau2_coef, args.tau2_index, "tau2")
    else:
        tau = ScoreVarianceSpec(1.0)
    result = amse_factor_check(
        sigma,
        tau,
        n=args.n,
        replications=args.replications,
        seed=args.seed,
        r=args.r,
        theta=None if args.n_terms is None
        else 1.0 / np.arange(1, args.n_terms + 1) ** 2,
    )
    _emit({"command": "amse-check", "seed": args.seed, **result.to_json_dict()})
    return 0


def _cmd_cv_table(args) -> int:
    sample = dataio.load_dataset(args.data)
    result = cross_validate(
        sample, args.rmax, args.kmax, args.variant, folds=args.cv_folds
    )
    import csv as _csv

    with open(args.out, "w", newline="") as handle:
        writer = _csv.writer(handle)
        writer.writerow(["r", "k", "w"])
        for (r, k), value in sorted(result.as_dict().items()):
            writer.writerow([r, k, repr(value)])
    _emit({
        "command": "cv-table",
        "variant": args.variant,
        "chosen": list(result.chosen),
        "ties_broken": result.ties_broken,
        "w_min": float(result.w_grid[result.chosen]),
        "out": str(args.out),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdareg",
        description="Scalar-on-function regression with heteroscedasticity-"
        "adaptive weighting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a weighted pipeline on a dataset CSV")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--out", required=True, help="model JSON path")
    p_fit.add_argument("--variant", choices=["tilde", "check"], default="tilde")
    p_fit.add_argument("--r", type=int, help="pilot truncation")
    p_fit.add_argument("--k", type=int, help="weighted truncation")
    p_fit.add_argument("--cv", action="store_true",
                       help="choose (r, k) by leave-one-out cross-validation")
    p_fit.add_argument("--rmax", type=int, default=None)
    p_fit.add_argument("--kmax", type=int, default=None)
    p_fit.add_argument("--cv-folds", type=int, default=None,
                       help="p-fold mode instead of leave-one-out")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="predict responses for curves")
    p_pred.add_argument("--model", dest="model_file", required=True)
    p_pred.add_argument("--data", required=True,
                        help="curves CSV (a leading y column is ignored)")
    p_pred.add_argument("--out", required=True)
    p_pred.add_argument("--seed", type=int, default=0)
    p_pred.set_defaults(func=_cmd_predict)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    p_sim.add_argument("--n", type=int, default=204)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--truth-out", default=None)
    p_sim.add_argument("--slope-out", default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    _design_arguments(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_split = sub.add_parser(
        "split-eval",
        help="random half-split comparison of weighted vs unweighted prediction",
    )
    p_split.add_argument("--data", default=None,
                         help="dataset CSV; omit to use a synthetic design")
    p_split.add_argument("--n", type=int, default=204,
                         help="synthetic sample size when no --data is given")
    p_split.add_argument("--B", type=int, default=100)
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--target", choices=["y", "mu"], default=None)
    p_split.add_argument("--variants", default="tilde,check")
    p_split.add_argument("--rmax", type=int, default=24)
    p_split.add_argument("--kmax", type=int, default=24)
    p_split.add_argument("--jobs", type=int,
                         default=int(os.environ.get("FDAREG_NUM_THREADS", "1")))
    p_split.add_argument("--out-json", default=None)
    p_split.add_argument("--out-csv", default=None)
    _design_arguments(p_split)
    p_split.set_defaults(func=_cmd_split_eval)

    p_amse = sub.add_parser(
        "amse-check",
        help="Monte Carlo vs quadrature check of the weighted variance factor",
    )
    p_amse.add_argument("--n", type=int, default=500)
    p_amse.add_argument("--replications", type=int, default=200)
    p_amse.add_argument("--seed", type=int, default=0)
    p_amse.add_argument("--sigma2-const", type=float, default=1.0,
                        help="constant term of sigma^2")
    p_amse.add_argument("--sigma2-coef", type=float, action="append",
                        help="quadratic coefficient (repeatable)")
    p_amse.add_argument("--sigma2-index", type=int, action="append",
                        help="1-based score index for each coefficient")
    p_amse.add_argument("--tau-like-sigma", type=float, nargs="?", const=1.0,
                        default=None, metavar="FACTOR",
                        help="model tau as FACTOR * sigma (default factor 1)")
    p_amse.add_argument("--tau2-const", type=float, default=None)
    p_amse.add_argument("--tau2-coef", type=float, action="append")
    p_amse.add_argument("--tau2-index", type=int, action="append")
    p_amse.add_argument("--r", type=int, default=None, help="fixed truncation")
    p_amse.add_argument("--n-terms", type=int, default=None)
    p_amse.set_defaults(func=_cmd_amse_check)

    p_table = sub.add_parser("cv-table", help="write the full W(r, k) grid")
    p_table.add_argument("--data", required=True)
    p_table.add_argument("--out", required=True)
    p_table.add_argument("--variant", choices=["tilde", "check"], default="tilde")
    p_table.add_argument("--rmax", type=int, default=None)
    p_table.add_argument("--kmax", type=int, default=None)
    p_table.add_argument("--cv-folds", type=int, default=None)
    p_table.add_argument("--seed", type=int, default=0)
    p_table.set_defaults(func=_cmd_cv_table)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, DegenerateFitError) as exc:
        print(f"fdareg {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
