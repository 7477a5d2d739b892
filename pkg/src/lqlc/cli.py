"""``lqlc`` command line: synthetic data, solving, fitting, sweeps and benchmarks.

Typical pipeline::

    lqlc gen-synthetic --output-dir run --epochs 500 --seed 7
    lqlc solve --input run/observations.csv --truth run/truth.json --output-dir run
    lqlc fit-dist --input run/errors.csv --output-dir run/fits
    lqlc sweep-scale --output-dir run --trials 200

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import errmodels, io
from .bench import run_bench
from .distfit import FITTERS, fit, histogram_overlay
from .errmodels import LogisticModel
from .errors import InsufficientSamples, LqlcError, NumericalError, ValidationError
from .estimators import EstimatorSpec
from .metrics import ErrorSeries, metrics_dict
from .model import EcefPosition, EpochObservations, LlhPosition, llh_to_ecef
from .simulate import BUNDLED_SCENARIOS, GeometryScenario, MismatchSweepConfig, generate_epoch, scale_mismatch_sweep
from .solver import SolverConfig, irls_solve

log = logging.getLogger("lqlc")

FIT_WARN_SAMPLES = 10_000
FIT_MIN_SAMPLES = 100


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors (exit 1); 2 is reserved for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- argument helpers -------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range_pair(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] <= vals[1]:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH with LOW <= HIGH, got {text!r}")
    return vals[0], vals[1]


def _scale_source(text: str) -> tuple[str, float | None]:
    if text == "column":
        return "column", None
    kind, _, value = text.partition(":")
    if kind == "constant":
        try:
            v = float(value)
        except ValueError:
            v = float("nan")
        if not v > 0 or not np.isfinite(v):
            raise argparse.ArgumentTypeError(f"constant scale must be a positive number of meters, got {value!r}")
        return "constant", v
    if kind == "model" and value:
        return "model", value
    raise argparse.ArgumentTypeError(f"expected column, constant:<meters> or model:<path>, got {text!r}")


def _resolve_scale(source) -> float | None:
    kind, value = source
    if kind == "constant":
        return value
    if kind == "model":
        return errmodels.loads(Path(value).read_text()).scale
    return None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iter, step_tolerance=args.tol)


def _load_scenario(ref: str) -> GeometryScenario:
    if ref in BUNDLED_SCENARIOS:
        return GeometryScenario.bundled(ref)
    return GeometryScenario.load(ref)


def _truth_position(args) -> EcefPosition | None:
    if args.truth_llh and args.truth:
        raise ValidationError("give either --truth-llh or --truth, not both")
    if args.truth_llh:
        return llh_to_ecef(LlhPosition.parse(args.truth_llh))
    if args.truth:
        llh = io.read_json(args.truth)["receiver_llh"]
        return llh_to_ecef(LlhPosition(float(llh["latitude"]), float(llh["longitude"]), float(llh["height"])))
    return None


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands ------------------------------------------------------------

def cmd_gen_synthetic(args) -> int:
    scenario = _load_scenario(args.scenario)
    model = errmodels.loads(Path(args.error_model).read_text()) if args.error_model else LogisticModel(0.0, 10.0)
    if args.epochs < 0:
        raise ValidationError("--epochs must be non-negative")
    out = _out_dir(args)
    epochs, errors = [], []
    truth = scenario_epoch_truth(scenario)
    for k in range(args.epochs):
        seq = np.random.SeedSequence([args.seed, k])
        epoch = generate_epoch(scenario, model, seq, k, outlier_fraction=args.outlier_fraction,
                               outlier_range=args.outlier_range)
        epochs.append(epoch)
        errors.extend(epoch.pseudoranges - truth)
    io.write_observations(out / "observations.csv", epochs)
    io.write_samples(out / "errors.csv", errors)
    io.write_json(out / "truth.json", {
        **scenario.to_dict(),
        "error_model": errmodels.model_to_dict(model),
        "epochs": args.epochs,
        "seed": args.seed,
        "outlier_fraction": args.outlier_fraction,
        "outlier_range": list(args.outlier_range),
    })
    log.info("wrote %d epochs to %s", args.epochs, out)
    return 0


def scenario_epoch_truth(scenario: GeometryScenario) -> np.ndarray:
    """Error-free pseudoranges (range plus clock bias) of every scenario satellite."""
    rx = scenario.receiver_truth
    return np.array([s.position.distance_to(rx) + scenario.clock_biases[s.constellation] for s in scenario.satellites])


def cmd_solve(args) -> int:
    spec = EstimatorSpec.parse(args.estimator)
    scale = _resolve_scale(args.scales)
    truth = _truth_position(args)
    config = _solver_config(args)
    groups = io.read_observation_groups(args.input)
    if not groups:
        raise ValidationError(f"{args.input}: no epochs")
    out = _out_dir(args)

    sol_rows, res_rows, reports = [], [], []
    numerical_failures = 0
    for index, obs in groups:
        try:
            epoch = EpochObservations(index, obs)
            if scale is not None:
                epoch = epoch.with_scales(scale)
            report = irls_solve(epoch, spec, config=config)
        except LqlcError as exc:
            log.warning("epoch %d: %s: %s", index, type(exc).__name__, exc)
            sol_rows.append(io.failed_solution_row(index, type(exc).__name__))
            numerical_failures += isinstance(exc, NumericalError)
            continue
        reports.append(report)
        sol_rows.append(io.solution_row(report, args.record_time))
        res_rows.extend(io.residual_rows(epoch, report))

    io.write_solutions(out / f"solutions_{spec.value}.csv", sol_rows)
    io.write_residuals(out / f"residuals_{spec.value}.csv", res_rows)
    if not reports:
        log.error("all %d epochs failed", len(groups))
        return 2 if numerical_failures else 1
    if truth is not None:
        t = truth.as_array()
        series = ErrorSeries(np.array([np.linalg.norm(r.state.position.as_array() - t) for r in reports]))
        baseline = None
        if args.baseline_metrics:
            baseline = float(io.read_json(args.baseline_metrics)["rmse_3d"])
        metrics = metrics_dict(spec.value, series, baseline)
        metrics["failed_epochs"] = len(groups) - len(reports)
        io.write_json(out / f"metrics_{spec.value}.json", metrics)
    log.info("solved %d of %d epochs with %s", len(reports), len(groups), spec.value)
    return 0


def cmd_fit_dist(args) -> int:
    names = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = sorted(set(names) - set(FITTERS))
    if unknown or not names:
        raise ValidationError(f"unknown models {unknown}; choose from {sorted(FITTERS)}")
    samples = io.read_samples(args.input)
    if samples.size < FIT_MIN_SAMPLES:
        raise InsufficientSamples(f"{samples.size} samples; at least {FIT_MIN_SAMPLES} are required")
    if samples.size < FIT_WARN_SAMPLES:
        log.warning("only %d samples; fits below %d samples may be unstable", samples.size, FIT_WARN_SAMPLES)
    out = _out_dir(args)
    fitted = {}
    for name in names:
        try:
            report = fit(name, samples)
        except LqlcError as exc:
            raise type(exc)(f"{name} fit failed: {exc}") from exc
        fitted[name] = report.model
        io.write_json(out / f"{name}_model.json", errmodels.model_to_dict(report.model))
        io.write_json(out / f"{name}_fit.json", report.to_dict())
        log.info("%s: log-likelihood %.6f", name, report.log_likelihood)
    io.write_histogram(out / "histogram.csv", histogram_overlay(samples, fitted, bins=args.bins))
    return 0


def cmd_sweep_scale(args) -> int:
    scenario = _load_scenario(args.scenario)
    kwargs = {} if args.alphas is None else {"alphas": args.alphas}
    config = MismatchSweepConfig(s_true=args.s_true, trials_per_alpha=args.trials, seed=args.seed,
                                 common_random_numbers=not args.independent_draws,
                                 solver=_solver_config(args), **kwargs)
    result = scale_mismatch_sweep(scenario, config, workers=args.workers)
    out = _out_dir(args)
    io.write_sweep(out / "sweep.csv", result)
    return 0


def cmd_bench(args) -> int:
    groups = io.read_observation_groups(args.input)
    match = [obs for index, obs in groups if index == args.epoch]
    if not match:
        raise ValidationError(f"{args.input}: no epoch {args.epoch}")
    epoch = EpochObservations(args.epoch, match[0])
    scale = _resolve_scale(args.scales)
    if scale is not None:
        epoch = epoch.with_scales(scale)
    specs = [EstimatorSpec.parse(args.estimator)] if args.estimator else list(EstimatorSpec)
    out = _out_dir(args)
    config = _solver_config(args)
    for spec in specs:
        report = run_bench(epoch, spec, args.runs, config, warmup=args.warmup)
        io.write_bench(out / f"bench_{spec.value}.csv", report)
        io.write_json(out / f"bench_{spec.value}_summary.json", report.summary_dict())
        log.info("%s: mean %.2f iterations, mean %.3e s", spec.value, report.mean_iterations, report.mean_time)
    return 0


# -- parser -----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, solver: bool = False) -> None:
    p.add_argument("--output-dir", default=".", help="directory for output files (created if missing)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    if solver:
        p.add_argument("--max-iter", type=int, default=100, help="IRLS iteration cap (default 100)")
        p.add_argument("--tol", type=float, default=1e-4,
                       help="convergence threshold on the state increment norm, meters (default 1e-4)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lqlc", description="LS / LQLC pseudorange positioning tools.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", help="generate synthetic observations with a truth sidecar")
    _common(p)
    p.add_argument("--scenario", default="default",
                   help=f"scenario JSON path or bundled name {list(BUNDLED_SCENARIOS)} (default: default)")
    p.add_argument("--error-model", help="error model JSON (default: logistic, m = 0 m, s = 10 m)")
    p.add_argument("--epochs", type=int, default=100, help="number of epochs (default 100)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--outlier-fraction", type=float, default=0.0,
                   help="probability that a pseudorange gets a positive gross error (default 0)")
    p.add_argument("--outlier-range", type=_range_pair, default=(200.0, 400.0),
                   help="gross error range LOW,HIGH in meters (default 200,400)")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("solve", help="solve every epoch of an observation CSV")
    _common(p, solver=True)
    p.add_argument("--input", required=True, help="observation CSV (meters)")
    p.add_argument("--estimator", choices=[s.value for s in EstimatorSpec], default="lqlc",
                   help="lqlc (logistic-error M-estimator, default) or ls (least squares)")
    p.add_argument("--scales", type=_scale_source, default=("column", None),
                   help="scale source: column, constant:<meters> or model:<path> (default column)")
    p.add_argument("--truth-llh", help="receiver truth as lat,lon,h (degrees, degrees, meters)")
    p.add_argument("--truth", help="truth JSON written by gen-synthetic")
    p.add_argument("--baseline-metrics", help="metrics JSON whose rmse_3d is the reduction baseline")
    p.add_argument("--record-time", action="store_true",
                   help="fill wall_time_s (seconds); off by default so outputs are reproducible")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit-dist", help="fit error models to pooled pseudorange errors")
    _common(p)
    p.add_argument("--input", required=True, help="one-column CSV of errors, or a residuals CSV (meters)")
    p.add_argument("--models", default=",".join(FITTERS),
                   help=f"comma-separated subset of {list(FITTERS)} (default all)")
    p.add_argument("--bins", type=int, default=100, help="histogram bins (default 100)")
    p.set_defaults(func=cmd_fit_dist)

    p = sub.add_parser("sweep-scale", help="LQLC accuracy versus assumed-to-true scale ratio")
    _common(p, solver=True)
    p.add_argument("--scenario", default="default", help="scenario JSON path or bundled name")
    p.add_argument("--alphas", type=_float_list, help="comma-separated ratios (default 21 log-spaced in [0.1, 10])")
    p.add_argument("--trials", type=int, default=2000, help="trials per ratio (default 2000)")
    p.add_argument("--s-true", type=float, default=10.0, help="true logistic scale, meters (default 10)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--independent-draws", action="store_true",
                   help="fresh error draws per ratio instead of common random numbers")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.set_defaults(func=cmd_sweep_scale)

    p = sub.add_parser("bench", help="time repeated solves of one epoch")
    _common(p, solver=True)
    p.add_argument("--input", required=True, help="observation CSV (meters)")
    p.add_argument("--epoch", type=int, default=0, help="epoch index to benchmark (default 0)")
    p.add_argument("--runs", type=int, default=1000, help="measured runs (default 1000)")
    p.add_argument("--warmup", type=int, default=10, help="discarded warm-up runs (default 10)")
    p.add_argument("--estimator", choices=[s.value for s in EstimatorSpec], help="estimator to time (default: both)")
    p.add_argument("--scales", type=_scale_source, default=("column", None),
                   help="scale source: column, constant:<meters> or model:<path>")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error reported by _Parser
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="lqlc: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except NumericalError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    except (ValidationError, ValueError, KeyError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
