"""Command-line entry point: ``iscreen screen|simulate|verify``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure,
1 failed verification.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional, Sequence

from . import io as iio
from .model import (
    AlgorithmConfig,
    InvalidInput,
    PenaltySpec,
    Screening,
    ScreeningError,
    Selection,
    StopReason,
    standardize,
)
from .pipeline import DEFAULT_MAX_ITERS, PRESET_RULES, Preset, default_screen_size, run

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

PRESET_FLAGS = {
    "isis": Preset.ISIS,
    "van-isis": Preset.VanISIS,
    "van-isis-r": Preset.VanISIS_R,
    "fr": Preset.FR,
    "sis": Preset.SIS_once,
    "np-isis": Preset.NP_ISIS,
    "np-van-isis": Preset.NP_VanISIS,
    "np-van-isis-r": Preset.NP_VanISIS_R,
}


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_algorithm_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("algorithm")
    g.add_argument("--preset", choices=sorted(PRESET_FLAGS))
    g.add_argument("--scr", type=int, choices=[1, 2, 3])
    g.add_argument("--sel", type=int, choices=[1, 2, 3])
    g.add_argument("--a-size", type=_positive_int, help="constant screening size a_k")
    g.add_argument("--a-schedule", help="comma-separated a_1,...,a_kappa")
    g.add_argument("--max-iters", type=_positive_int, help="kappa")
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--penalty", choices=["lasso", "scad"])
    g.add_argument("--scad-a", type=float)
    g.add_argument("--no-fixed-point-stop", action="store_true",
                   help="SEL3: keep iterating after S_k = S_{k+1}")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", help="write the report here instead of stdout")


def build_config(args: argparse.Namespace, n: int) -> AlgorithmConfig:
    """Resolve the algorithm flags into a config; raises UsageError."""
    explicit = args.scr is not None or args.sel is not None
    if args.preset and explicit:
        raise UsageError("--preset cannot be combined with --scr/--sel")
    if not args.preset and not (args.scr and args.sel):
        raise UsageError("give either --preset or both --scr and --sel")
    if args.a_size is not None and args.a_schedule:
        raise UsageError("--a-size and --a-schedule are mutually exclusive")

    if args.preset:
        preset = PRESET_FLAGS[args.preset]
        screening, selection = PRESET_RULES[preset]
        default_size = 1 if preset is Preset.FR else default_screen_size(n)
        default_iters = 1 if preset is Preset.SIS_once else DEFAULT_MAX_ITERS
    else:
        screening, selection = Screening(f"SCR{args.scr}"), Selection(f"SEL{args.sel}")
        default_size, default_iters = default_screen_size(n), DEFAULT_MAX_ITERS

    kappa = args.max_iters or default_iters
    if args.a_schedule:
        try:
            sizes = tuple(int(v) for v in args.a_schedule.split(","))
        except ValueError:
            raise UsageError("--a-schedule must be comma-separated integers") from None
        if args.max_iters is None:
            kappa = len(sizes)
    else:
        sizes = args.a_size or default_size

    penalty = None
    if selection is Selection.SEL1:
        if args.lam is not None or args.penalty or args.scad_a is not None:
            raise UsageError("--lambda/--penalty/--scad-a apply only to SEL2/SEL3")
    else:
        if args.lam is None:
            raise UsageError(f"{selection.value} needs --lambda")
        try:
            penalty = PenaltySpec(args.penalty or "lasso", args.lam,
                                  3.7 if args.scad_a is None else args.scad_a)
        except InvalidInput as e:
            raise UsageError(str(e)) from None
    try:
        return AlgorithmConfig(screening, selection, sizes, kappa, penalty,
                               stop_on_fixed_point=not args.no_fixed_point_stop)
    except InvalidInput as e:
        raise UsageError(str(e)) from None


def cmd_screen(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    try:
        data = iio.load_csv(args.input, args.response, not args.no_header, args.delimiter)
        if args.standardize == "on":
            data = standardize(data)
    except (ScreeningError, OSError, InvalidInput) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    t_load = time.perf_counter()
    config = build_config(args, data.n)
    traj = run(data, config)
    t_run = time.perf_counter()
    names = data.names()
    report = iio.RunReport(
        input={
            "path": str(args.input),
            "n": data.n,
            "p": data.p,
            "sha256": iio.file_fingerprint(args.input),
            "standardized": data.standardized,
            "seed": args.seed,
        },
        config=config,
        trajectory=traj,
        selected=list(traj.final_model),
        selected_names=[names[j] for j in traj.final_model],
        rss_path=[traj.initial_rss] + [r.rss for r in traj.records],
        timings={"load_s": t_load - t0, "run_s": t_run - t_load},
    )
    text = (iio.dumps(report.to_dict()) if args.format == "json"
            else iio.trajectory_csv(traj))
    iio.emit(text, args.output)
    if not traj.records and traj.stop_reason in (
        StopReason.RANK_DEFICIENT, StopReason.NO_ELIGIBLE_COLUMNS
    ):
        print(f"numerical failure at step 1: {traj.detail}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    from .simulation import CovarianceSpec, ExperimentSpec, TruthSpec, run_experiment

    try:
        cov = CovarianceSpec.parse(args.cov, args.p)
    except InvalidInput as e:
        raise UsageError(str(e)) from None
    if args.adversarial and cov.family != "cs":
        raise UsageError("--adversarial needs --cov cs:RHO")
    config = build_config(args, args.n)
    try:
        spec = ExperimentSpec(
            n=args.n, p=args.p, covariance=cov,
            truth=TruthSpec(args.t, args.beta_min, args.signs, args.placement),
            noise_sd=args.noise_sd, replications=args.reps, algorithm=config,
            success_mode=args.success, seed=args.seed, adversarial=args.adversarial,
        )
    except InvalidInput as e:
        raise UsageError(str(e)) from None
    try:
        report = run_experiment(spec, workers=args.workers)
    except ScreeningError as e:
        print(f"simulation failed: {e}", file=sys.stderr)
        return EXIT_DATA
    iio.emit(iio.dumps(report.to_dict()), args.output)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_all

    results = run_all(args.instances, args.seed)
    width = max(len(r.name) for r in results)
    print(f"{'suite':<{width}}  {'result':<6}  {'instances':>9}  max error")
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.instances:>9}  {r.max_error:.3e}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failing suites: {', '.join(failed)}", file=sys.stderr)
    if args.output:
        iio.write_atomic(args.output, iio.dumps({
            "passed": not failed,
            "seed": args.seed,
            "suites": [r.to_dict() for r in results],
        }))
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iscreen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("screen", help="run an iterative screening algorithm on a CSV file")
    p.add_argument("--input", required=True)
    p.add_argument("--response", help="response column name (default: last column)")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--standardize", choices=["on", "off"], default="on")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("simulate", help="Monte-Carlo sure-screening experiment")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--cov", default="identity", help="identity | ar1:RHO | cs:RHO")
    p.add_argument("--beta-min", type=float, default=1.0)
    p.add_argument("--signs", choices=["positive", "random"], default="positive")
    p.add_argument("--placement", choices=["random", "first"], default="random")
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--adversarial", action="store_true")
    p.add_argument("--success", choices=["final", "any"])
    p.add_argument("--workers", type=_positive_int, help="default: all cores (ISCREEN_THREADS caps)")
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the oracle agreement suites")
    p.add_argument("--instances", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the JSON summary here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
