"""Sure-screening rate of every preset on one simulated design.

Example:
    python3 scripts/compare_presets.py --n 200 --p 1000 --cov ar1:0.5 --reps 50
"""

import argparse
import json

from iscreen.model import PenaltySpec
from iscreen.pipeline import PRESET_RULES, Preset, preset_config
from iscreen.simulation import CovarianceSpec, ExperimentSpec, TruthSpec, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=1000)
    ap.add_argument("--t", type=int, default=5)
    ap.add_argument("--cov", default="ar1:0.5")
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--noise-sd", type=float, default=1.0)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--max-iters", type=int, default=5)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.05)
    ap.add_argument("--penalty", choices=["lasso", "scad"], default="lasso")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--json", action="store_true", help="print full reports as JSON")
    args = ap.parse_args()

    pen = PenaltySpec(args.penalty, args.lam)
    cov = CovarianceSpec.parse(args.cov, args.p)
    reports = {}
    print(f"{'preset':<14} {'rule':<10} {'success':>8} {'mean |S|':>9} {'iters':>6} {'time s':>7}")
    for preset in Preset:
        kappa = 1 if preset is Preset.SIS_once else args.max_iters
        cfg = preset_config(preset, args.n, pen, max_iters=kappa)
        spec = ExperimentSpec(
            n=args.n, p=args.p, covariance=cov, truth=TruthSpec(args.t, args.beta),
            noise_sd=args.noise_sd, replications=args.reps, algorithm=cfg, seed=args.seed,
        )
        rep = run_experiment(spec, workers=args.workers)
        reports[preset.value] = rep.to_dict()
        scr, sel = PRESET_RULES[preset]
        iters = rep.mean_iterations_to_coverage
        print(
            f"{preset.value:<14} {scr.value + '-' + sel.value:<10} {rep.success_rate:>8.2f} "
            f"{rep.mean_final_model_size:>9.1f} {'-' if iters is None else f'{iters:.1f}':>6} "
            f"{rep.wall_time_s:>7.1f}"
        )
    if args.json:
        print(json.dumps(reports, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
