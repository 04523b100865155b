"""One-step SIS versus ISIS on the design where a relevant predictor is
marginally uncorrelated with the response.

Example:
    python3 scripts/adversarial_demo.py --reps 100 --rho 0.5
"""

import argparse

import numpy as np

from iscreen.model import PenaltySpec
from iscreen.pipeline import default_screen_size, iterations_to_coverage, preset_config, run
from iscreen.simulation import adversarial_instance, adversarial_population


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=1000)
    ap.add_argument("--t", type=int, default=4)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--max-iters", type=int, default=5)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sigma, beta = adversarial_population(args.p, args.t, args.rho)
    hidden = args.t - 1
    print(f"beta on T: {beta[: args.t]}")
    print(f"population cov(x_{hidden}, y) = {(sigma @ beta)[hidden]:.3e}")

    a = default_screen_size(args.n)
    sis = preset_config("SIS_once", args.n, screen_sizes=a)
    isis = preset_config("ISIS", args.n, PenaltySpec("lasso", args.lam), max_iters=args.max_iters,
                         screen_sizes=a)
    sis_miss, isis_hit, rank_hidden, iters = 0, 0, [], []
    for r in range(args.reps):
        ss = np.random.SeedSequence(args.seed, spawn_key=(r,))
        data, truth = adversarial_instance(args.n, args.p, args.t, ss, rho=args.rho)
        sis_miss += hidden not in run(data, sis).final_model
        order = np.argsort(-np.abs(data.x.T @ data.y), kind="stable")
        rank_hidden.append(int(np.flatnonzero(order == hidden)[0]) + 1)
        k = iterations_to_coverage(run(data, isis), truth)
        if k is not None:
            isis_hit += 1
            iters.append(k)
    print(f"a = {a}, replications = {args.reps}")
    print(f"SIS misses x_{hidden}: {sis_miss / args.reps:.2f} "
          f"(median marginal rank {np.median(rank_hidden):.0f} of {args.p})")
    print(f"ISIS covers T at some step: {isis_hit / args.reps:.2f}"
          + (f" (mean step {np.mean(iters):.2f})" if iters else ""))


if __name__ == "__main__":
    main()
