"""Print suggested iteration counts and lambda bounds over a range of n.

Example:
    python3 scripts/schedule_table.py --xi-beta 0.05 --xi-y 0.1 --tau-max 3
"""

import argparse
import dataclasses

from iscreen.model import RateConstants
from iscreen.pipeline import suggest_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in dataclasses.fields(RateConstants):
        ap.add_argument("--" + f.name.replace("_", "-"), type=float, default=f.default)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200, 500, 1000, 5000])
    args = ap.parse_args()
    rates = RateConstants(**{f.name: getattr(args, f.name) for f in dataclasses.fields(RateConstants)})
    print(f"c_kappa = {rates.c_kappa:g}, c* = {rates.c_star:g}")
    print(f"{'n':>7} {'kappa1':>8} {'kappa2':>8} {'lambda2':>11} {'lambda3':>11}")
    for n in args.n:
        t1 = suggest_schedule(rates, n, "Thm1")
        t2 = suggest_schedule(rates, n, "Thm2")
        t3 = suggest_schedule(rates, n, "Thm3")
        print(f"{n:>7} {t1.kappa:>8} {t2.kappa:>8} {t2.lambda_max:>11.4g} {t3.lambda_max:>11.4g}")


if __name__ == "__main__":
    main()
