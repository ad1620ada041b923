"""Brute-force Monte-Carlo bisection for the censoring constant.

Independent of the quadrature solver: draws (A, T) pairs with A <= T by
rejection and bisects C until the censored fraction P(T > A + C) hits the
target.  Used to freeze the reference values in the test suite.

    python scripts/oracle_censor_constant.py --draws 10000000
"""

import argparse

import numpy as np


def pairs(rng, draws, g_rate, w_rate):
    a = rng.exponential(1 / w_rate, 2 * draws)
    t = rng.exponential(1 / g_rate, 2 * draws)
    keep = a <= t
    return a[keep][:draws], t[keep][:draws]


def bisect(resid, target, lo=0.0, hi=50.0, iters=60):
    resid = np.sort(resid)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        frac = 1.0 - np.searchsorted(resid, mid, side="right") / resid.size
        lo, hi = (mid, hi) if frac > target else (lo, mid)
    return 0.5 * (lo + hi)


def main():
    ap = argparse.ArgumentParser(description="Monte-Carlo censoring-constant oracle")
    ap.add_argument("--draws", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--targets", type=float, nargs="+", default=[0.10, 0.25, 0.50])
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    a, t = pairs(rng, args.draws, 1.0, 1.0)
    for target in args.targets:
        c = bisect(t - a, target)
        print(f"target {target:.2f}: C = {c:.5f}  (Exp/Exp closed form {-np.log(target):.5f})")


if __name__ == "__main__":
    main()
