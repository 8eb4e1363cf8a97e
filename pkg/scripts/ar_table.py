"""Tabulate u f(u) / F(u) for the builtin nonlinearities.

For u^3 log(1 + |u|) the ratio creeps down to 4 only logarithmically; the
last column prints an independent 40-digit evaluation.
"""
import argparse

import mpmath
import numpy as np

from kirchhoff_nehari import ar_ratio, builtin_log_power, builtin_pure_power


def log_ratio_mp(u):
    with mpmath.workdps(40):
        u = mpmath.mpf(u)
        lg = mpmath.log1p(u)
        F = u**4 / 4 * lg - (u**4 / 4 - u**3 / 3 + u**2 / 2 - u + lg) / 4
        return u**4 * lg / F


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmin", type=int, default=-3)
    ap.add_argument("--kmax", type=int, default=12)
    ap.add_argument("--p", type=float, default=6.0)
    args = ap.parse_args()
    log_nl, pow_nl = builtin_log_power(), builtin_pure_power(args.p)
    print("u,log_power,pure_power,log_power_mp")
    for u in 10.0 ** np.arange(args.kmin, args.kmax + 1):
        print(f"{u:.17g},{ar_ratio(log_nl, u):.17g},{ar_ratio(pow_nl, u):.17g},"
              f"{mpmath.nstr(log_ratio_mp(u), 17)}")
    # where the ratio first drops below 4.01
    with mpmath.workdps(40):
        L = mpmath.findroot(lambda L: log_ratio_mp(mpmath.e**L) - mpmath.mpf("4.01"), 100)
    print(f"# log_power ratio < 4.01 requires u > e^{mpmath.nstr(L, 6)} = {mpmath.nstr(mpmath.e**L, 4)}")


if __name__ == "__main__":
    main()
