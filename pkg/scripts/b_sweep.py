"""Warm-started sweep of the ground state over the Kirchhoff coefficient b.

Prints b, energy, t_u and log10(t_u). Past roughly b = 2.5 (a = 1, unit
square or interval) the log_power maximizer t_u leaves the double range,
which the sweep reports as a failure instead of a number.
"""
import argparse

import numpy as np

from kirchhoff_nehari import EnergyContext, KirchhoffError, build_mesh, from_name, solve_ground_state
from kirchhoff_nehari.solver import SolveConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bs", type=float, nargs="+",
                    default=[0.01, 0.03, 0.1, 0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 10.0])
    ap.add_argument("--n", type=int, default=127)
    ap.add_argument("--nl", default="log_power")
    ap.add_argument("--p", type=float, default=6.0)
    args = ap.parse_args()
    mesh = build_mesh(1, 1.0, args.n)
    nl = from_name(args.nl, args.p)
    prev = None
    print("b,energy,t_u,log10_t_u,iters,status")
    for b in args.bs:
        try:
            r = solve_ground_state(EnergyContext(mesh, nl, 1.0, b), SolveConfig(), init=prev)
        except KirchhoffError as exc:
            print(f"{b:g},nan,nan,nan,0,failed ({exc})")
            continue
        if r.converged:
            prev = r.field
        print(f"{b:g},{r.energy:.17g},{r.t_u:.17g},{np.log10(r.t_u):.3f},{r.iterations},{r.status}")


if __name__ == "__main__":
    main()
