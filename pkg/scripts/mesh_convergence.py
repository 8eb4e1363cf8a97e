"""Ground-state energy under 1D mesh refinement, plus the 2D symmetry check.

    python3 scripts/mesh_convergence.py --ns 31 63 127 255 --b 1
"""
import argparse

import numpy as np

from kirchhoff_nehari import EnergyContext, build_mesh, from_name, solve_ground_state


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[31, 63, 127, 255])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--nl", default="log_power")
    ap.add_argument("--p", type=float, default=6.0)
    ap.add_argument("--n2d", type=int, default=31, help="2D grid size (0 to skip)")
    args = ap.parse_args()
    nl = from_name(args.nl, args.p)

    print("n,energy,t_u,iters,status")
    energies = []
    for n in args.ns:
        r = solve_ground_state(EnergyContext(build_mesh(1, 1.0, n), nl, args.a, args.b))
        energies.append(r.energy)
        print(f"{n},{r.energy:.17g},{r.t_u:.17g},{r.iterations},{r.status}")
    d = np.abs(np.diff(energies))
    for k in range(len(d) - 1):
        print(f"# difference ratio {args.ns[k]}->{args.ns[k + 2]}: {d[k] / d[k + 1]:.3f}")

    if args.n2d:
        mesh = build_mesh(2, 1.0, args.n2d)
        r = solve_ground_state(EnergyContext(mesh, nl, args.a, args.b))
        V = r.field.reshape(mesh.shape)
        asym = max(np.abs(V - V[::-1]).max(), np.abs(V - V[:, ::-1]).max(), np.abs(V - V.T).max())
        print(f"# 2D {args.n2d}x{args.n2d}: {r.status}, energy {r.energy:.12g}, "
              f"relative asymmetry {asym / np.abs(V).max():.2e}")


if __name__ == "__main__":
    main()
