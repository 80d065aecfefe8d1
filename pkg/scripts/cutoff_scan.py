"""Relative change of the lattice sums as the cutoff or source radius moves."""

import argparse
import math

from strongcoupling.modes import SourceProfile, build_mode_lattice
from strongcoupling.spectrum import convergence_scan


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cutoffs", type=float, nargs="+", default=[2.0, 3.0, 4.0])
    parser.add_argument("--radii", type=float, nargs="+", default=[0.5, 0.7, 1.0])
    args = parser.parse_args()

    for R in args.radii:
        src = SourceProfile("point" if R == 0 else "gaussian", R)
        points = [(f"cutoff={c}", build_mode_lattice(2 * math.pi, 1.0, c), src) for c in args.cutoffs]
        table, deltas = convergence_scan(points)
        print(f"R = {R}")
        for row in table:
            print(f"  {row['point']:<12} modes={row['n_modes']:<4} K={row['K']:.6g} "
                  f"gamma={row['gamma']:.6g} N^2={row['Nsq']:.6g}")
        for d in deltas:
            print(f"  {d['from']} -> {d['to']}: dK={d['K']:.2%} dgamma={d['gamma']:.2%} dN2={d['Nsq']:.2%}")


if __name__ == "__main__":
    main()
