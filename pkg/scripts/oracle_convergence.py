"""Exact ground energies of the two-mode fixed source against the g^2 term.

Prints the residual per coupling, its truncation change and the fitted
log-log slope of the relative residual.
"""

import argparse
import math

from strongcoupling.oracle import compare_expansion


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--g", type=float, nargs="+", default=[4.0, 8.0, 16.0])
    parser.add_argument("--B", type=float, default=0.3 * math.sqrt(2.0))
    parser.add_argument("--n-max", type=int, default=None,
                        help="fixed truncation; default scales with the displacement")
    args = parser.parse_args()

    def n_max_of_g(g):
        if args.n_max is not None:
            return args.n_max
        # occupation scale of the displaced ground state plus margin
        return int(math.ceil(0.7 * (g * args.B) ** 2 + 12))

    report = compare_expansion([(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)], [args.B, args.B], args.g, 0,
                               n_max_of_g=n_max_of_g)
    print(f"zero point 1/2 sum omega = {report.zero_point:.6f}")
    print(f"{'g':>6} {'n_max':>5} {'E_exact':>14} {'residual':>12} {'rel':>10} {'change':>9}")
    for r in report.rows:
        print(f"{r.g:6.1f} {r.n_max:5d} {r.E_exact:14.8f} {r.residual:12.6f} "
              f"{r.relative_residual:10.4g} {r.truncation_change:9.2g}{'' if r.converged else '  (unconverged)'}")
    print("slope:", "n/a" if report.slope is None else f"{report.slope:.3f}")


if __name__ == "__main__":
    main()
