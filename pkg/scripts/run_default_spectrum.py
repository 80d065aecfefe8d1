"""Assemble the level table for the default configuration and print it."""

import argparse

from strongcoupling.config import load_config
from strongcoupling.spectrum import assemble_table


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="optional key = value config file")
    parser.add_argument("--g", type=float, nargs="*", help="override the coupling list")
    args = parser.parse_args()

    cfg = load_config(args.config, serial=True, g_list=tuple(args.g) if args.g else None)
    table = assemble_table(cfg)
    print(f"{'g':>6} {'j':>4} {'m_z':>5} {'E0':>12} {'eps0':>10} {'E2':>10} {'E3':>10} {'E4':>10} {'E_total':>12}")
    for r in table.rows:
        print(f"{r.g:6.1f} {r.j:4.1f} {r.m_z:5.1f} {r.E0_classical:12.6g} {r.eps0:10.4g} "
              f"{r.E2_part:10.4g} {r.E3:10.4g} {r.E4:10.4g} {r.E_total:12.6g}")
    for key, d in table.diagnostics.items():
        print(f"g={key}: c={d['c']:.3f} a3={d['a3']:.4g} K={d['K']:.4g} gamma={d['gamma']:.4g} "
              f"N^2={d['Nsq']:.4g} doublet gap={d['doublet_gap']:.4g}")


if __name__ == "__main__":
    main()
