"""Command-line entry point.

Subcommands: ``spectrum``, ``oracle-compare``, ``scan``, ``dump-lattice``,
``constraints-check``.  Exit status 0 on success (warnings allowed), 2 on a
configuration error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .constraints import build_constraints
from .meanfield import solve_mean_field
from .modes import SourceProfile, build_mode_lattice, form_factor
from .oracle import compare_expansion
from .spectrum import COLUMNS, PipelineError, assemble_table, convergence_scan

log = logging.getLogger("strongcoupling")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

ORACLE_COLUMNS = ("g", "n_max", "E_exact", "E_expansion", "residual", "relative_residual",
                  "residual_classical", "converged", "truncation_change")
LATTICE_COLUMNS = ("n1", "n2", "n3", "f1", "f2", "f3", "omega", "B")
SCAN_COLUMNS = ("point", "n_modes", "K", "gamma", "Nsq", "a3", "E0_classical")


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _meta(cfg: RunConfig, command: str):
    return {"command": command, "config_hash": cfg.config_hash(), "switches": cfg.switches()}


def write_csv(path: Path, columns, rows, meta):
    lines = [f"# config_hash={meta['config_hash']}",
             "# switches=" + json.dumps(_jsonable(meta["switches"]), sort_keys=True),
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_render(row.get(c)) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload):
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")


def _emit(cfg, name, columns, rows, meta, extra=None):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg.output_format in ("csv", "both"):
        write_csv(out / f"{name}.csv", columns, rows, meta)
        written.append(out / f"{name}.csv")
    if cfg.output_format in ("json", "both"):
        write_json(out / f"{name}.json", {"meta": meta, "rows": rows, **(extra or {})})
        written.append(out / f"{name}.json")
    return written


def run_spectrum(cfg: RunConfig):
    table = assemble_table(cfg)
    meta = _meta(cfg, "spectrum")
    written = _emit(cfg, "spectrum", COLUMNS, table.as_dicts(), meta)
    sidecar = Path(cfg.output_dir) / "spectrum.meta.json"
    write_json(sidecar, {**meta, "config": dict(cfg.canonical_items()),
                         "diagnostics": table.diagnostics,
                         "notes": {"E2_part": "partial: -m c^2/2 plus non-growing zero-point shift"}})
    return written + [sidecar], table


def oracle_inputs(cfg: RunConfig):
    """Momenta, couplings, meson mass and g list for the oracle comparison."""
    if cfg.oracle_preset == "single-mode":
        # omega = 1.2 for f = (0,0,1); g B f3 / sqrt 2 = 0.5 at g = 1
        return [(0.0, 0.0, 1.0)], [0.5 * math.sqrt(2.0)], math.sqrt(1.2**2 - 1.0), [1.0]
    if cfg.oracle_preset == "two-mode":
        b = 0.3 * math.sqrt(2.0)
        return [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)], [b, b], 1.0, [4.0, 8.0, 16.0]
    lattice = build_mode_lattice(cfg.box_length, cfg.meson_mass, cfg.cutoff)
    step = 2 * math.pi / cfg.box_length
    f_list = [tuple(step * x for x in n) for n in cfg.oracle_modes]
    from .oracle import select_modes

    modes = select_modes(f_list, cfg.meson_mass)
    if cfg.oracle_B:
        B = list(cfg.oracle_B)
    else:
        for n in cfg.oracle_modes:
            lattice.index_of(n)  # must be a lattice mode
        B = list(form_factor(lattice, cfg.source, np.array([m.f for m in modes])))
    return f_list, B, cfg.meson_mass, list(cfg.oracle_g)


def run_oracle_compare(cfg: RunConfig):
    f_list, B, mu, g_list = oracle_inputs(cfg)
    report = compare_expansion(f_list, B, g_list, cfg.oracle_n_max, meson_mass=mu,
                               tol=cfg.oracle_tol, cap=cfg.oracle_cap)
    for row in report.rows:
        if not row.converged:
            log.warning("g=%s: truncation not converged (change %.3g between n_max and n_max+2)",
                        row.g, row.truncation_change)
    d = report.as_dict()
    meta = _meta(cfg, "oracle-compare")
    written = _emit(cfg, "oracle_compare", ORACLE_COLUMNS, d.pop("rows"), meta, d)
    return written, report


def run_convergence_scan(cfg: RunConfig, cutoffs=None, radii=None):
    """Scan cutoffs at the configured radius, or radii at the configured cutoff."""
    radii = list(cfg.scan_radii if radii is None else radii)
    cutoffs = list(cfg.scan_cutoffs if cutoffs is None else cutoffs)
    points = []
    if radii:
        lat = build_mode_lattice(cfg.box_length, cfg.meson_mass, cfg.cutoff)
        for R in radii:
            src = SourceProfile("point" if R == 0 else "gaussian", R)
            points.append((f"R={R!r}", lat, src))
    else:
        for lam in cutoffs:
            lat = build_mode_lattice(cfg.box_length, cfg.meson_mass, lam)
            points.append((f"cutoff={lam!r}", lat, cfg.source))
    table, deltas = convergence_scan(points)
    meta = _meta(cfg, "scan")
    written = _emit(cfg, "scan", SCAN_COLUMNS, table, meta, {"deltas": deltas})
    return written, table, deltas


def run_dump_lattice(cfg: RunConfig):
    lat = build_mode_lattice(cfg.box_length, cfg.meson_mass, cfg.cutoff)
    B = form_factor(lat, cfg.source)
    rows = [{"n1": int(n[0]), "n2": int(n[1]), "n3": int(n[2]), "f1": f[0], "f2": f[1], "f3": f[2],
             "omega": w, "B": b} for n, f, w, b in zip(lat.n, lat.f, lat.omega, B)]
    return _emit(cfg, "lattice", LATTICE_COLUMNS, rows, _meta(cfg, "dump-lattice"))


def run_constraints_check(cfg: RunConfig):
    report = []
    velocity, momentum = cfg.motion()
    for lam in cfg.check_cutoffs:
        for R in cfg.check_radii:
            lat = build_mode_lattice(cfg.box_length, cfg.meson_mass, lam)
            src = SourceProfile("point" if R == 0 else "gaussian", R)
            mf = solve_mean_field(lat, src, cfg.g_list[0], velocity=velocity, momentum=momentum)
            cs = build_constraints(lat, mf.profile)
            report.append({"cutoff": lam, "R": R, "n_modes": lat.size, "c": float(mf.c[2]),
                           **cs.residuals()})
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "constraints_check.json"
    write_json(path, {"meta": _meta(cfg, "constraints-check"), "points": report})
    return [path], report


def build_parser():
    p = argparse.ArgumentParser(prog="strongcoupling", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["spectrum", "oracle-compare", "scan", "dump-lattice",
                                        "constraints-check"])
    p.add_argument("--config", type=Path, help="flat key = value configuration file")
    p.add_argument("--serial", action="store_true", help="force the deterministic serial path")
    p.add_argument("--fixed-source", action="store_true", help="pin the particle: c = 0")
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--format", choices=["csv", "json", "both"])
    p.add_argument("--cutoffs", type=str, help="comma list overriding scan.cutoffs")
    p.add_argument("--radii", type=str, help="comma list overriding scan.radii")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(
            args.config,
            serial=True if args.serial else None,
            fixed_source=True if args.fixed_source else None,
            output_dir=str(args.output_dir) if args.output_dir else None,
            output_format=args.format,
        )
        cutoffs = [float(x) for x in args.cutoffs.split(",")] if args.cutoffs else None
        radii = [float(x) for x in args.radii.split(",")] if args.radii else None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "spectrum":
            written, _ = run_spectrum(cfg)
        elif args.command == "oracle-compare":
            written, _ = run_oracle_compare(cfg)
        elif args.command == "scan":
            written, _, _ = run_convergence_scan(cfg, cutoffs, radii)
        elif args.command == "dump-lattice":
            written = run_dump_lattice(cfg)
        else:
            written, _ = run_constraints_check(cfg)
    except PipelineError as exc:
        print(f"numerical failure [{exc.stage}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, ValueError, MemoryError, RuntimeError) as exc:
        print(f"numerical failure [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
