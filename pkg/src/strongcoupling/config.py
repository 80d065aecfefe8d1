"""Flat ``section.key = value`` run configuration."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .modes import SourceProfile


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


def _floats(text):
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


def _vectors(text):
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            v = tuple(int(x) for x in chunk.split(","))
            if len(v) != 3:
                raise ValueError(f"mode {chunk!r} is not an integer 3-vector")
            out.append(v)
    return tuple(out)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    t = str(text).strip().lower()
    return None if t in ("", "none", "null") else float(t)


# key -> (attribute, parser)
KEYS = {
    "lattice.L": ("box_length", float),
    "lattice.mu": ("meson_mass", float),
    "lattice.cutoff": ("cutoff", float),
    "source.kind": ("source_kind", str),
    "source.R": ("source_radius", float),
    "coupling.g": ("g_list", _floats),
    "particle.mass": ("particle_mass", float),
    "motion.c": ("velocity", _optional_float),
    "motion.P": ("momentum", _optional_float),
    "spin.j_max": ("j_max", float),
    "design.v": ("v_choice", str),
    "oscillator.enabled": ("oscillator", _bool),
    "oscillator.constrained": ("constrained", _bool),
    "oracle.preset": ("oracle_preset", str),
    "oracle.modes": ("oracle_modes", _vectors),
    "oracle.B": ("oracle_B", _floats),
    "oracle.g": ("oracle_g", _floats),
    "oracle.n_max": ("oracle_n_max", int),
    "oracle.cap": ("oracle_cap", int),
    "oracle.tol": ("oracle_tol", float),
    "scan.cutoffs": ("scan_cutoffs", _floats),
    "scan.radii": ("scan_radii", _floats),
    "check.cutoffs": ("check_cutoffs", _floats),
    "check.radii": ("check_radii", _floats),
    "output.dir": ("output_dir", str),
    "output.format": ("output_format", str),
}

# excluded from the config hash: they do not change any computed number
EXECUTION_ONLY = {"serial", "output_dir", "output_format"}


@dataclass(frozen=True)
class RunConfig:
    box_length: float = 2.0 * math.pi
    meson_mass: float = 1.0
    cutoff: float = 3.0
    source_kind: str = "gaussian"
    source_radius: float = 1.0
    g_list: tuple = (4.0, 8.0, 16.0)
    particle_mass: float = 5.0
    velocity: float | None = 0.2
    momentum: float | None = None
    j_max: float = 2.5
    v_choice: str = "u"
    oscillator: bool = True
    constrained: bool = True
    fixed_source: bool = False
    oracle_preset: str = "none"
    oracle_modes: tuple = ((0, 0, 1), (1, 0, 0))
    oracle_B: tuple = ()
    oracle_g: tuple = (4.0, 8.0, 16.0)
    oracle_n_max: int = 40
    oracle_cap: int = 20_000
    oracle_tol: float = 1e-8
    scan_cutoffs: tuple = (2.0, 3.0, 4.0)
    scan_radii: tuple = ()
    check_cutoffs: tuple = (2.0, 3.0)
    check_radii: tuple = (0.5, 0.7, 1.0)
    serial: bool = False
    output_dir: str = "out"
    output_format: str = "both"

    @property
    def source(self) -> SourceProfile:
        return SourceProfile(self.source_kind, self.source_radius)

    def motion(self):
        """``(velocity, momentum)`` with exactly one set; both ``None`` means rest."""
        if self.fixed_source:
            return 0.0, None
        if self.momentum is not None:
            return None, self.momentum
        return (0.0 if self.velocity is None else self.velocity), None

    def switches(self):
        """Active reconstruction choices recorded with every output."""
        return {
            "alpha": "alpha_f = i (f.c) u_f / omega_f",
            "fluctuation_form": "H2 = p^2/2m + g^2 lam.K.lam/2 + sum omega (P^2+Q^2)/2 + g sum (d_f.lam) Q_f;"
                                " constrained=" + str(self.constrained).lower(),
            "v_profile": self.v_choice,
            "gamma_denominator": "first power of (omega^2 - (f.c)^2)",
            "fixed_source": self.fixed_source,
        }

    def canonical_items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self) if f.name not in EXECUTION_ONLY]

    def config_hash(self) -> str:
        text = "\n".join(f"{k} = {v!r}" for k, v in self.canonical_items())
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def validate(self):
        """Collect every problem before raising one :class:`ConfigError`."""
        p = []
        if not self.box_length > 0:
            p.append("lattice.L must be > 0")
        if not self.meson_mass > 0:
            p.append("lattice.mu must be > 0")
        if not self.cutoff > 0:
            p.append("lattice.cutoff must be > 0")
        elif self.box_length > 0 and self.cutoff < 2 * math.pi / self.box_length:
            p.append("lattice.cutoff is below the smallest lattice momentum (empty lattice)")
        if self.source_kind not in ("point", "gaussian"):
            p.append("source.kind must be 'point' or 'gaussian'")
        if not self.source_radius >= 0:
            p.append("source.R must be >= 0")
        if not self.g_list:
            p.append("coupling.g must list at least one value")
        if any(not g > 0 for g in self.g_list):
            p.append("coupling.g values must be > 0")
        if not self.particle_mass > 0:
            p.append("particle.mass must be > 0")
        if self.velocity is not None and self.momentum is not None:
            p.append("set only one of motion.c and motion.P")
        if self.velocity is not None and not abs(self.velocity) < 1:
            p.append("motion.c must satisfy |c| < 1")
        j2 = 2 * self.j_max
        if not (self.j_max >= 0.5 and abs(j2 - round(j2)) < 1e-12):
            p.append("spin.j_max must be a half-integer >= 1/2")
        if self.v_choice not in ("u", "static"):
            p.append("design.v must be 'u' or 'static'")
        if self.oracle_preset not in ("none", "single-mode", "two-mode"):
            p.append("oracle.preset must be none, single-mode or two-mode")
        if any(v == (0, 0, 0) for v in self.oracle_modes):
            p.append("oracle.modes may not contain the zero mode")
        if self.oracle_n_max < 0:
            p.append("oracle.n_max must be >= 0")
        if self.oracle_cap <= 0:
            p.append("oracle.cap must be > 0")
        if any(not g > 0 for g in self.oracle_g):
            p.append("oracle.g values must be > 0")
        if any(not c > 0 for c in self.scan_cutoffs + self.check_cutoffs):
            p.append("scan/check cutoffs must be > 0")
        if any(not r >= 0 for r in self.scan_radii + self.check_radii):
            p.append("scan/check radii must be >= 0")
        if self.output_format not in ("csv", "json", "both"):
            p.append("output.format must be csv, json or both")
        if p:
            raise ConfigError(p)
        return self


def parse_config_text(text: str) -> dict:
    values = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        attr, parser = KEYS[key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")
    if problems:
        raise ConfigError(problems)
    return values


def load_config(path=None, **overrides) -> RunConfig:
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read {path}: {exc}"]) from exc
        values = parse_config_text(text)
    if "momentum" in values and "velocity" not in values:
        values["velocity"] = None
    cfg = replace(RunConfig(), **values)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


def dump_config(cfg: RunConfig) -> str:
    """Render ``cfg`` back to the flat text format."""
    lines = []
    for key, (attr, parser) in KEYS.items():
        v = getattr(cfg, attr)
        if v is None:
            text = "none"
        elif parser is _vectors:
            text = "; ".join(",".join(str(x) for x in vec) for vec in v)
        elif isinstance(v, tuple):
            text = ",".join(repr(x) for x in v)
        elif isinstance(v, bool):
            text = "true" if v else "false"
        else:
            text = str(v) if isinstance(v, str) else repr(v)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
