"""Spin-structure energies and the assembled level table.

Energies are reported as coefficients of the inverse-coupling series::

    E = g^2 E0 + g eps0 + E2 + E3 / g + E4 / g^2

``E2`` is partial: the drift kinetic term ``-m c^2 / 2`` plus the part of the
fluctuation zero point not growing with g.  ``E4`` keeps only the
spin-dependent terms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .constraints import build_constraints
from .meanfield import Profile, classical_energy, solve_mean_field
from .modes import ModeFunction, ModeLattice, build_mode_lattice, mode_sum
from .oscillator import build_quadratic_form, order_g_eps0, symplectic_diagonalize


class PipelineError(RuntimeError):
    """Failure inside one stage of the table assembly."""

    def __init__(self, stage, g, cause):
        super().__init__(f"stage {stage!r} failed at g={g}: {cause}")
        self.stage = stage
        self.g = g
        self.cause = cause


class SpinError(ValueError):
    pass


@dataclass(frozen=True)
class SpinQuantumNumbers:
    j: Fraction
    m_z: Fraction

    def __post_init__(self):
        j, m = Fraction(self.j), Fraction(self.m_z)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "m_z", m)
        if j <= 0 or (2 * j).denominator != 1 or (2 * j).numerator % 2 != 1:
            raise SpinError(f"j = {j} is not a positive half-odd integer")
        if abs(m) > j or (j - m).denominator != 1:
            raise SpinError(f"m_z = {m} is not in -j..j for j = {j}")


def multiplet(j):
    """All ``SpinQuantumNumbers`` with total ``j``, ordered by ``m_z``."""
    j = Fraction(j)
    return [SpinQuantumNumbers(j, -j + k) for k in range(int(2 * j) + 1)]


def half_integers(j_max):
    """``1/2, 3/2, ...`` up to ``j_max``."""
    j_max = Fraction(j_max).limit_denominator(2)
    out, j = [], Fraction(1, 2)
    while j <= j_max:
        out.append(j)
        j += 1
    return out


def compute_K_gamma(lattice: ModeLattice, v, B, c, parallel=False):
    """``K = 1/3 sum omega f^2 |v|^2`` and ``gamma = 1/3 sum B^2 f^2 f3^2 / (omega^2 - (f.c)^2)``."""
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        c = np.array([0.0, 0.0, float(c)])
    f2 = np.sum(lattice.f**2, axis=1)
    fc = lattice.f @ c
    K = mode_sum(lattice.omega * f2 * np.abs(v) ** 2, parallel=parallel) / 3.0
    gamma = mode_sum(np.abs(B) ** 2 * f2 * lattice.f[:, 2] ** 2 / (lattice.omega**2 - fc**2),
                     parallel=parallel) / 3.0
    return float(K), float(gamma)


def energy_E3(K, gamma, particle_mass):
    """``3/4 K^2 sqrt(m / gamma)``, taken verbatim with no dimensional repair."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if not particle_mass > 0:
        raise ValueError("particle_mass must be > 0")
    return 0.75 * K * K * math.sqrt(particle_mass / gamma)


def compute_Nsq(lattice: ModeLattice, v: ModeFunction, parallel=False):
    """``N^2 = 1/3 sum omega |f x grad v|^2`` with the analytic gradient of ``v``."""
    cross = np.cross(lattice.f, v.gradient(lattice.f))
    return float(mode_sum(lattice.omega * np.sum(np.abs(cross) ** 2, axis=1), parallel=parallel)) / 3.0


def energy_E4(Nsq, j, m_z):
    """``N^2/2 (j(j+1) + m_z + 3/4)``; exact when given Fractions."""
    q = SpinQuantumNumbers(j, m_z)
    bracket = q.j * (q.j + 1) + q.m_z + Fraction(3, 4)
    if isinstance(Nsq, (Fraction, int)):
        return Fraction(Nsq) / 2 * bracket
    return Nsq / 2.0 * float(bracket)


def fixed_source_E4(Nsq, j):
    """Static-source level ``N^2/2 (j(j+1) + 1/4)``."""
    j = Fraction(j)
    bracket = j * (j + 1) + Fraction(1, 4)
    if isinstance(Nsq, (Fraction, int)):
        return Fraction(Nsq) / 2 * bracket
    return Nsq / 2.0 * float(bracket)


@dataclass(frozen=True)
class SpectrumRow:
    g: float
    j: float
    m_z: float
    c: float
    E0_classical: float
    eps0: float
    E2_part: float
    E3: float
    E4: float
    E_total: float


COLUMNS = tuple(SpectrumRow.__dataclass_fields__)


@dataclass
class SpectrumTable:
    rows: list
    diagnostics: dict = field(default_factory=dict)

    def assembly_residual(self):
        """Largest deviation of ``E_total`` from the series assembly."""
        worst = 0.0
        for r in self.rows:
            series = assemble_total(r.g, r.E0_classical, r.eps0, r.E2_part, r.E3, r.E4)
            worst = max(worst, abs(series - r.E_total))
        return worst

    def as_dicts(self):
        return [asdict(r) for r in self.rows]


def assemble_total(g, E0, eps0, E2, E3, E4):
    return g * g * E0 + g * eps0 + E2 + E3 / g + E4 / (g * g)


def _profile_for_v(choice, lattice, source, c3) -> Profile:
    if choice == "u":
        return Profile.on(lattice, source, c3)
    if choice == "static":
        return Profile.on(lattice, source, 0.0)
    raise ValueError(f"unknown v choice {choice!r}")


def spectrum_point(lattice, source, g, particle_mass, j_list, velocity=None, momentum=None,
                   v_choice="u", oscillator=True, constrained=True, parallel=False):
    """Rows and diagnostics for one coupling value."""
    stage = "meanfield"
    try:
        mf = solve_mean_field(lattice, source, g, velocity=velocity, momentum=momentum, parallel=parallel)
        c = mf.c
        eps0 = 0.0
        shift = 0.0
        zero_point = 0.0
        if oscillator:
            stage = "constraints"
            cs = build_constraints(lattice, mf.profile) if constrained else None
            stage = "oscillator"
            form = build_quadratic_form(lattice, mf, cs, g, particle_mass)
            modes = symplectic_diagonalize(form)
            eps0 = order_g_eps0(mf, particle_mass)
            zero_point = modes.eps0
            shift = zero_point - g * eps0
        stage = "spectrum"
        ce = classical_energy(lattice, mf.u, mf.B, c, g, particle_mass)
        v = _profile_for_v(v_choice, lattice, source, c[2])
        v_values = v.value(lattice.f)
        K, gamma = compute_K_gamma(lattice, v_values, mf.B, c, parallel=parallel)
        E3 = energy_E3(K, gamma, particle_mass)
        Nsq = compute_Nsq(lattice, v, parallel=parallel)
        E2 = ce.kinetic + shift
        rows = []
        for j in j_list:
            for q in multiplet(j):
                E4 = energy_E4(Nsq, q.j, q.m_z)
                total = assemble_total(g, ce.field, eps0, E2, E3, E4)
                rows.append(SpectrumRow(float(g), float(q.j), float(q.m_z), float(c[2]),
                                        ce.field, eps0, E2, E3, E4, total))
        diag = {
            "g": float(g), "c": float(c[2]), "P": mf.momentum, "a3": mf.a3,
            "doublet_gap": 2.0 * mf.a3 * g * g, "K": K, "gamma": gamma, "Nsq": Nsq,
            "eps0": eps0, "zero_point": zero_point, "zero_point_shift": shift,
        }
        return rows, diag
    except PipelineError:
        raise
    except Exception as exc:  # attribute the failure to its stage
        raise PipelineError(stage, g, exc) from exc


def assemble_table(config, g_list=None, j_list=None) -> SpectrumTable:
    """Run lattice, mean field, constraints, oscillator and spin energies per g."""
    g_list = list(config.g_list if g_list is None else g_list)
    j_list = list(half_integers(config.j_max) if j_list is None else j_list)
    try:
        lattice = build_mode_lattice(config.box_length, config.meson_mass, config.cutoff)
    except Exception as exc:
        raise PipelineError("modes", None, exc) from exc
    source = config.source
    velocity, momentum = config.motion()

    def point(g):
        return spectrum_point(lattice, source, g, config.particle_mass, j_list,
                              velocity=velocity, momentum=momentum, v_choice=config.v_choice,
                              oscillator=config.oscillator, constrained=config.constrained)

    if config.serial or len(g_list) < 2:
        results = [point(g) for g in g_list]
    else:
        with ThreadPoolExecutor(max_workers=min(4, len(g_list))) as pool:
            results = list(pool.map(point, g_list))
    rows = [r for rs, _ in results for r in rs]
    diagnostics = {repr(float(d["g"])): d for _, d in results}
    return SpectrumTable(rows, diagnostics)


def lattice_quantities(lattice, source, velocity=0.0):
    """``K, gamma, N^2, a3`` and the classical coefficient for a scan point."""
    mf = solve_mean_field(lattice, source, 1.0, velocity=velocity)
    prof = mf.profile
    K, gamma = compute_K_gamma(lattice, mf.u, mf.B, mf.c)
    ce = classical_energy(lattice, mf.u, mf.B, mf.c, 1.0, 0.0)
    return {"K": K, "gamma": gamma, "Nsq": compute_Nsq(lattice, prof), "a3": mf.a3,
            "E0_classical": ce.field}


def convergence_scan(points):
    """Quantities at each scan point and relative changes between neighbours.

    ``points`` is a list of ``(label, lattice, source)``.
    """
    table = []
    for label, lat, source in points:
        q = lattice_quantities(lat, source)
        table.append({"point": label, "n_modes": lat.size, **q})
    deltas = []
    keys = ("K", "gamma", "Nsq", "a3", "E0_classical")
    for prev, cur in zip(table, table[1:]):
        deltas.append({"from": prev["point"], "to": cur["point"],
                       **{k: abs(cur[k] - prev[k]) / abs(prev[k]) if prev[k] != 0 else math.inf
                          for k in keys}})
    return table, deltas


__all__ = [
    "SpinQuantumNumbers", "SpectrumRow", "SpectrumTable", "PipelineError", "multiplet",
    "compute_K_gamma", "energy_E3", "compute_Nsq", "energy_E4", "fixed_source_E4",
    "assemble_table", "spectrum_point", "convergence_scan", "lattice_quantities",
]
