"""Order-g^2 classical solution for the drifting, field-dressed particle.

The drift velocity ``c`` is kept on the z axis, so the polarization vector
``a = sum_f B_f u_f f`` is along z as well and spin is quantized there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .modes import ModeFunction, ModeLattice, SourceProfile, form_factor, mode_sum

VELOCITY_GUARD = 0.01


class VelocityDomainError(ValueError):
    """Drift speed at or beyond the meson light cone (|c| >= 1)."""


class MomentumUnreachable(ValueError):
    """No drift velocity in the admissible interval carries the requested momentum."""


def _as_velocity(c):
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        c = np.array([0.0, 0.0, float(c)])
    if c.shape != (3,):
        raise ValueError("velocity must be a scalar (z component) or a 3-vector")
    if not np.linalg.norm(c) < 1.0:
        raise VelocityDomainError(f"|c| = {np.linalg.norm(c)} is not below 1")
    return c


@dataclass(frozen=True)
class Profile(ModeFunction):
    """Closed form of the classical profile ``u(f)`` for a drift ``c`` along z.

    ``u = omega B f3 / (omega^2 - (c f3)^2)`` with ``omega`` and ``B`` taken as
    functions of a continuous momentum, so the profile can be differentiated.
    """

    meson_mass: float
    volume: float
    source: SourceProfile
    c3: float = 0.0

    @classmethod
    def on(cls, lattice: ModeLattice, source: SourceProfile, c3: float = 0.0) -> "Profile":
        return cls(lattice.meson_mass, lattice.volume, source, float(c3))

    def _parts(self, f):
        f = np.atleast_2d(np.asarray(f, dtype=float))
        k2 = np.sum(f * f, axis=1)
        mu2 = self.meson_mass**2
        omega = np.sqrt(mu2 + k2)
        norm = 1.0 / np.sqrt(self.volume * mu2)
        rho = self.source.transform(k2)
        # h = omega * B as a function of k2
        h = norm * np.sqrt(omega) * rho
        dh = norm * (0.25 * omega**-1.5 * rho + np.sqrt(omega) * self.source.transform_dk2(k2))
        denom = mu2 + k2 - (self.c3 * f[:, 2]) ** 2
        return f, h, dh, denom

    def value(self, f):
        f, h, _, denom = self._parts(f)
        return h * f[:, 2] / denom

    def gradient(self, f):
        f, h, dh, denom = self._parts(f)
        f3 = f[:, 2]
        ddenom = 2.0 * f.copy()
        ddenom[:, 2] -= 2.0 * self.c3**2 * f3
        grad = (2.0 * dh * f3 / denom)[:, None] * f
        grad[:, 2] += h / denom
        grad -= (h * f3 / denom**2)[:, None] * ddenom
        return grad


def compute_profile(lattice: ModeLattice, B, c):
    """``u_f = omega_f B_f f3 / (omega_f^2 - (f.c)^2)`` on every mode."""
    c = _as_velocity(c)
    fc = lattice.f @ c
    return lattice.omega * np.asarray(B) * lattice.f[:, 2] / (lattice.omega**2 - fc**2)


def momentum_integral(lattice: ModeLattice, u, c, parallel=False):
    """``I_a = sum_f f_a (f.c) |u_f|^2 / omega_f``."""
    c = _as_velocity(c)
    fc = lattice.f @ c
    w = fc * np.abs(u) ** 2 / lattice.omega
    return mode_sum(lattice.f * w[:, None], parallel=parallel)


def polarization(lattice: ModeLattice, B, u, parallel=False):
    """``a = sum_f B_f u_f f``."""
    return mode_sum(lattice.f * (np.asarray(B) * u)[:, None], parallel=parallel)


def momentum_of_velocity(lattice: ModeLattice, B, g, c3):
    """``P_3 = g^2 I_3`` at drift ``c3`` along z."""
    c = np.array([0.0, 0.0, c3])
    u = compute_profile(lattice, B, c)
    return g * g * momentum_integral(lattice, u, c)[2]


def solve_velocity(lattice: ModeLattice, B, g, P_target, guard=VELOCITY_GUARD):
    """Drift velocity (along z) carrying total momentum ``P_target``.

    Searches the branch ``0 <= |c3| <= 1 - guard`` that starts at rest; ``g^2 I_3``
    is odd in ``c3`` so negative targets are solved by reflection.
    """
    if not g > 0:
        raise ValueError("coupling g must be > 0")
    P = float(P_target)
    if P == 0.0:
        return np.zeros(3)
    target = abs(P)
    c_max = 1.0 - guard
    top = momentum_of_velocity(lattice, B, g, c_max)
    if not top >= target:
        raise MomentumUnreachable(
            f"momentum unreachable at this cutoff: |P| = {target} exceeds "
            f"g^2 I_3(c = {c_max}) = {top}"
        )
    c3 = brentq(lambda x: momentum_of_velocity(lattice, B, g, x) - target,
                0.0, c_max, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.array([0.0, 0.0, np.copysign(c3, P)])


def alpha_coefficients(lattice: ModeLattice, u, c):
    """Field-momentum amplitudes ``alpha_f = i (f.c) u_f / omega_f``.

    Chosen so that ``1/2 sum omega |alpha|^2`` reproduces the
    ``(f.c)^2 |u|^2 / omega`` term of the ground-state energy.
    """
    c = _as_velocity(c)
    return 1j * (lattice.f @ c) * u / lattice.omega


def split_alpha(alpha, constraints):
    """Decompose ``alpha = s + N^T y`` with ``sum_f M_f s_f = 0``.

    Returns ``(s, y)``.  ``y`` plays the role of ``i I`` in the amplitude
    relation; comparing ``-i y`` with :func:`momentum_integral` is a
    diagnostic only.
    """
    y = constraints.M.T @ alpha
    s = alpha - constraints.N.T @ y
    return s, y


@dataclass(frozen=True)
class GroundDoublet:
    lower: float
    upper: float
    spinor_lower: tuple = (0.0, 1.0)
    spinor_upper: tuple = (1.0, 0.0)

    @property
    def gap(self):
        return self.upper - self.lower


def ground_doublet(lattice: ModeLattice, u, alpha, a3, parallel=False):
    """Spin doublet of the order-g^2 Hamiltonian with ``a`` along z."""
    common = 0.5 * mode_sum(lattice.omega * (np.abs(u) ** 2 + np.abs(alpha) ** 2), parallel=parallel)
    return GroundDoublet(lower=-a3 + common, upper=a3 + common)


@dataclass(frozen=True)
class ClassicalEnergy:
    """Pieces of the ground-state energy; ``field`` multiplies ``g^2``."""

    field: float
    kinetic: float
    zero_point: float
    total: float


def classical_energy(lattice: ModeLattice, u, B, c, g, particle_mass, eps0=0.0, parallel=False):
    """``-g^2 sum u B f3 + g^2/2 sum u^2 (omega + (f.c)^2/omega) - m c^2/2 + g eps0``."""
    c = _as_velocity(c)
    fc = lattice.f @ c
    u2 = np.abs(u) ** 2
    coupling = -mode_sum(u * np.asarray(B) * lattice.f[:, 2], parallel=parallel)
    field_energy = 0.5 * mode_sum(u2 * (lattice.omega + fc**2 / lattice.omega), parallel=parallel)
    field_part = float(np.real(coupling + field_energy))
    kinetic = -0.5 * particle_mass * float(c @ c)
    zero_point = g * eps0
    return ClassicalEnergy(field_part, kinetic, zero_point,
                           g * g * field_part + kinetic + zero_point)


def static_self_energy(lattice: ModeLattice, B):
    """``-1/2 sum_f B_f^2 f3^2 / omega_f``, the classical energy at rest per g^2."""
    return -0.5 * float(np.sum(np.asarray(B) ** 2 * lattice.f[:, 2] ** 2 / lattice.omega))


@dataclass(frozen=True)
class MeanField:
    lattice: ModeLattice = field(repr=False)
    source: SourceProfile
    g: float
    c: np.ndarray
    B: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    I: np.ndarray
    a: np.ndarray

    @property
    def a3(self) -> float:
        return float(self.a[2])

    @property
    def profile(self) -> Profile:
        return Profile.on(self.lattice, self.source, self.c[2])

    @property
    def momentum(self) -> float:
        return self.g**2 * float(self.I[2])


def solve_mean_field(lattice: ModeLattice, source: SourceProfile, g, velocity=None, momentum=None,
                     parallel=False) -> MeanField:
    """Classical solution from either a drift velocity or a total momentum along z."""
    if velocity is not None and momentum is not None:
        raise ValueError("give either velocity or momentum, not both")
    B = form_factor(lattice, source)
    if momentum is not None:
        c = solve_velocity(lattice, B, g, momentum)
    else:
        c = _as_velocity(0.0 if velocity is None else velocity)
        if abs(c[0]) > 0 or abs(c[1]) > 0:
            raise ValueError("drift velocity must lie along z")
    u = compute_profile(lattice, B, c)
    alpha = alpha_coefficients(lattice, u, c)
    I = momentum_integral(lattice, u, c, parallel=parallel)
    a = polarization(lattice, B, u, parallel=parallel)
    return MeanField(lattice, source, float(g), c, B, u, alpha, I, a)


def group_velocity_residual(lattice: ModeLattice, source: SourceProfile, g, c3, particle_mass,
                            step=1e-5):
    """Finite-difference ``dE/dP - c3`` along the drift branch.

    Diagnostic for the group-velocity identity; not asserted anywhere.
    """
    B = form_factor(lattice, source)

    def energy_and_momentum(x):
        c = np.array([0.0, 0.0, x])
        u = compute_profile(lattice, B, c)
        e = classical_energy(lattice, u, B, c, g, particle_mass).total
        return e, g * g * momentum_integral(lattice, u, c)[2]

    e_plus, p_plus = energy_and_momentum(c3 + step)
    e_minus, p_minus = energy_and_momentum(c3 - step)
    return (e_plus - e_minus) / (p_plus - p_minus) - c3
