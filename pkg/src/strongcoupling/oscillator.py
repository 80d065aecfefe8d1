"""Quadratic fluctuation Hamiltonian around the mean field and its normal modes.

Coordinates are the three particle oscillation coordinates followed by the
field coordinates restricted to the constrained subspace ``N Q = 0``.  In
canonically rescaled variables the form reads::

    H2 = p_lam^2 / 2m + g^2/2 lam.K.lam + 1/2 sum_f omega_f (P_f^2 + Q_f^2)
         + g sum_f (d_f . lam) Q_f

with ``K_ab = sum_f B_f u_f f3 f_a f_b`` and ``d_fa = B_f f3 f_a``.  Linear
momentum terms removed by the drift phase are dropped.  Each lattice mode is
treated as one real coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .constraints import ConstraintSet
from .meanfield import MeanField
from .modes import ModeLattice


class UnstableSpectrumError(ArithmeticError):
    def __init__(self, eigenvalue):
        super().__init__(f"unstable fluctuation spectrum: squared frequency {eigenvalue:.6g} < 0")
        self.eigenvalue = eigenvalue


class ZeroModeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadraticForm:
    """``H = 1/2 p.T_mom.p + 1/2 x.V.x`` on ``n_lambda + n_field`` coordinates."""

    coordinate: np.ndarray = field(repr=False)
    momentum: np.ndarray = field(repr=False)
    n_lambda: int = 3
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.coordinate.shape[0]

    def check(self, tol=1e-13):
        for name, m in (("coordinate", self.coordinate), ("momentum", self.momentum)):
            asym = np.max(np.abs(m - m.T)) / max(1.0, np.max(np.abs(m)))
            if asym > tol:
                raise AssertionError(f"{name} block not symmetric ({asym:.3g})")
        if np.min(np.linalg.eigvalsh(self.momentum)) <= 0:
            raise AssertionError("momentum block is not positive definite")


def curvature_matrix(lattice: ModeLattice, B, u):
    """``K_ab = sum_f B_f u_f f3 f_a f_b``."""
    w = np.asarray(B) * np.real(u) * lattice.f[:, 2]
    return (lattice.f * w[:, None]).T @ lattice.f


def dipole_couplings(lattice: ModeLattice, B):
    """``(n, 3)`` array ``d_fa = B_f f3 f_a``."""
    return (np.asarray(B) * lattice.f[:, 2])[:, None] * lattice.f


def build_quadratic_form(lattice: ModeLattice, meanfield: MeanField, constraints: ConstraintSet | None,
                         g, particle_mass, dipole_scale=1.0, basis=None) -> QuadraticForm:
    """Assemble the fluctuation form.

    ``constraints=None`` keeps every field mode (no collective directions
    removed).  ``dipole_scale`` multiplies the particle-field cross block.
    ``basis`` overrides the orthonormal basis of the constrained subspace.
    """
    if not particle_mass > 0:
        raise ValueError("particle_mass must be > 0")
    if not np.linalg.norm(meanfield.c) < 1:
        raise ValueError("|c| must be < 1")
    if basis is None:
        basis = np.eye(lattice.size) if constraints is None else constraints.kernel_basis()
    W = basis
    K = curvature_matrix(lattice, meanfield.B, meanfield.u)
    D = dipole_couplings(lattice, meanfield.B)
    field_block = W.T @ (lattice.omega[:, None] * W)
    cross = g * dipole_scale * (W.T @ D)
    coord = np.block([[g * g * K, cross.T], [cross, field_block]])
    mom = np.block([
        [np.eye(3) / particle_mass, np.zeros((3, W.shape[1]))],
        [np.zeros((W.shape[1], 3)), field_block],
    ])
    coord = 0.5 * (coord + coord.T)
    mom = 0.5 * (mom + mom.T)
    form = QuadraticForm(coord, mom, 3, W)
    form.check()
    return form


def symplectic_form(n):
    """Canonical ``[[0, 1], [-1, 0]]`` for ordering ``(x_1..x_n, p_1..p_n)``."""
    z = np.zeros((n, n))
    e = np.eye(n)
    return np.block([[z, e], [-e, z]])


@dataclass(frozen=True)
class NormalModes:
    frequencies: np.ndarray
    eps0: float
    transform: np.ndarray = field(repr=False)
    zero_modes: tuple = ()

    def symplectic_residual(self):
        n = len(self.frequencies)
        omega = symplectic_form(n)
        S = self.transform
        return float(np.max(np.abs(S @ omega @ S.T - omega)))


def symplectic_diagonalize(form: QuadraticForm, zero_tol=1e-10, on_zero_mode="flag") -> NormalModes:
    """Normal-mode frequencies of ``1/2 p.T.p + 1/2 x.V.x``.

    With ``T = L L^T`` the canonical map ``x = L y, p = L^-T pi`` leaves
    ``1/2 pi^2 + 1/2 y.(L^T V L).y``, diagonalized by one symmetric eigensolve.
    The returned ``transform`` maps ``(x, p)`` to normal coordinates
    ``(Q, P)`` with ``H = sum nu (P^2 + Q^2)/2``; zero modes keep unit scaling.
    """
    L = np.linalg.cholesky(form.momentum)
    S2 = L.T @ form.coordinate @ L
    S2 = 0.5 * (S2 + S2.T)
    lam, R = np.linalg.eigh(S2)
    scale = max(1.0, float(np.max(np.abs(lam))))
    zero = np.abs(lam) <= zero_tol * scale
    if np.any((lam < 0) & ~zero):
        raise UnstableSpectrumError(float(np.min(lam)))
    if np.any(zero) and on_zero_mode == "raise":
        raise ZeroModeError(f"{int(np.sum(zero))} zero mode(s) in the fluctuation spectrum")
    nu = np.where(zero, 0.0, np.sqrt(np.clip(lam, 0.0, None)))
    s = np.where(zero, 1.0, np.sqrt(np.where(zero, 1.0, nu)))
    Linv = sla.solve_triangular(L, np.eye(len(L)), lower=True)
    A = (s[:, None] * R.T) @ Linv
    Bm = (R.T / s[:, None]) @ L.T
    n = len(nu)
    transform = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), Bm]])
    return NormalModes(nu, 0.5 * float(np.sum(nu)), transform, tuple(int(k) for k in np.flatnonzero(zero)))


def order_g_eps0(meanfield: MeanField, particle_mass):
    """Zero-point energy per unit g of the particle oscillator alone.

    ``1/2 sum sqrt(eig(K) / m)``: the large-g slope of the total zero point.
    """
    K = curvature_matrix(meanfield.lattice, meanfield.B, meanfield.u)
    k = np.linalg.eigvalsh(0.5 * (K + K.T))
    return 0.5 * float(np.sum(np.sqrt(np.clip(k, 0.0, None) / particle_mass)))
