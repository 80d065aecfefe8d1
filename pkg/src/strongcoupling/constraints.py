"""Collective-coordinate constraints: generator actions, the N and M systems,
the projector ``A = 1 - M N`` and the iterative solution for ``N~``.

Index convention for the six collective directions: rows 0-2 are rotations
about x, y, z (``i = 1``), rows 3-5 translations along x, y, z (``i = 2``).

``ConstraintSet`` stores real arrays.  The rotation generator
``J1_a = -i eps_abc f_b d/df_c`` carries a constant ``-i``; the stored rotation
rows are ``(f x grad u)_a = i (J1_a u)``.  A constant row factor does not
change the constraint surface, the projector or the biorthogonality of N and M.
:func:`generator_rows` returns the genuine complex rows where phases matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .modes import ModeFunction, ModeLattice

ROTATION, TRANSLATION = 1, 2
LABELS = ("rot_x", "rot_y", "rot_z", "trans_x", "trans_y", "trans_z")


class DegenerateConstraintError(ValueError):
    """The collective directions of the profile are degenerate (no usable M)."""


class IterationDiverged(RuntimeError):
    def __init__(self, message, ratio):
        super().__init__(message)
        self.ratio = ratio


@dataclass(frozen=True)
class GeneratorAction:
    """Infinitesimal generator of the Euclidean group acting on mode functions."""

    kind: int
    axis: int  # 0, 1, 2

    def __post_init__(self):
        if self.kind not in (ROTATION, TRANSLATION) or self.axis not in (0, 1, 2):
            raise ValueError(f"bad generator ({self.kind}, {self.axis})")

    def apply(self, func: ModeFunction, f):
        """``(J v)(f)``; complex for rotations."""
        f = np.atleast_2d(np.asarray(f, dtype=float))
        if self.kind == TRANSLATION:
            return (f[:, self.axis] * func.value(f)).astype(complex)
        return -1j * np.cross(f, func.gradient(f))[:, self.axis]

    def apply_real(self, func: ModeFunction, f):
        """Phase-stripped action: ``f_a v`` or ``(f x grad v)_a``."""
        f = np.atleast_2d(np.asarray(f, dtype=float))
        if self.kind == TRANSLATION:
            return f[:, self.axis] * func.value(f)
        return np.cross(f, func.gradient(f))[:, self.axis]


GENERATORS = tuple(GeneratorAction(k, a) for k in (ROTATION, TRANSLATION) for a in range(3))


def generator_rows(lattice: ModeLattice, func: ModeFunction):
    """Complex ``(6, n)`` array of ``(J^i_a v)_f`` over the lattice."""
    return np.stack([g.apply(func, lattice.f) for g in GENERATORS])


def build_N(lattice: ModeLattice, u: ModeFunction):
    """Real ``(6, n)`` rows ``N^i_af`` (rotation rows phase-stripped)."""
    return np.stack([g.apply_real(u, lattice.f) for g in GENERATORS])


@dataclass(frozen=True)
class ConstraintSet:
    """N rows, biorthogonal M columns and the factored projector ``1 - M N``.

    ``active`` marks the directions that the profile actually moves.  A
    direction whose N row vanishes identically (rotation about the symmetry
    axis of an axially symmetric profile) imposes no condition; its M column
    is zero.
    """

    N: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    active: np.ndarray
    gram: np.ndarray = field(repr=False)

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))

    def project(self, x):
        """``A x = x - M (N x)``."""
        return x - self.M @ (self.N @ x)

    def project_transpose(self, x):
        """``A^T x = x - N^T (M^T x)``."""
        return x - self.N.T @ (self.M.T @ x)

    def dense_projector(self):
        return np.eye(self.N.shape[1]) - self.M @ self.N

    def kernel_basis(self):
        """Orthonormal basis (columns) of the constrained subspace ``N Q = 0``."""
        return null_space(self.N[self.active])

    def residuals(self, probes=None, seed=0):
        """Max-norm residuals of biorthogonality, annihilation and idempotency."""
        NM = self.N @ self.M
        eye = np.eye(6)
        act = np.ix_(self.active, self.active)
        if probes is None:
            rng = np.random.default_rng(seed)
            probes = rng.standard_normal((self.N.shape[1], 8))
        AM = self.M - self.M @ NM
        NA = self.N - NM @ self.N
        Ax = self.project(probes)
        AAx = self.project(Ax)
        return {
            "biorthogonality_full": float(np.max(np.abs(NM - eye))),
            "biorthogonality_active": float(np.max(np.abs(NM[act] - eye[act]))),
            "AM": float(np.max(np.abs(AM))),
            "NA": float(np.max(np.abs(NA))),
            "idempotency": float(np.max(np.abs(AAx - Ax)) / max(1.0, np.max(np.abs(probes)))),
            "inactive": [LABELS[k] for k in np.flatnonzero(~self.active)],
        }


def build_M(lattice: ModeLattice, N, v: ModeFunction, null_tol=1e-12, cond_max=1e12):
    """Columns ``M_fb`` spanned by the generator images of ``v``.

    The 6x6 mixing system ``(N V^T) C = 1`` on the active directions makes
    ``sum_f N_af M_fb = delta_ab`` hold exactly there.
    """
    V = build_N(lattice, v)
    scale = max(float(np.max(np.abs(N))), float(np.max(np.abs(V))), 0.0)
    if scale == 0.0:
        raise DegenerateConstraintError("profile vanishes identically: no collective directions")
    n_norm = np.linalg.norm(N, axis=1)
    v_norm = np.linalg.norm(V, axis=1)
    active = (n_norm > null_tol * np.max(n_norm)) & (v_norm > null_tol * np.max(v_norm))
    gram = N @ V.T
    if not np.any(active):
        raise DegenerateConstraintError("no active collective directions")
    sub = gram[np.ix_(active, active)]
    cond = np.linalg.cond(sub)
    if not cond < cond_max:
        raise DegenerateConstraintError(f"singular Gram matrix (condition number {cond:.3e})")
    M = np.zeros((N.shape[1], 6))
    M[:, active] = V[active].T @ np.linalg.inv(sub)
    return M, active, gram


def build_constraints(lattice: ModeLattice, u: ModeFunction, v: ModeFunction | None = None) -> ConstraintSet:
    """Constraint set for profile ``u`` with ansatz ``v`` (default ``v = u``)."""
    N = build_N(lattice, u)
    M, active, gram = build_M(lattice, N, u if v is None else v)
    return ConstraintSet(N, M, active, gram)


def project(constraints: ConstraintSet, x):
    return constraints.project(x)


@dataclass(frozen=True)
class NtildeResult:
    Ntilde: np.ndarray = field(repr=False)
    ratio: float
    iterations: int
    errors: tuple  # Frobenius distance of each iterate from the returned fixed point
    steps: tuple  # max-norm difference between successive iterates


def coupling_matrix(N, JQ):
    """``T_ab = sum_l N_al (J_b Q)_l`` for complex N and J Q rows."""
    return N @ JQ.T


def iterate_Ntilde(N, JQ, g, tol=1e-12, max_iter=500, start=None) -> NtildeResult:
    """Fixed point of ``N~ = -N - (1/g) T N~`` by direct iteration.

    ``N`` and ``JQ`` are complex ``(6, n)`` arrays from :func:`generator_rows`.
    The returned ``ratio = ||T||_2 / g`` bounds the per-step error contraction.
    """
    N = np.asarray(N, dtype=complex)
    T = coupling_matrix(N, np.asarray(JQ, dtype=complex))
    ratio = float(np.linalg.norm(T, 2)) / g
    current = -N.copy() if start is None else np.asarray(start, dtype=complex)
    iterates = [current]
    steps = []
    for k in range(1, max_iter + 1):
        nxt = -N - (T @ current) / g
        diff = float(np.max(np.abs(nxt - current)))
        steps.append(diff)
        iterates.append(nxt)
        current = nxt
        if diff < tol:
            break
    else:
        raise IterationDiverged(
            f"N~ iteration did not converge in {max_iter} steps (contraction ratio {ratio:.3g})",
            ratio,
        )
    errors = tuple(float(np.linalg.norm(x - current)) for x in iterates)
    return NtildeResult(current, ratio, k, errors, tuple(steps))
