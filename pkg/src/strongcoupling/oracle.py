"""Exact diagonalization of the fixed-source Hamiltonian on a truncated Fock space.

With the particle pinned at the origin the model is a spin-1/2 coupled
linearly to a handful of oscillators.  A mode ``f`` whose partner ``-f`` is
also selected forms a pair; only its odd combination couples, with strength
``g B_f f`` (the even combination is free and contributes ``omega_f / 2``).
A mode selected without its partner is self-paired and couples with
``g B_f f / sqrt(2)``.  The symmetric-ordering zero point is kept throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

DEFAULT_CAP = 20_000

PAULI = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1j], [1j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


class BasisTooLarge(MemoryError):
    pass


@dataclass(frozen=True)
class OracleMode:
    f: tuple
    omega: float
    paired: bool  # True when -f is part of the selection


@dataclass(frozen=True)
class FockBasis:
    """Spin (outer index) times occupations ``0..n_max`` of each coupled oscillator."""

    modes: tuple
    n_max: int
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.size > self.cap:
            raise BasisTooLarge(f"basis of {self.size} states exceeds the cap of {self.cap}")

    @property
    def size(self) -> int:
        return 2 * (self.n_max + 1) ** len(self.modes)

    def states(self):
        """``(spin, n_1, ..., n_k)`` in matrix-index order."""
        import itertools

        occ = range(self.n_max + 1)
        return [(s, *ns) for s in (0, 1) for ns in itertools.product(occ, repeat=len(self.modes))]


def select_modes(f_list, meson_mass):
    """Group momenta into coupled oscillators.

    Returns ``(modes, weights)``: one :class:`OracleMode` per coupled
    oscillator (pairs collapsed to their representative) and the list of
    original momenta each one stands for.
    """
    f_list = [tuple(float(x) for x in f) for f in f_list]
    seen = set()
    modes = []
    for f in f_list:
        if f in seen:
            continue
        neg = tuple(-x for x in f)
        paired = neg in f_list and neg != f
        seen.add(f)
        if paired:
            seen.add(neg)
        omega = math.sqrt(meson_mass**2 + sum(x * x for x in f))
        modes.append(OracleMode(f, omega, paired))
    return tuple(modes)


def effective_couplings(modes, B, g):
    """Spin-coupling vector of each oscillator: ``g B f`` (pairs) or ``g B f / sqrt 2``."""
    out = []
    for m, b in zip(modes, B):
        scale = g * b * (1.0 if m.paired else 1.0 / math.sqrt(2.0))
        out.append(scale * np.asarray(m.f))
    return out


def zero_point(modes):
    """``1/2 sum omega`` over every original momentum (pairs count twice)."""
    return 0.5 * sum(m.omega * (2 if m.paired else 1) for m in modes)


def build_fixed_source_hamiltonian(basis: FockBasis, B, g):
    """Sparse Hermitian ``H = sum omega (b^+ b + 1/2) + sum (kappa . sigma)(b + b^+)``.

    Free even partners of paired modes add their ``omega/2`` to the diagonal.
    """
    k = len(basis.modes)
    d = basis.n_max + 1
    ladder = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr")
    x_op = (ladder + ladder.T).tocsr()
    number = sp.diags(np.arange(d, dtype=float), format="csr")
    eye_d = sp.identity(d, format="csr")

    def embed(op, i):
        out = sp.identity(1, format="csr")
        for j in range(k):
            out = sp.kron(out, op if j == i else eye_d, format="csr")
        return out

    n_field = d**k
    spin_eye = sp.identity(2, format="csr")
    H = zero_point(basis.modes) * sp.identity(2 * n_field, format="csr", dtype=complex)
    kappas = effective_couplings(basis.modes, B, g)
    for i, (m, kap) in enumerate(zip(basis.modes, kappas)):
        H = H + m.omega * sp.kron(spin_eye, embed(number, i), format="csr")
        s = sum(kap[a] * PAULI[a] for a in range(3))
        if np.any(s):
            H = H + sp.kron(sp.csr_matrix(s), embed(x_op, i), format="csr")
    H = H.tocsr()
    if not np.any(H.imag.data):
        H = H.real.tocsr()
    return H


def hermiticity_residual(H):
    diff = H - H.conj().T
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def ground_energy_exact(H):
    """Lowest eigenvalue by dense symmetric eigensolve."""
    dense = H.toarray() if sp.issparse(H) else np.asarray(H)
    return float(sla.eigh(dense, eigvals_only=True, subset_by_index=[0, 0])[0])


def lowest_levels(H, count=2):
    dense = H.toarray() if sp.issparse(H) else np.asarray(H)
    return sla.eigh(dense, eigvals_only=True, subset_by_index=[0, count - 1])


def classical_coefficient(modes, B):
    """``-1/2 sum_f B_f^2 f3^2 / omega_f`` over the original momenta of the selection."""
    return -0.5 * sum(b * b * m.f[2] ** 2 / m.omega * (2 if m.paired else 1) for m, b in zip(modes, B))


@dataclass
class ComparisonRow:
    g: float
    n_max: int
    E_exact: float
    E_expansion: float
    residual: float
    relative_residual: float
    residual_classical: float
    converged: bool
    truncation_change: float


@dataclass
class ComparisonReport:
    rows: list
    slope: float | None
    zero_point: float
    classical_coefficient: float
    meta: dict = field(default_factory=dict)

    def as_dict(self):
        from dataclasses import asdict

        return {"rows": [asdict(r) for r in self.rows], "slope": self.slope,
                "zero_point": self.zero_point, "classical_coefficient": self.classical_coefficient,
                **self.meta}


def fit_slope(g, rel):
    """Least-squares slope of ``log rel`` against ``log g``; None below two points."""
    g = np.asarray(g, dtype=float)
    rel = np.asarray(rel, dtype=float)
    ok = rel > 0
    if np.count_nonzero(ok) < 2:
        return None
    return float(np.polyfit(np.log(g[ok]), np.log(rel[ok]), 1)[0])


def compare_expansion(f_list, B, g_list, n_max, meson_mass=1.0, eps0=None, tol=1e-8,
                      cap=DEFAULT_CAP, n_max_of_g=None):
    """Exact ground energies against ``g^2 E_cl + 1/2 sum omega (+ g eps0)``.

    Truncation is checked by repeating the solve at ``n_max + 2``; rows whose
    energy moves by more than ``tol`` are flagged and left out of the slope
    fit.  The relative residual is measured against the leading ``g^2`` term.
    """
    modes = select_modes(f_list, meson_mass)
    if len(B) != len(modes):
        raise ValueError(f"need one B per coupled oscillator ({len(modes)}), got {len(B)}")
    e_cl = classical_coefficient(modes, B)
    zp = zero_point(modes)
    rows = []
    for g in g_list:
        nm = n_max if n_max_of_g is None else n_max_of_g(g)
        H = build_fixed_source_hamiltonian(FockBasis(modes, nm, cap), B, g)
        H2 = build_fixed_source_hamiltonian(FockBasis(modes, nm + 2, cap), B, g)
        e = ground_energy_exact(H)
        change = abs(e - ground_energy_exact(H2))
        expansion = g * g * e_cl + zp + (0.0 if eps0 is None else g * eps0)
        res = e - expansion
        lead = abs(g * g * e_cl)
        if lead > 0:
            rel = abs(res) / lead
        else:
            rel = 0.0 if res == 0 else math.inf
        rows.append(ComparisonRow(float(g), nm, e, expansion, res, rel, e - g * g * e_cl,
                                  change <= tol, change))
    good = [r for r in rows if r.converged]
    slope = fit_slope([r.g for r in good], [r.relative_residual for r in good]) if len(good) >= 2 else None
    return ComparisonReport(rows, slope, zp, e_cl,
                            {"modes": [list(m.f) for m in modes], "B": [float(b) for b in B]})
