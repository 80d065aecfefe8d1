"""Momentum lattice, meson dispersion and source form factors.

The field lives in a periodic cube of side ``L``; its modes are the momenta
``f = 2*pi*n/L`` for integer 3-vectors ``n`` with ``0 < |f| <= cutoff``.
The ``f = 0`` mode is left out: its coupling ``f.sigma`` vanishes and it only
adds the constant zero-point energy ``meson_mass / 2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice parameters or an empty mode set."""


@dataclass(frozen=True)
class SourceProfile:
    """Normalized, real and even source density.

    ``kind`` is ``"point"`` (delta source, transform identically 1) or
    ``"gaussian"`` with density ``(2 pi R^2)^(-3/2) exp(-x^2 / 2R^2)`` whose
    transform is ``exp(-f^2 R^2 / 2)``.
    """

    kind: str = "gaussian"
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("point", "gaussian"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "gaussian" and not self.radius >= 0.0:
            raise ValueError("gaussian source radius must be >= 0")

    def transform(self, k2):
        """Fourier transform as a function of ``|f|^2``."""
        k2 = np.asarray(k2, dtype=float)
        if self.kind == "point":
            return np.ones_like(k2)
        return np.exp(-0.5 * self.radius**2 * k2)

    def transform_dk2(self, k2):
        """Derivative of :meth:`transform` with respect to ``|f|^2``."""
        k2 = np.asarray(k2, dtype=float)
        if self.kind == "point":
            return np.zeros_like(k2)
        return -0.5 * self.radius**2 * np.exp(-0.5 * self.radius**2 * k2)

    def density(self, r):
        """Position-space density at distance ``r`` (gaussian only)."""
        if self.kind == "point":
            raise ValueError("point source has no pointwise density")
        R = self.radius
        return (2.0 * math.pi * R * R) ** -1.5 * np.exp(-0.5 * np.asarray(r) ** 2 / R**2)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeLattice:
    box_length: float
    meson_mass: float
    cutoff: float
    n: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def size(self) -> int:
        return len(self.omega)

    def __len__(self):
        return len(self.omega)

    def index_of(self, n) -> int:
        """Position of the integer vector ``n`` in the mode list."""
        hits = np.flatnonzero(np.all(self.n == np.asarray(n, dtype=int), axis=1))
        if len(hits) == 0:
            raise KeyError(f"mode {tuple(n)} not on the lattice")
        return int(hits[0])

    def partner(self) -> np.ndarray:
        """Index array mapping each mode to the mode at ``-f``."""
        lookup = {tuple(v): i for i, v in enumerate(self.n)}
        return np.array([lookup[tuple(-v)] for v in self.n])

    def with_order(self, order) -> "ModeLattice":
        """Same lattice with the modes permuted (used by symmetry tests)."""
        order = np.asarray(order)
        return ModeLattice(
            self.box_length, self.meson_mass, self.cutoff,
            _frozen(self.n[order]), _frozen(self.f[order]), _frozen(self.omega[order]),
        )


def dispersion(f, meson_mass):
    """Relativistic meson energy ``sqrt(mu^2 + |f|^2)`` for rows of ``f``."""
    f = np.asarray(f, dtype=float)
    return np.sqrt(meson_mass**2 + np.sum(f * f, axis=-1))


def build_mode_lattice(box_length: float, meson_mass: float, cutoff: float) -> ModeLattice:
    """Enumerate the cubic lattice shell ``0 < |f| <= cutoff``.

    Modes are ordered lexicographically in ``n`` so every lattice sum runs in
    the same order on every call.
    """
    problems = []
    if not box_length > 0:
        problems.append("box_length must be > 0")
    if not meson_mass > 0:
        problems.append("meson_mass must be > 0")
    if not cutoff > 0:
        problems.append("cutoff must be > 0")
    if problems:
        raise LatticeError("; ".join(problems))

    step = 2.0 * math.pi / box_length
    nsq_max = (cutoff / step) ** 2 * (1.0 + 1e-12)
    if nsq_max < 1.0:
        raise LatticeError(
            f"cutoff {cutoff} is below the smallest lattice momentum {step}: empty lattice"
        )
    nmax = int(math.floor(math.sqrt(nsq_max)))
    r = np.arange(-nmax, nmax + 1)
    grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    nsq = np.sum(grid * grid, axis=1)
    n = grid[(nsq >= 1) & (nsq <= nsq_max)]
    # meshgrid with indexing="ij" already yields lexicographic order
    f = step * n.astype(float)
    omega = dispersion(f, meson_mass)
    return ModeLattice(float(box_length), float(meson_mass), float(cutoff),
                       _frozen(n), _frozen(f), _frozen(omega))


def form_factor(lattice: ModeLattice, source: SourceProfile, f=None):
    """Coupling amplitudes ``B_f = (V omega_f mu^2)^(-1/2) rho_hat(f)``.

    ``f`` defaults to all lattice modes; any array of momenta is accepted so
    the same closed form can be differentiated off the lattice.
    """
    if f is None:
        f = lattice.f
    f = np.asarray(f, dtype=float)
    k2 = np.sum(f * f, axis=-1)
    omega = np.sqrt(lattice.meson_mass**2 + k2)
    return source.transform(k2) / np.sqrt(lattice.volume * omega * lattice.meson_mass**2)


def form_factor_quadrature(lattice: ModeLattice, source: SourceProfile, f):
    """``B_f`` with the source transform computed by radial quadrature.

    Independent check of :func:`form_factor`; uses
    ``rho_hat(k) = int 4 pi r^2 rho(r) sin(kr)/(kr) dr``.
    """
    from scipy.integrate import quad

    f = np.atleast_2d(np.asarray(f, dtype=float))
    out = np.empty(len(f))
    for i, fi in enumerate(f):
        k = float(np.linalg.norm(fi))
        if source.kind == "point":
            rho_hat = 1.0
        else:
            upper = 40.0 * source.radius
            rho_hat, _ = quad(
                lambda r: 4.0 * math.pi * r * r * float(source.density(r)) * np.sinc(k * r / math.pi),
                0.0, upper, epsabs=1e-15, epsrel=1e-12, limit=200,
            )
        omega = math.sqrt(lattice.meson_mass**2 + k * k)
        out[i] = rho_hat / math.sqrt(lattice.volume * omega * lattice.meson_mass**2)
    return out


class ModeFunction:
    """Closed-form function of a continuous momentum with analytic gradient.

    Subclasses implement ``value(f)`` for an ``(n, 3)`` array and
    ``gradient(f)`` returning ``(n, 3)``.  Generator actions differentiate
    these, never raw lattice data.
    """

    def value(self, f):
        raise NotImplementedError

    def gradient(self, f):
        raise NotImplementedError

    def __call__(self, f):
        return self.value(f)


class ZeroFunction(ModeFunction):
    def value(self, f):
        return np.zeros(len(np.atleast_2d(f)))

    def gradient(self, f):
        return np.zeros_like(np.atleast_2d(np.asarray(f, dtype=float)))


@dataclass(frozen=True)
class DipoleGaussian(ModeFunction):
    """``(d . f) * exp(-|f - shift|^2 / 2 s^2)``, a generic smooth probe."""

    direction: tuple = (1.0, 0.0, 0.0)
    width: float = 1.0
    shift: tuple = (0.0, 0.0, 0.0)

    def value(self, f):
        f = np.atleast_2d(np.asarray(f, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        x = f - np.asarray(self.shift, dtype=float)
        return (f @ d) * np.exp(-0.5 * np.sum(x * x, axis=1) / self.width**2)

    def gradient(self, f):
        f = np.atleast_2d(np.asarray(f, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        x = f - np.asarray(self.shift, dtype=float)
        e = np.exp(-0.5 * np.sum(x * x, axis=1) / self.width**2)
        return e[:, None] * (d[None, :] - (f @ d)[:, None] * x / self.width**2)


def central_gradient(func, f, step=1e-5):
    """Central finite-difference gradient of a scalar mode function."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    out = np.empty_like(f)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        out[:, k] = (func(f + e) - func(f - e)) / (2.0 * step)
    return out


def mode_sum(values, parallel: bool = False, chunks: int = 4):
    """Sum over the mode axis (axis 0).

    The serial path is a fixed-order reduction and is the reference.  The
    parallel path sums contiguous chunks in threads and combines the partial
    sums with ``math.fsum`` per component.
    """
    values = np.asarray(values)
    if not parallel or len(values) < 2 * chunks:
        return np.sum(values, axis=0)
    parts = np.array_split(values, chunks, axis=0)
    with ThreadPoolExecutor(max_workers=chunks) as pool:
        partial = list(pool.map(lambda p: np.sum(p, axis=0), parts))
    stacked = np.stack(partial)
    if stacked.ndim == 1:
        return math.fsum(stacked)
    flat = stacked.reshape(len(partial), -1)
    if np.iscomplexobj(flat):
        re = [math.fsum(col) for col in flat.real.T]
        im = [math.fsum(col) for col in flat.imag.T]
        return (np.array(re) + 1j * np.array(im)).reshape(stacked.shape[1:])
    return np.array([math.fsum(col) for col in flat.T]).reshape(stacked.shape[1:])


def cubic_group():
    """The 48 signed permutation matrices of the cubic point group."""
    import itertools

    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=int)
            for row, (col, s) in enumerate(zip(perm, signs)):
                m[row, col] = s
            mats.append(m)
    return mats


def z_preserving_group():
    """Cubic group elements that fix the z axis (and its orientation)."""
    return [m for m in cubic_group() if m[2, 2] == 1]
