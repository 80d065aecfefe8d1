"""Strong-coupling expansion of a spin-1/2 particle coupled to a pseudoscalar
meson field, evaluated on a finite momentum lattice, with an exact
diagonalization oracle for the fixed-source limit."""

from .modes import ModeLattice, SourceProfile, build_mode_lattice, form_factor
from .meanfield import MeanField, solve_mean_field
from .constraints import ConstraintSet, build_constraints
from .oscillator import NormalModes, QuadraticForm, build_quadratic_form, symplectic_diagonalize
from .spectrum import SpectrumTable, assemble_table

__all__ = [
    "ModeLattice",
    "SourceProfile",
    "build_mode_lattice",
    "form_factor",
    "MeanField",
    "solve_mean_field",
    "ConstraintSet",
    "build_constraints",
    "NormalModes",
    "QuadraticForm",
    "build_quadratic_form",
    "symplectic_diagonalize",
    "SpectrumTable",
    "assemble_table",
]
