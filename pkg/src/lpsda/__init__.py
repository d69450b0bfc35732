"""Lie point symmetry data augmentation for 1D periodic evolution PDEs."""

from .equations import EquationKind, EquationSpec, fvm_solve, residual_check, solve, solve_burgers
from .integrator import SolverConfig, integrate
from .spectral import PeriodicGrid1D, TimeGrid, Trajectory
from .symmetry import AugmentationPolicy, Generator, SymmetryOp, augment, default_policy

__version__ = "0.1.0"

__all__ = [
    "AugmentationPolicy",
    "EquationKind",
    "EquationSpec",
    "Generator",
    "PeriodicGrid1D",
    "SolverConfig",
    "SymmetryOp",
    "TimeGrid",
    "Trajectory",
    "augment",
    "default_policy",
    "fvm_solve",
    "integrate",
    "residual_check",
    "solve",
    "solve_burgers",
]
