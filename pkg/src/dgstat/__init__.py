"""Discontinuous Galerkin schemes for acoustics and Euler with stationarity analysis in Fourier space."""

from dgstat.basis import legendre_basis, project_to_dg
from dgstat.errors import ConfigurationError, DGStatError, IndexSetError, NumericalError, StateError
from dgstat.mesh import DGField, Grid
from dgstat.model import EulerModel, acoustic_flux_matrices, acoustic_system, acoustics
from dgstat.solver import RunConfig, rk_step, run, semidiscrete_rhs

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DGField",
    "DGStatError",
    "EulerModel",
    "Grid",
    "IndexSetError",
    "NumericalError",
    "RunConfig",
    "StateError",
    "acoustic_flux_matrices",
    "acoustic_system",
    "acoustics",
    "legendre_basis",
    "project_to_dg",
    "rk_step",
    "run",
    "semidiscrete_rhs",
]
