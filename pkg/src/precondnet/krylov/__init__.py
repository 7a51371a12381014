"""CG/PCG solvers and spectral diagnostics."""

from .solvers import SolveReport, cg, iteration_ratio, pcg, write_residual_csv
from .spectral import (
    SpectralInfo,
    a_norm_error,
    cg_error_bound,
    condition_number,
    convergence_slope,
    symmetrized_kappa,
)

__all__ = [
    "SolveReport",
    "SpectralInfo",
    "a_norm_error",
    "cg",
    "cg_error_bound",
    "condition_number",
    "convergence_slope",
    "iteration_ratio",
    "pcg",
    "symmetrized_kappa",
    "write_residual_csv",
]
