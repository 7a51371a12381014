"""Sparse matrix kernels, configuration and the error hierarchy."""

from .config import AmgParams, GridConfig, SolverConfig, TrainConfig, check_dense_cap, dense_cap
from .exceptions import PrecondNetError
from .sparse import (
    CsrMatrix,
    DenseMatrix,
    csr_from_arrays,
    csr_from_coo,
    dense_cholesky,
    density,
    lower_solve,
    spmv,
    to_coo,
)

__all__ = [
    "AmgParams",
    "CsrMatrix",
    "DenseMatrix",
    "GridConfig",
    "PrecondNetError",
    "SolverConfig",
    "TrainConfig",
    "check_dense_cap",
    "csr_from_arrays",
    "csr_from_coo",
    "dense_cap",
    "dense_cholesky",
    "density",
    "lower_solve",
    "spmv",
    "to_coo",
]
