"""
precondnet - learned sparse preconditioners for conjugate gradients.

Trains a six-layer sparse convolutional model that maps a 2D Poisson matrix A
to a lower triangular factor F with M^-1 = F F^T, minimizing kappa(A M^-1),
and benchmarks it against vanilla CG, Jacobi, IC(0) and smoothed-aggregation
AMG.
"""

from .bench import Method, evaluate_method, summarize
from .core import CsrMatrix, PrecondNetError
from .krylov import SolveReport, cg, condition_number, pcg
from .model import CnnParams, init_params, load_checkpoint, model_forward, save_checkpoint, spd_assemble
from .poisson import OccupancyGrid, PoissonSample, assemble_poisson, generate_samples, load_dataset, save_dataset
from .preconditioners import Preconditioner, amg_setup, ic0, jacobi_precond
from .training import kappa_loss_and_grad, train

__version__ = "1.0.0"

__all__ = [
    "CnnParams",
    "CsrMatrix",
    "Method",
    "OccupancyGrid",
    "PoissonSample",
    "PrecondNetError",
    "Preconditioner",
    "SolveReport",
    "__version__",
    "amg_setup",
    "assemble_poisson",
    "cg",
    "condition_number",
    "evaluate_method",
    "generate_samples",
    "ic0",
    "init_params",
    "jacobi_precond",
    "kappa_loss_and_grad",
    "load_checkpoint",
    "load_dataset",
    "model_forward",
    "pcg",
    "save_checkpoint",
    "save_dataset",
    "spd_assemble",
    "summarize",
    "train",
]
