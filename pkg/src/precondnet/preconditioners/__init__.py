"""Classic preconditioners behind a common interface."""

from .amg import AmgHierarchy, amg_setup
from .base import Preconditioner, PreconditionerKind, identity_precond, operator_density
from .classic import ic0, jacobi_precond

__all__ = [
    "AmgHierarchy",
    "Preconditioner",
    "PreconditionerKind",
    "amg_setup",
    "ic0",
    "identity_precond",
    "jacobi_precond",
    "operator_density",
]
