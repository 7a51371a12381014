"""
Evaluation of one preconditioning method on one Poisson sample.

Builds the preconditioner, solves A x = b with CG/PCG and fills in the
spectral (kappa, symmetrized kappa) and sparsity (density) fields of the
SolveReport. The learned preconditioner is assembled once per sample and its
support is checked against the model's receptive field.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import replace
from typing import Optional

from ..core.config import AmgParams, SolverConfig, dense_cap
from ..core.exceptions import PreconditionerError
from ..core.sparse import CsrMatrix, density
from ..krylov.solvers import SolveReport, cg, pcg
from ..krylov.spectral import condition_number, symmetrized_kappa
from ..model.feature_map import encode_input, support_within_dilation
from ..model.network import RECEPTIVE_REACH, CnnParams, model_forward
from ..model.spd import learned_precond, spd_assemble
from ..poisson.assembly import PoissonSample
from ..preconditioners.amg import amg_setup
from ..preconditioners.base import Preconditioner, identity_precond, operator_density
from ..preconditioners.classic import ic0, jacobi_precond

logger = logging.getLogger(__name__)

# Learned factors denser than this multiple of tril(A) are reported.
DENSITY_RATIO_LIMIT = 10.0


try:
    from enum import StrEnum
except ImportError:  # Python < 3.11

    class StrEnum(str, enum.Enum):
        """Backport of ``enum.StrEnum``: members are strs; str()/format() give the value."""

        def __str__(self) -> str:
            return str.__str__(self)

        @staticmethod
        def _generate_next_value_(name: str, start: int, count: int, last_values: list) -> str:
            return name.lower()


class Method(StrEnum):
    VANILLA = "vanilla"
    JACOBI = "jacobi"
    IC0 = "ic0"
    AMG = "amg"
    LEARNED = "learned"

    @classmethod
    def parse_list(cls, text: str) -> list[Method]:
        """Parse a comma-separated method list, e.g. ``vanilla,ic0``."""
        methods = []
        for token in text.split(","):
            token = token.strip().lower()
            if not token:
                continue
            try:
                methods.append(cls(token))
            except ValueError:
                valid = ", ".join(m.value for m in cls)
                raise ValueError(f"Unknown method {token!r} (valid: {valid})") from None
        if not methods:
            raise ValueError("No methods given")
        return methods


def factor_density_ratio(A: CsrMatrix, P: Preconditioner) -> float:
    """Density of the preconditioner's factor relative to tril(A)."""
    base = density(A.tril())
    return operator_density(P) / base if base else 0.0


def build_learned(A: CsrMatrix, model: CnnParams) -> Preconditioner:
    """
    Run the model once on A and wrap the SPD factors as a preconditioner.

    Raises:
        PreconditionerError: If the raw output leaves the receptive field of
            the input support
    """
    start = time.perf_counter()
    raw = model_forward(model, A)
    if not support_within_dilation(raw, encode_input(A), RECEPTIVE_REACH):
        raise PreconditionerError(
            "learned factor support exceeds the receptive field of the input"
        )
    factors = spd_assemble(raw)
    P = learned_precond(factors, setup_time_ms=(time.perf_counter() - start) * 1e3)

    ratio = factor_density_ratio(A, P)
    if ratio > DENSITY_RATIO_LIMIT:
        logger.warning(
            f"Learned factor is {ratio:.1f}x denser than tril(A) (limit {DENSITY_RATIO_LIMIT:g})"
        )
    return P


def build_preconditioner(
    method: Method,
    A: CsrMatrix,
    model: Optional[CnnParams] = None,
    amg_params: Optional[AmgParams] = None,
) -> Preconditioner:
    """Preconditioner for ``method`` (identity for vanilla)."""
    if method is Method.VANILLA:
        return identity_precond(A.n_rows)
    if method is Method.JACOBI:
        return jacobi_precond(A)
    if method is Method.IC0:
        return ic0(A)
    if method is Method.AMG:
        return amg_setup(A, amg_params)
    if model is None:
        raise ValueError("The learned method needs a model checkpoint")
    return build_learned(A, model)


def _spectra(A: CsrMatrix, P: Preconditioner, method: Method, sample_id: str) -> tuple[Optional[float], Optional[float]]:
    """kappa(A M^-1) and the symmetrized kappa, or None above the dense cap."""
    if A.n_rows > dense_cap():
        logger.debug(f"Skipping kappa for sample {sample_id}: n={A.n_rows} above dense cap")
        return None, None
    a = A.to_dense()
    if method is Method.VANILLA:
        kappa = condition_number(a, sample_id).kappa
        return kappa, kappa
    factors = P.info.get("factors")
    if factors is not None:
        F = factors.factor.to_dense()
        kappa = condition_number(a @ (F @ F.T), sample_id).kappa
        return kappa, symmetrized_kappa(a, factor=F)
    minv = P.to_dense()
    kappa = condition_number(a @ minv, sample_id).kappa
    return kappa, symmetrized_kappa(a, minv)


def evaluate_method(
    sample: PoissonSample,
    method: Method | str,
    model: Optional[CnnParams] = None,
    solver: Optional[SolverConfig] = None,
    amg_params: Optional[AmgParams] = None,
    spectra: bool = True,
) -> SolveReport:
    """
    Solve one sample with one method.

    Args:
        sample: Poisson sample (matrix and right-hand side)
        method: vanilla, jacobi, ic0, amg or learned
        model: Parameters of the learned model (required for learned)
        solver: Stopping rule (defaults: tol 1e-6, 10000 iterations)
        amg_params: AMG setup parameters
        spectra: Compute kappa fields (dense; skipped above the dense cap)

    Returns:
        SolveReport with kappa, kappa_sym, density and setup time filled in

    Raises:
        ValueError: If learned is requested without a model
    """
    method = Method(method)
    solver = solver or SolverConfig()
    A = sample.matrix
    P = build_preconditioner(method, A, model, amg_params)
    logger.debug(f"{method} setup for sample {sample.sample_id}: {P.setup_time_ms:.2f} ms")

    if method is Method.VANILLA:
        report = cg(A, sample.rhs, tol=solver.tol, max_iter=solver.max_iter)
    else:
        report = pcg(A, P, sample.rhs, tol=solver.tol, max_iter=solver.max_iter)
    if not report.converged:
        logger.warning(
            f"{method} did not converge on sample {sample.sample_id} "
            f"in {report.iterations} iterations"
        )

    kappa, kappa_sym = _spectra(A, P, method, sample.sample_id) if spectra else (None, None)
    return replace(
        report,
        kappa=kappa,
        kappa_sym=kappa_sym,
        density=operator_density(P),
        setup_time_ms=P.setup_time_ms,
        method=method.value,
        sample_id=sample.sample_id,
    )
