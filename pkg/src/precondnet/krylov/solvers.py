"""
Conjugate gradient and right-preconditioned conjugate gradient solvers.

Both share one iteration loop; plain CG is PCG with z = r, so the identity
preconditioner reproduces CG iterates exactly. The stopping rule is the
relative unpreconditioned residual ||r_j|| <= tol ||b||. The recursively
updated residual is replaced by b - A x every RECOMPUTE_EVERY iterations to
curb drift.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from ..core.config import FLOAT_FORMAT
from ..core.exceptions import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    PreconditionerError,
)
from ..core.sparse import CsrMatrix

logger = logging.getLogger(__name__)

RECOMPUTE_EVERY = 50

ApplyFn = Callable[[np.ndarray], np.ndarray]
IterateCallback = Callable[[int, np.ndarray], None]


@dataclass(frozen=True, eq=False)
class SolveReport:
    """
    Record of one (P)CG solve.

    residual_history[0] is ||b - A x0||; one entry per iteration follows.
    kappa and density are filled in by the evaluation layer when computed.
    """

    iterations: int
    residual_history: np.ndarray
    converged: bool
    wall_time_ms: float
    solution: np.ndarray
    x0: np.ndarray
    kappa: Optional[float] = None
    kappa_sym: Optional[float] = None
    density: Optional[float] = None
    setup_time_ms: float = 0.0
    method: str = "vanilla"
    sample_id: str = ""

    @property
    def final_residual(self) -> float:
        return float(self.residual_history[-1])


def _check_system(A: CsrMatrix, b: np.ndarray, x0: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if A.n_rows != A.n_cols:
        raise DimensionMismatchError(f"system matrix must be square, got {A.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n_rows,):
        raise DimensionMismatchError(f"rhs has shape {b.shape}, expected ({A.n_rows},)")
    if x0 is None:
        x = np.zeros(A.n_rows)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (A.n_rows,):
            raise DimensionMismatchError(f"x0 has shape {x.shape}, expected ({A.n_rows},)")
    return b, x


def _conjugate_gradient(
    A: CsrMatrix,
    b: np.ndarray,
    apply: Optional[ApplyFn],
    tol: float,
    max_iter: int,
    x0: Optional[np.ndarray],
    callback: Optional[IterateCallback],
) -> SolveReport:
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 0:
        raise ValueError(f"max_iter must be non-negative, got {max_iter}")
    b, x = _check_system(A, b, x0)
    x_start = x.copy()
    start = time.perf_counter()

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        # A is nonsingular, so x = 0 is the exact solution.
        x = np.zeros_like(b)
        if callback is not None:
            callback(0, x.copy())
        return SolveReport(
            iterations=0,
            residual_history=np.zeros(1),
            converged=True,
            wall_time_ms=(time.perf_counter() - start) * 1e3,
            solution=x,
            x0=x_start,
        )
    threshold = tol * b_norm
    r = b - A @ x
    r_norm = float(np.linalg.norm(r))
    history = [r_norm]
    if callback is not None:
        callback(0, x.copy())

    iterations = 0
    converged = r_norm <= threshold
    if not converged:
        z = r if apply is None else apply(r)
        rz = float(r @ z)
        if rz <= 0:
            raise PreconditionerError(f"preconditioner gave r^T z = {rz:.3e} at iteration 0")
        p = z.copy()

        for j in range(1, max_iter + 1):
            Ap = A @ p
            pAp = float(p @ Ap)
            if not pAp > 0:
                raise NotPositiveDefiniteError(
                    f"matrix not SPD: p^T A p = {pAp:.3e} at iteration {j}"
                )
            alpha = rz / pAp
            x += alpha * p
            if j % RECOMPUTE_EVERY == 0:
                r = b - A @ x
                logger.debug(f"Recomputed residual at iteration {j}")
            else:
                r -= alpha * Ap
            r_norm = float(np.linalg.norm(r))
            history.append(r_norm)
            iterations = j
            if callback is not None:
                callback(j, x.copy())
            if r_norm <= threshold:
                converged = True
                break

            z = r if apply is None else apply(r)
            rz_next = float(r @ z)
            if rz_next <= 0:
                raise PreconditionerError(
                    f"preconditioner gave r^T z = {rz_next:.3e} at iteration {j}"
                )
            beta = rz_next / rz
            rz = rz_next
            p = z + beta * p

    wall_time_ms = (time.perf_counter() - start) * 1e3
    if not converged:
        logger.warning(
            f"CG stopped after {iterations} iterations without reaching "
            f"tol={tol:g} (residual {r_norm:.3e})"
        )
    return SolveReport(
        iterations=iterations,
        residual_history=np.asarray(history),
        converged=converged,
        wall_time_ms=wall_time_ms,
        solution=x,
        x0=x_start,
    )


def cg(
    A: CsrMatrix,
    b: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 10000,
    x0: Optional[np.ndarray] = None,
    callback: Optional[IterateCallback] = None,
) -> SolveReport:
    """
    Unpreconditioned conjugate gradients.

    Args:
        A: SPD system matrix (caller-certified)
        b: Right-hand side
        tol: Relative residual tolerance, ||r|| <= tol ||b||
        max_iter: Iteration cap
        x0: Initial guess (zero if omitted)
        callback: Called as callback(j, x_j) for j = 0, 1, ...

    Raises:
        NotPositiveDefiniteError: If p^T A p <= 0 is encountered
    """
    return _conjugate_gradient(A, b, None, tol, max_iter, x0, callback)


def pcg(
    A: CsrMatrix,
    M: ApplyFn,
    b: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 10000,
    x0: Optional[np.ndarray] = None,
    callback: Optional[IterateCallback] = None,
) -> SolveReport:
    """
    Preconditioned conjugate gradients with z = M^-1 r.

    ``M`` is any callable applying M^-1 (a Preconditioner qualifies). The
    returned solution solves the original system; convergence is measured on
    the unpreconditioned residual.

    Raises:
        NotPositiveDefiniteError: If p^T A p <= 0 is encountered
        PreconditionerError: If r^T M^-1 r <= 0 (M not SPD)
    """
    report = _conjugate_gradient(A, b, M, tol, max_iter, x0, callback)
    kind = getattr(M, "kind", None)
    if kind is not None:
        return replace(report, method=str(kind))
    return report


def residual_frame(report: SolveReport) -> pd.DataFrame:
    """Residual history as an ``iteration,residual`` table."""
    return pd.DataFrame(
        {
            "iteration": np.arange(report.residual_history.size),
            "residual": report.residual_history,
        }
    )


def write_residual_csv(report: SolveReport, path: Path) -> None:
    """Write the residual history as CSV with header ``iteration,residual``."""
    residual_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote residual history to {path}")


def iteration_ratio(reports: list[SolveReport], baseline: list[SolveReport]) -> float:
    """Mean iterations of ``reports`` divided by mean iterations of ``baseline``."""
    ours = float(np.mean([r.iterations for r in reports]))
    base = float(np.mean([r.iterations for r in baseline]))
    return ours / base if base > 0 else math.inf
