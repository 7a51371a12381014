"""
Spectral diagnostics: condition numbers, the CG a-priori error bound and
convergence-rate fits of residual histories.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ..core.config import check_dense_cap
from ..core.exceptions import NotPositiveDefiniteError, NumericallySingularError
from ..core.sparse import CsrMatrix, MatrixLike, as_dense_array

logger = logging.getLogger(__name__)

SINGULAR_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class SpectralInfo:
    """Extreme singular triplets of a square matrix."""

    sigma_max: float
    sigma_min: float
    u_max: np.ndarray
    v_max: np.ndarray
    u_min: np.ndarray
    v_min: np.ndarray
    singular_values: Optional[np.ndarray] = None

    @property
    def kappa(self) -> float:
        return self.sigma_max / self.sigma_min


def condition_number(
    B: MatrixLike, sample_id: Optional[str] = None
) -> SpectralInfo:
    """
    Full SVD of a square dense matrix, returning the extreme singular triplets.

    kappa = sigma_max / sigma_min.

    Raises:
        ValueError: If B is not square
        DenseCapExceededError: If B is larger than the dense cap
        NumericallySingularError: If sigma_min < 1e-300
    """
    values = as_dense_array(B)
    n_rows, n_cols = values.shape
    if n_rows != n_cols:
        raise ValueError(f"condition_number needs a square matrix, got {values.shape}")
    check_dense_cap(n_rows, "condition number SVD")

    U, s, Vt = np.linalg.svd(values)
    if not np.isfinite(s).all():
        raise NumericallySingularError("numerically singular: non-finite singular values", sample_id)
    if s[-1] < SINGULAR_FLOOR:
        raise NumericallySingularError(
            f"numerically singular: sigma_min={s[-1]:.3e}", sample_id
        )
    return SpectralInfo(
        sigma_max=float(s[0]),
        sigma_min=float(s[-1]),
        u_max=U[:, 0].copy(),
        v_max=Vt[0].copy(),
        u_min=U[:, -1].copy(),
        v_min=Vt[-1].copy(),
        singular_values=s,
    )


def symmetrized_kappa(
    A: CsrMatrix | MatrixLike,
    minv: Optional[MatrixLike] = None,
    factor: Optional[MatrixLike] = None,
) -> float:
    """
    Condition number of C^T A C, C a factor of M^-1 = C C^T.

    A M^-1 is similar to C^T A C. The eigenvalue ratio never exceeds the
    SVD-based kappa of A M^-1 and equals it when A M^-1 is normal.

    Args:
        A: System matrix
        minv: Dense M^-1, factored by Cholesky when ``factor`` is not given
        factor: Known factor C of M^-1 (the learned T + D)

    Raises:
        ValueError: If neither minv nor factor is given
        NotPositiveDefiniteError: If M^-1 or C^T A C is not positive definite
    """
    a = A.to_dense() if isinstance(A, CsrMatrix) else as_dense_array(A)
    check_dense_cap(a.shape[0], "symmetrized operator")
    if factor is not None:
        C = factor.to_dense() if isinstance(factor, CsrMatrix) else as_dense_array(factor)
    elif minv is not None:
        m = as_dense_array(minv)
        try:
            C = np.linalg.cholesky(0.5 * (m + m.T))
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("preconditioner is not positive definite") from None
    else:
        raise ValueError("symmetrized_kappa needs minv or factor")
    S = C.T @ a @ C
    eig = scipy.linalg.eigvalsh(0.5 * (S + S.T))
    if eig[0] <= 0:
        raise NotPositiveDefiniteError("symmetrized operator is not positive definite")
    return float(eig[-1] / eig[0])


def cg_error_bound(kappa: float, j: int, initial_error_A_norm: float) -> float:
    """
    A-priori CG bound 2 [(sqrt(k) - 1) / (sqrt(k) + 1)]^j ||x - x0||_A.

    Raises:
        ValueError: If kappa < 1 or j < 0
    """
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if j < 0:
        raise ValueError(f"iteration count must be >= 0, got {j}")
    root = math.sqrt(kappa)
    ratio = (root - 1.0) / (root + 1.0)
    return 2.0 * ratio**j * initial_error_A_norm


def a_norm_error(A: CsrMatrix, x: np.ndarray, xj: np.ndarray) -> float:
    """||x - xj||_A = sqrt(e^T A e)."""
    e = np.asarray(x, dtype=np.float64) - np.asarray(xj, dtype=np.float64)
    return math.sqrt(max(float(e @ (A @ e)), 0.0))


def convergence_slope(
    residual_history: Sequence[float], window: Optional[tuple[int, int]] = None
) -> float:
    """
    Iterations needed per decade of residual reduction.

    Fits log10 ||r_j|| = c - j / slope by least squares over ``window``
    (half-open iteration range). The default window is the last half of the
    history, at least 3 points, which skips the initial transient.

    Returns:
        The slope, or inf if the residual does not decrease over the window
    """
    history = np.asarray(residual_history, dtype=np.float64)
    if history.size < 2:
        raise ValueError("need at least two residuals to fit a slope")
    if window is None:
        start = min(history.size // 2, max(history.size - 3, 0))
        window = (start, history.size)
    lo, hi = window
    if not 0 <= lo < hi <= history.size or hi - lo < 2:
        raise ValueError(f"invalid fitting window {window} for {history.size} residuals")
    segment = history[lo:hi]
    keep = segment > 0
    if keep.sum() < 2:
        raise ValueError("need at least two positive residuals in the window")
    its = np.arange(lo, hi, dtype=np.float64)[keep]
    decline, _ = np.polyfit(its, np.log10(segment[keep]), 1)
    if decline >= 0:
        return math.inf
    return float(-1.0 / decline)
