"""
SPD assembly of the learned preconditioner.

From the raw map R = f(A): T = strictly lower part of R, D_hat = diag(R),
D = max(D_hat, eps) and M^-1 = (T + D)(T + D)^T. The factor T + D is lower
triangular with a strictly positive diagonal, so M^-1 is SPD for any raw map.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..core.config import check_dense_cap
from ..core.sparse import CsrMatrix, csr_from_arrays, density
from ..preconditioners.base import Preconditioner, PreconditionerKind
from .feature_map import FeatureMap

logger = logging.getLogger(__name__)

EPSILON = 1e-3


@dataclass(frozen=True, eq=False)
class SpdFactors:
    """Factors of M^-1 = F F^T with F = T + diag(D)."""

    T: CsrMatrix
    D: np.ndarray
    diag_raw: np.ndarray
    epsilon: float
    factor: CsrMatrix

    def __post_init__(self) -> None:
        """Check T is strictly lower and D respects the clamp."""
        if self.T.nnz and not np.all(self.T.col_idx < self.T.row_indices):
            raise ValueError("T must be strictly lower triangular")
        if np.any(self.D < self.epsilon):
            raise ValueError(f"all D entries must be >= {self.epsilon}")

    @property
    def n(self) -> int:
        return self.T.n_rows

    @property
    def clamped(self) -> np.ndarray:
        """Diagonal positions where D_hat <= eps (clamp active)."""
        return self.diag_raw <= self.epsilon

    def apply(self, v: np.ndarray) -> np.ndarray:
        """M^-1 v as two triangular products, F (F^T v)."""
        F = self.factor.scipy
        return np.asarray(F @ (F.T @ v), dtype=np.float64)

    def minv_dense(self) -> np.ndarray:
        """Dense M^-1 (cap-checked), used for spectral reporting only."""
        check_dense_cap(self.n, "dense learned M^-1")
        F = self.factor.to_dense()
        return F @ F.T

    def factor_density(self) -> float:
        return density(self.factor)


def spd_assemble(raw: FeatureMap, epsilon: float = EPSILON) -> SpdFactors:
    """
    Build the SPD factors from a single-channel square raw map.

    The strictly upper triangle of the raw map is discarded and the diagonal
    is clamped from below at ``epsilon``.

    Raises:
        ValueError: If the map is not single-channel and square
    """
    if raw.channels != 1 or raw.height != raw.width:
        raise ValueError(
            f"spd_assemble needs a single-channel square map, got "
            f"{raw.channels} x {raw.height} x {raw.width}"
        )
    n = raw.height
    values = raw.values[0]
    lower = raw.rows > raw.cols
    on_diag = raw.rows == raw.cols

    T = csr_from_arrays(raw.rows[lower], raw.cols[lower], values[lower], n, n)
    diag_raw = np.zeros(n)
    diag_raw[raw.rows[on_diag]] = values[on_diag]
    D = np.maximum(diag_raw, epsilon)

    factor = csr_from_arrays(
        np.concatenate([raw.rows[lower], np.arange(n)]),
        np.concatenate([raw.cols[lower], np.arange(n)]),
        np.concatenate([values[lower], D]),
        n,
        n,
    )
    n_clamped = int(np.count_nonzero(diag_raw <= epsilon))
    if n_clamped:
        logger.debug(f"{n_clamped}/{n} diagonal entries clamped to {epsilon:g}")
    return SpdFactors(T=T, D=D, diag_raw=diag_raw, epsilon=epsilon, factor=factor)


def learned_precond(factors: SpdFactors, setup_time_ms: float = 0.0) -> Preconditioner:
    """Wrap assembled factors as a Preconditioner (density of T + D)."""
    start = time.perf_counter()
    F = factors.factor.scipy
    Ft = F.T.tocsr()

    def apply(v: np.ndarray) -> np.ndarray:
        return np.asarray(F @ (Ft @ v), dtype=np.float64)

    return Preconditioner(
        kind=PreconditionerKind.LEARNED,
        n=factors.n,
        apply=apply,
        density_hint=factors.factor_density(),
        info={"factors": factors, "clamped": int(factors.clamped.sum())},
        setup_time_ms=setup_time_ms + (time.perf_counter() - start) * 1e3,
    )
