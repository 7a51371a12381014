"""
Classic algebraic preconditioners: Jacobi and zero fill-in incomplete
Cholesky, IC(0).
"""

from __future__ import annotations

import logging
import math
import time

import numpy as np

from ..core.exceptions import FactorizationBreakdownError
from ..core.sparse import CsrMatrix, csr_from_coo, density, lower_solve
from .base import Preconditioner, PreconditionerKind

logger = logging.getLogger(__name__)

MAX_SHIFT_DOUBLINGS = 20


def jacobi_precond(A: CsrMatrix) -> Preconditioner:
    """
    Diagonal scaling, M^-1 = diag(A)^-1.

    Raises:
        ValueError: If any diagonal entry is not positive
    """
    start = time.perf_counter()
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        k = int(np.flatnonzero(diag <= 0.0)[0])
        raise ValueError(f"Jacobi needs a positive diagonal, entry {k} is {diag[k]}")
    inv = 1.0 / diag
    inv.setflags(write=False)

    def apply(v: np.ndarray) -> np.ndarray:
        return inv * v if v.ndim == 1 else inv[:, None] * v

    return Preconditioner(
        kind=PreconditionerKind.JACOBI,
        n=A.n_rows,
        apply=apply,
        density_hint=A.n_rows / (A.n_rows * A.n_rows),
        setup_time_ms=(time.perf_counter() - start) * 1e3,
    )


class _Breakdown(Exception):
    """Non-positive pivot during the incomplete factorization."""

    def __init__(self, row: int, pivot: float) -> None:
        super().__init__(f"pivot {pivot:.3e} at row {row}")
        self.row = row
        self.pivot = pivot


def _ic0_factor(A: CsrMatrix, shift: float) -> CsrMatrix:
    """
    Incomplete Cholesky restricted to the pattern of tril(A).

    The diagonal is scaled by (1 + shift) before factoring.
    """
    n = A.n_rows
    lower = A.tril()
    rows: list[dict[int, float]] = []
    for i in range(n):
        lo, hi = lower.row_ptr[i], lower.row_ptr[i + 1]
        cols = lower.col_idx[lo:hi]
        vals = lower.values[lo:hi]
        row: dict[int, float] = {}
        diag_value = 0.0
        for k, a_ik in zip(cols.tolist(), vals.tolist(), strict=True):
            if k == i:
                diag_value = a_ik * (1.0 + shift)
                continue
            # Only columns already in row i's pattern contribute (no fill).
            row_k = rows[k]
            s = a_ik
            for m, l_im in row.items():
                l_km = row_k.get(m)
                if l_km is not None:
                    s -= l_im * l_km
            row[k] = s / row_k[k]
        pivot = diag_value - sum(v * v for v in row.values())
        if not pivot > 0.0:
            raise _Breakdown(i, pivot)
        row[i] = math.sqrt(pivot)
        rows.append(row)

    entries = [(i, j, v) for i, row in enumerate(rows) for j, v in row.items()]
    return csr_from_coo(entries, n, n)


def ic0(A: CsrMatrix, shift0: float = 1e-3) -> Preconditioner:
    """
    Zero fill-in incomplete Cholesky preconditioner.

    M^-1 v is applied as two triangular solves with the factor L. On pivot
    breakdown the factorization is retried on A + alpha diag(A) with
    alpha = shift0, 2 shift0, 4 shift0, ...

    Args:
        A: SPD matrix with symmetric pattern
        shift0: First diagonal shift tried after a breakdown

    Returns:
        Preconditioner whose ``info`` holds the applied ``shift`` and ``factor``

    Raises:
        FactorizationBreakdownError: If 20 shift doublings do not help
    """
    if A.n_rows != A.n_cols:
        raise ValueError(f"IC(0) needs a square matrix, got {A.shape}")
    if shift0 <= 0:
        raise ValueError(f"shift0 must be positive, got {shift0}")
    start = time.perf_counter()

    shift = 0.0
    attempt = 0
    while True:
        try:
            factor = _ic0_factor(A, shift)
            break
        except _Breakdown as e:
            if attempt > MAX_SHIFT_DOUBLINGS:
                raise FactorizationBreakdownError(
                    f"IC(0) broke down ({e}) even with diagonal shift {shift:g}"
                ) from None
            shift = shift0 * 2.0**attempt
            attempt += 1
            logger.debug(f"IC(0) breakdown ({e}), retrying with shift {shift:g}")

    if shift > 0:
        logger.warning(f"IC(0) needed a diagonal shift of {shift:g}")

    def apply(v: np.ndarray) -> np.ndarray:
        return lower_solve(factor, lower_solve(factor, v), transpose=True)

    return Preconditioner(
        kind=PreconditionerKind.IC0,
        n=A.n_rows,
        apply=apply,
        density_hint=density(factor),
        info={"shift": shift, "factor": factor},
        setup_time_ms=(time.perf_counter() - start) * 1e3,
    )
