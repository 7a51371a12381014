"""
Sparse and small-dense linear algebra primitives.

CsrMatrix is an immutable, validated CSR container backed by scipy.sparse for
the actual kernels. DenseMatrix is a thin wrapper for desk-scale spectral work
(SVD, Cholesky certificates, direct-solve oracles).

Key invariants of CsrMatrix:
- row_ptr[0] == 0, non-decreasing, row_ptr[-1] == nnz
- column indices strictly increasing within each row, all in range
- no explicitly stored zeros
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .exceptions import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NotPositiveDefiniteError,
    SingularFactorError,
)

logger = logging.getLogger(__name__)

Entry = tuple[int, int, float]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """
    Immutable sparse matrix in compressed sparse row format.

    Construct through csr_from_coo() or CsrMatrix.from_scipy(); direct
    construction validates the canonical-form invariants.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        """Validate CSR invariants and freeze the arrays."""
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError(f"Invalid shape ({self.n_rows}, {self.n_cols})")
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)

        if row_ptr.shape != (self.n_rows + 1,):
            raise ValueError(
                f"row_ptr must have length {self.n_rows + 1}, got {row_ptr.shape[0]}"
            )
        if row_ptr[0] != 0 or np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must start at 0 and be non-decreasing")
        nnz = int(row_ptr[-1])
        if col_idx.shape != (nnz,) or values.shape != (nnz,):
            raise ValueError(
                f"col_idx/values must have length nnz={nnz}, "
                f"got {col_idx.shape[0]}/{values.shape[0]}"
            )
        if nnz:
            if col_idx.min() < 0 or col_idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # Strictly increasing within rows: any non-increase must sit on a row start.
            steps = np.diff(col_idx) <= 0
            row_starts = np.zeros(nnz, dtype=bool)
            row_starts[row_ptr[1:-1][row_ptr[1:-1] < nnz]] = True
            if np.any(steps & ~row_starts[1:]):
                raise ValueError("column indices must be strictly increasing within rows")
            if np.any(values == 0.0):
                raise ValueError("explicitly stored zeros are not allowed")

        object.__setattr__(self, "row_ptr", _readonly(row_ptr))
        object.__setattr__(self, "col_idx", _readonly(col_idx))
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_scipy(cls, matrix: sp.spmatrix | sp.sparray) -> CsrMatrix:
        """Canonicalize any scipy sparse matrix (sum duplicates, sort, drop zeros)."""
        csr = sp.csr_array(matrix, dtype=np.float64)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        n_rows, n_cols = csr.shape
        return cls(
            n_rows=n_rows,
            n_cols=n_cols,
            row_ptr=csr.indptr.copy(),
            col_idx=csr.indices.copy(),
            values=csr.data.copy(),
        )

    @classmethod
    def identity(cls, n: int) -> CsrMatrix:
        """Return the n x n identity."""
        return cls.from_scipy(sp.identity(n, format="csr"))

    @classmethod
    def from_dense(cls, array: np.ndarray) -> CsrMatrix:
        """Build from a 2-D array, keeping every nonzero entry."""
        return cls.from_scipy(sp.csr_array(np.asarray(array, dtype=np.float64)))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @cached_property
    def scipy(self) -> sp.csr_array:
        """Read-only scipy view used for the numerical kernels."""
        return sp.csr_array(
            (self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False
        )

    @cached_property
    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (COO row array)."""
        return _readonly(
            np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))
        )

    def diagonal(self) -> np.ndarray:
        """Return the main diagonal (zeros where nothing is stored)."""
        return np.asarray(self.scipy.diagonal(), dtype=np.float64)

    def to_dense(self) -> np.ndarray:
        return self.scipy.toarray()

    def transpose(self) -> CsrMatrix:
        return CsrMatrix.from_scipy(self.scipy.T)

    def tril(self, k: int = 0) -> CsrMatrix:
        """Lower triangle including diagonal offset k (k=-1 is strictly lower)."""
        return CsrMatrix.from_scipy(sp.tril(self.scipy, k=k, format="csr"))

    def is_lower_triangular(self) -> bool:
        return bool(np.all(self.col_idx <= self.row_indices))

    def is_symmetric(self) -> bool:
        """Exact structural and numerical symmetry."""
        if self.n_rows != self.n_cols:
            return False
        transposed = self.transpose()
        return (
            np.array_equal(self.row_ptr, transposed.row_ptr)
            and np.array_equal(self.col_idx, transposed.col_idx)
            and np.array_equal(self.values, transposed.values)
        )

    def scaled(self, factor: float) -> CsrMatrix:
        return CsrMatrix.from_scipy(self.scipy * factor)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return spmv(self, x)

    def __repr__(self) -> str:
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Row-major dense matrix for desk-scale spectral computations and oracles."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise ValueError(f"DenseMatrix needs a non-empty 2-D array, got {values.shape}")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)


MatrixLike = Union[DenseMatrix, np.ndarray]


def as_dense_array(matrix: MatrixLike) -> np.ndarray:
    """Return the underlying ndarray of a DenseMatrix or array."""
    if isinstance(matrix, DenseMatrix):
        return matrix.values
    return DenseMatrix(matrix).values


def spmv(A: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """
    Sparse matrix-vector product y = A x.

    Accumulation follows the stored pattern left to right within each row.
    A 2-D x of shape (n_cols, k) is multiplied column-wise.

    Raises:
        DimensionMismatchError: If len(x) != A.n_cols
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] != A.n_cols:
        raise DimensionMismatchError(
            f"spmv: matrix has {A.n_cols} columns, vector has shape {x.shape}"
        )
    return np.asarray(A.scipy @ x, dtype=np.float64)


def csr_from_coo(entries: Iterable[Entry], n_rows: int, n_cols: int) -> CsrMatrix:
    """
    Build a canonical CsrMatrix from (i, j, value) triplets.

    Duplicates are summed, entries that sum to exactly zero are pruned and
    rows come out column-sorted.

    Raises:
        IndexOutOfRangeError: If an index lies outside the shape
    """
    triplets = list(entries)
    if triplets:
        rows = np.fromiter((t[0] for t in triplets), dtype=np.int64, count=len(triplets))
        cols = np.fromiter((t[1] for t in triplets), dtype=np.int64, count=len(triplets))
        vals = np.fromiter(
            (t[2] for t in triplets), dtype=np.float64, count=len(triplets)
        )
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    return csr_from_arrays(rows, cols, vals, n_rows, n_cols)


def csr_from_arrays(
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    n_rows: int,
    n_cols: int,
) -> CsrMatrix:
    """Vectorized csr_from_coo taking parallel index/value arrays."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    bad_row = (rows < 0) | (rows >= n_rows)
    bad_col = (cols < 0) | (cols >= n_cols)
    if np.any(bad_row | bad_col):
        k = int(np.flatnonzero(bad_row | bad_col)[0])
        raise IndexOutOfRangeError(
            f"entry ({rows[k]}, {cols[k]}) outside a {n_rows}x{n_cols} matrix"
        )
    coo = sp.coo_array(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n_rows, n_cols)
    )
    return CsrMatrix.from_scipy(coo)


def to_coo(A: CsrMatrix) -> list[Entry]:
    """List the stored entries as (i, j, value) triplets in row-major order."""
    return [
        (int(i), int(j), float(v))
        for i, j, v in zip(A.row_indices, A.col_idx, A.values, strict=True)
    ]


def _cint_csr(matrix: sp.csr_array) -> sp.csr_array:
    """Copy with C-int index arrays, which the SuperLU triangular solve requires."""
    return sp.csr_array(
        (
            matrix.data,
            matrix.indices.astype(np.int32),
            matrix.indptr.astype(np.int32),
        ),
        shape=matrix.shape,
    )


def lower_solve(L: CsrMatrix, b: np.ndarray, transpose: bool = False) -> np.ndarray:
    """
    Solve L x = b (or L^T x = b) for a lower triangular factor.

    Args:
        L: Lower triangular factor with strictly positive diagonal
        b: Right-hand side, shape (n,) or (n, k)
        transpose: Solve with L^T (backward substitution) instead

    Raises:
        SingularFactorError: If a diagonal entry is zero or negative
        DimensionMismatchError: If shapes disagree
    """
    if L.n_rows != L.n_cols:
        raise DimensionMismatchError(f"factor must be square, got {L.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != L.n_rows:
        raise DimensionMismatchError(
            f"lower_solve: factor has {L.n_rows} rows, rhs has shape {b.shape}"
        )
    if not L.is_lower_triangular():
        raise ValueError("lower_solve needs a lower triangular factor")
    diag = L.diagonal()
    if np.any(diag <= 0.0):
        k = int(np.flatnonzero(diag <= 0.0)[0])
        raise SingularFactorError(f"singular factor: diagonal entry {k} is {diag[k]}")
    if L.n_rows == 0:
        return b.copy()
    tri = L.scipy.T.tocsr() if transpose else L.scipy
    return np.asarray(
        spsolve_triangular(_cint_csr(tri), b, lower=not transpose), dtype=np.float64
    )


def dense_cholesky(A: MatrixLike) -> DenseMatrix:
    """
    Lower Cholesky factor of a symmetric matrix, A = Tc Tc^T.

    Serves as SPD certificate and direct-solve oracle.

    Raises:
        ValueError: If A is not square and symmetric
        NotPositiveDefiniteError: On a non-positive pivot
    """
    values = as_dense_array(A)
    if values.shape[0] != values.shape[1]:
        raise ValueError(f"dense_cholesky needs a square matrix, got {values.shape}")
    if not np.allclose(values, values.T, rtol=1e-12, atol=0.0):
        raise ValueError("dense_cholesky needs a symmetric matrix")
    try:
        factor = np.linalg.cholesky(values)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("not positive definite") from None
    return DenseMatrix(factor)


def density(A: CsrMatrix) -> float:
    """Fraction of stored entries, nnz / (n_rows * n_cols)."""
    size = A.n_rows * A.n_cols
    if size == 0:
        return 0.0
    return A.nnz / size
