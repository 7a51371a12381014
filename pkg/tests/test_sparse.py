"""Tests for CSR construction and the sparse/dense kernels."""

from __future__ import annotations

import numpy as np
import pytest

from precondnet.core.exceptions import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NotPositiveDefiniteError,
    SingularFactorError,
)
from precondnet.core.sparse import (
    CsrMatrix,
    DenseMatrix,
    csr_from_coo,
    dense_cholesky,
    density,
    lower_solve,
    spmv,
    to_coo,
)
from precondnet.poisson.assembly import poisson_1d


class TestCsrMatrix:
    def test_rejects_stored_zero(self) -> None:
        with pytest.raises(ValueError, match="zeros"):
            CsrMatrix(2, 2, np.array([0, 1, 1]), np.array([0]), np.array([0.0]))

    def test_rejects_unsorted_columns(self) -> None:
        with pytest.raises(ValueError, match="increasing"):
            CsrMatrix(1, 3, np.array([0, 2]), np.array([2, 0]), np.array([1.0, 1.0]))

    def test_arrays_are_read_only(self, tridiag3: CsrMatrix) -> None:
        with pytest.raises(ValueError):
            tridiag3.values[0] = 5.0

    def test_tril_and_symmetry(self, tridiag3: CsrMatrix) -> None:
        assert tridiag3.is_symmetric()
        lower = tridiag3.tril()
        assert lower.is_lower_triangular()
        assert lower.nnz == 5
        assert tridiag3.tril(-1).nnz == 2


class TestSpmv:
    def test_identity(self) -> None:
        np.testing.assert_array_equal(spmv(CsrMatrix.identity(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])

    def test_tridiagonal(self, tridiag3: CsrMatrix) -> None:
        np.testing.assert_array_equal(spmv(tridiag3, np.ones(3)), [1.0, 0.0, 1.0])

    def test_empty_pattern(self) -> None:
        zero = csr_from_coo([], 3, 3)
        np.testing.assert_array_equal(spmv(zero, np.array([4.0, 5.0, 6.0])), np.zeros(3))

    def test_dimension_mismatch(self, tridiag3: CsrMatrix) -> None:
        with pytest.raises(DimensionMismatchError):
            spmv(tridiag3, np.ones(4))

    def test_symmetric_bilinear_form(self, spd_random: CsrMatrix) -> None:
        rng = np.random.default_rng(0)
        x, y = rng.standard_normal(12), rng.standard_normal(12)
        assert y @ spmv(spd_random, x) == pytest.approx(x @ spmv(spd_random, y), rel=1e-12)


class TestCsrFromCoo:
    def test_identity(self) -> None:
        A = csr_from_coo([(0, 0, 1.0), (1, 1, 1.0)], 2, 2)
        np.testing.assert_array_equal(A.to_dense(), np.eye(2))

    def test_duplicates_are_summed(self) -> None:
        A = csr_from_coo([(0, 0, 1.0), (0, 0, 2.0)], 1, 1)
        assert A.nnz == 1
        assert A.values[0] == 3.0

    def test_cancellation_is_pruned(self) -> None:
        A = csr_from_coo([(0, 1, 1.0), (0, 1, -1.0)], 2, 2)
        assert A.nnz == 0
        np.testing.assert_array_equal(A.row_ptr, [0, 0, 0])

    def test_out_of_range(self) -> None:
        with pytest.raises(IndexOutOfRangeError, match=r"\(2, 0\)"):
            csr_from_coo([(2, 0, 1.0)], 2, 2)

    def test_round_trip_through_coo(self) -> None:
        A = poisson_1d(6)
        B = csr_from_coo(to_coo(A), 6, 6)
        np.testing.assert_array_equal(A.row_ptr, B.row_ptr)
        np.testing.assert_array_equal(A.col_idx, B.col_idx)
        np.testing.assert_array_equal(A.values, B.values)


class TestLowerSolve:
    factor = CsrMatrix.from_dense(np.array([[2.0, 0.0], [1.0, 1.0]]))

    def test_identity(self) -> None:
        np.testing.assert_allclose(lower_solve(CsrMatrix.identity(2), np.array([4.0, 5.0])), [4, 5])

    def test_forward(self) -> None:
        np.testing.assert_allclose(lower_solve(self.factor, np.array([2.0, 2.0])), [1.0, 1.0])

    def test_transpose(self) -> None:
        np.testing.assert_allclose(
            lower_solve(self.factor, np.array([3.0, 1.0]), transpose=True), [1.0, 1.0]
        )

    def test_singular_factor(self) -> None:
        L = CsrMatrix.from_dense(np.array([[1.0, 0.0], [1.0, -1.0]]))
        with pytest.raises(SingularFactorError, match="singular factor"):
            lower_solve(L, np.ones(2))

    def test_missing_diagonal_is_singular(self) -> None:
        L = CsrMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(SingularFactorError):
            lower_solve(L, np.ones(2))

    def test_recovers_solution(self) -> None:
        rng = np.random.default_rng(3)
        dense = np.tril(rng.uniform(-1, 1, (10, 10)), -1) + np.diag(rng.uniform(1, 2, 10))
        L = CsrMatrix.from_dense(dense)
        x = rng.standard_normal(10)
        np.testing.assert_allclose(lower_solve(L, dense @ x), x, rtol=1e-12, atol=1e-12)

    def test_wide_index_arrays(self) -> None:
        dense = poisson_1d(6).tril().to_dense()
        L = CsrMatrix.from_dense(dense)
        assert L.col_idx.dtype == np.int64
        block = np.arange(12, dtype=float).reshape(6, 2)
        np.testing.assert_allclose(dense @ lower_solve(L, block), block, atol=1e-12)
        np.testing.assert_allclose(
            dense.T @ lower_solve(L, block, transpose=True), block, atol=1e-12
        )


class TestDenseCholesky:
    def test_identity(self) -> None:
        np.testing.assert_array_equal(dense_cholesky(DenseMatrix(np.eye(3))).values, np.eye(3))

    def test_hand_factorization(self) -> None:
        factor = dense_cholesky(np.array([[4.0, 2.0], [2.0, 2.0]]))
        np.testing.assert_allclose(factor.values, [[2.0, 0.0], [1.0, 1.0]])

    def test_indefinite(self) -> None:
        with pytest.raises(NotPositiveDefiniteError, match="not positive definite"):
            dense_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_reconstruction(self, spd_random: CsrMatrix) -> None:
        A = spd_random.to_dense()
        Tc = dense_cholesky(A).values
        assert np.max(np.abs(Tc @ Tc.T - A)) < 1e-10


class TestDensity:
    def test_identity(self) -> None:
        assert density(CsrMatrix.identity(4)) == 0.25

    def test_full(self) -> None:
        assert density(CsrMatrix.from_dense(np.ones((2, 2)))) == 1.0

    def test_tridiagonal(self) -> None:
        assert density(poisson_1d(1024)) == pytest.approx((3 * 1024 - 2) / 1024**2)
