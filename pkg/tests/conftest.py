"""Shared fixtures: small Poisson systems and deterministic parameters."""

from __future__ import annotations

import numpy as np
import pytest

from precondnet.core.sparse import CsrMatrix, csr_from_coo
from precondnet.model.network import CnnParams, init_params
from precondnet.poisson.assembly import PoissonSample, assemble_poisson, generate_samples, poisson_1d
from precondnet.poisson.grid import OccupancyGrid


@pytest.fixture
def tridiag3() -> CsrMatrix:
    return poisson_1d(3)


@pytest.fixture
def grid3_poisson() -> CsrMatrix:
    """3x3 all-fluid grid, n = 9, kappa = 3 + 2 sqrt(2)."""
    return assemble_poisson(OccupancyGrid.all_fluid(3, 3))


@pytest.fixture
def ic0_breakdown_matrix() -> CsrMatrix:
    """SPD 4x4 matrix on which unshifted IC(0) hits a negative pivot."""
    dense = np.array(
        [
            [3.0, -2.0, 0.0, 2.0],
            [-2.0, 3.0, -2.0, 0.0],
            [0.0, -2.0, 3.0, -2.0],
            [2.0, 0.0, -2.0, 3.0],
        ]
    )
    return CsrMatrix.from_dense(dense)


@pytest.fixture
def small_samples() -> list[PoissonSample]:
    return generate_samples(6, 6, count=4, obstacles=2, seed=11)


@pytest.fixture
def params() -> CnnParams:
    return init_params(np.random.default_rng(1234))


@pytest.fixture
def spd_random() -> CsrMatrix:
    rng = np.random.default_rng(5)
    G = rng.standard_normal((12, 12))
    dense = G @ G.T + 12 * np.eye(12)
    entries = [(i, j, dense[i, j]) for i in range(12) for j in range(12)]
    return csr_from_coo(entries, 12, 12)
