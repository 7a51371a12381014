"""
Assembly of the discrete pressure Poisson system on an occupancy grid.

Five-point finite-difference stencil with homogeneous Dirichlet conditions:
every fluid cell gets diagonal 4, every fluid-fluid 4-neighbour pair gets -1
in both off-diagonal slots. Solid cells and the domain boundary clamp p=0,
so they contribute nothing beyond the diagonal. The result is symmetric,
diagonally dominant with at least one strictly dominant row per connected
fluid component, hence SPD.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.sparse import CsrMatrix, csr_from_arrays
from .grid import OccupancyGrid, generate_grid, generate_rhs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PoissonSample:
    """One Poisson system L p = d with the grid it came from."""

    sample_id: str
    grid: OccupancyGrid
    matrix: CsrMatrix
    rhs: np.ndarray

    def __post_init__(self) -> None:
        """Check that matrix and rhs match the grid's fluid cell count."""
        n = self.grid.n_fluid
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"Sample {self.sample_id}: matrix shape {self.matrix.shape} "
                f"does not match {n} fluid cells"
            )
        rhs = np.array(self.rhs, dtype=np.float64)
        if rhs.shape != (n,):
            raise ValueError(
                f"Sample {self.sample_id}: rhs length {rhs.shape} does not match {n}"
            )
        rhs.setflags(write=False)
        object.__setattr__(self, "rhs", rhs)

    @property
    def n(self) -> int:
        return self.matrix.n_rows


def assemble_poisson(grid: OccupancyGrid) -> CsrMatrix:
    """
    Assemble the 5-point Dirichlet Laplacian over the fluid cells of a grid.

    Args:
        grid: Occupancy grid

    Returns:
        n x n CsrMatrix, n = number of fluid cells
    """
    index = grid.fluid_index
    fluid = ~grid.solid
    n = grid.n_fluid

    diag = np.arange(n, dtype=np.int64)
    rows = [diag]
    cols = [diag]
    vals = [np.full(n, 4.0)]

    # Horizontal and vertical fluid-fluid pairs.
    pairs = (
        (index[:, :-1], index[:, 1:], fluid[:, :-1] & fluid[:, 1:]),
        (index[:-1, :], index[1:, :], fluid[:-1, :] & fluid[1:, :]),
    )
    for left, right, both in pairs:
        a = left[both]
        b = right[both]
        rows += [a, b]
        cols += [b, a]
        vals += [np.full(a.size, -1.0), np.full(a.size, -1.0)]

    return csr_from_arrays(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), n, n
    )


def poisson_1d(n: int) -> CsrMatrix:
    """Return tridiag(-1, 2, -1) of size n (1D Dirichlet Poisson)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    i = np.arange(n, dtype=np.int64)
    j = np.arange(n - 1, dtype=np.int64)
    rows = np.concatenate([i, j, j + 1])
    cols = np.concatenate([i, j + 1, j])
    vals = np.concatenate([np.full(n, 2.0), np.full(2 * (n - 1), -1.0)])
    return csr_from_arrays(rows, cols, vals, n, n)


def make_sample(sample_id: str, grid: OccupancyGrid, rhs_seed: int) -> PoissonSample:
    """Assemble the system for a grid and attach a seeded right-hand side."""
    return PoissonSample(
        sample_id=sample_id,
        grid=grid,
        matrix=assemble_poisson(grid),
        rhs=generate_rhs(grid, rhs_seed),
    )


def generate_samples(
    height: int,
    width: int,
    count: int,
    obstacles: int,
    seed: int,
) -> list[PoissonSample]:
    """
    Generate a reproducible list of Poisson samples.

    Per-sample grid and rhs seeds are derived from ``seed`` through
    numpy.random.SeedSequence, so datasets built from different seeds are
    independent (train/validation pools use disjoint seeds).

    Args:
        height: Grid rows
        width: Grid columns
        count: Number of samples
        obstacles: Obstacles per grid
        seed: Master seed

    Returns:
        List of PoissonSample with ids "0".."count-1"
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    state = np.random.SeedSequence(seed).generate_state(2 * count, dtype=np.uint64)
    samples = []
    for k in range(count):
        grid = generate_grid(height, width, obstacles, int(state[2 * k]))
        samples.append(make_sample(str(k), grid, int(state[2 * k + 1])))
    logger.info(
        f"Generated {count} samples on {height}x{width} grids "
        f"({obstacles} obstacles, seed {seed})"
    )
    return samples
