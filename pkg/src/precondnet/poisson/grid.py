"""
Occupancy grids: binary fluid/solid cell layouts the Poisson systems live on.

Grids are synthesized from random rectangles and ellipses. Fluid cells are
numbered row-major, which fixes the equation ordering of the assembled system
independently of platform.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

logger = logging.getLogger(__name__)

FLUID_CHAR = "."
SOLID_CHAR = "#"


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Binary fluid/solid grid.

    ``solid`` is a (height, width) boolean array, True for solid cells.
    """

    solid: np.ndarray

    def __post_init__(self) -> None:
        """Validate shape and the at-least-one-fluid-cell invariant."""
        solid = np.array(self.solid, dtype=bool)
        if solid.ndim != 2 or solid.shape[0] < 1 or solid.shape[1] < 1:
            raise ValueError(f"Occupancy grid must be a non-empty 2-D array, got {solid.shape}")
        if solid.all():
            raise ValueError("Occupancy grid needs at least one fluid cell")
        solid.setflags(write=False)
        object.__setattr__(self, "solid", solid)

    @classmethod
    def all_fluid(cls, height: int, width: int) -> OccupancyGrid:
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rows(cls, rows: list[str]) -> OccupancyGrid:
        """Parse rows of '.' (fluid) and '#' (solid) characters."""
        if not rows:
            raise ValueError("Occupancy grid needs at least one row")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise ValueError("Occupancy grid rows must have equal length")
        bad = {ch for row in rows for ch in row} - {FLUID_CHAR, SOLID_CHAR}
        if bad:
            raise ValueError(f"Invalid occupancy characters: {sorted(bad)}")
        return cls(np.array([[ch == SOLID_CHAR for ch in row] for row in rows]))

    @property
    def height(self) -> int:
        return int(self.solid.shape[0])

    @property
    def width(self) -> int:
        return int(self.solid.shape[1])

    @property
    def n_fluid(self) -> int:
        return int(np.count_nonzero(~self.solid))

    @property
    def fluid_fraction(self) -> float:
        return self.n_fluid / self.solid.size

    @cached_property
    def fluid_index(self) -> np.ndarray:
        """(height, width) int array: equation index of each fluid cell, -1 for solid."""
        index = np.full(self.solid.shape, -1, dtype=np.int64)
        fluid = ~self.solid
        index[fluid] = np.arange(self.n_fluid, dtype=np.int64)
        index.setflags(write=False)
        return index

    def to_rows(self) -> list[str]:
        return [
            "".join(SOLID_CHAR if cell else FLUID_CHAR for cell in row)
            for row in self.solid
        ]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return bool(np.array_equal(self.solid, other.solid))

    def __hash__(self) -> int:
        return hash((self.solid.shape, self.solid.tobytes()))

    def __repr__(self) -> str:
        return (
            f"OccupancyGrid({self.height}x{self.width}, "
            f"fluid={self.n_fluid}/{self.solid.size})"
        )


def _obstacle_mask(
    rng: np.random.Generator, height: int, width: int
) -> np.ndarray:
    """Draw one solid rectangle or ellipse."""
    yy, xx = np.mgrid[0:height, 0:width]
    cy = rng.uniform(0, height)
    cx = rng.uniform(0, width)
    ry = rng.uniform(1.0, max(1.5, height / 4))
    rx = rng.uniform(1.0, max(1.5, width / 4))
    if rng.random() < 0.5:
        return (np.abs(yy + 0.5 - cy) <= ry) & (np.abs(xx + 0.5 - cx) <= rx)
    return ((yy + 0.5 - cy) / ry) ** 2 + ((xx + 0.5 - cx) / rx) ** 2 <= 1.0


def generate_grid(
    height: int, width: int, obstacle_count: int, seed: int
) -> OccupancyGrid:
    """
    Generate an occupancy grid with random solid obstacles.

    Args:
        height: Number of cell rows (>= 2)
        width: Number of cell columns (>= 2)
        obstacle_count: Number of rectangles/ellipses to place
        seed: Random seed; equal arguments give identical grids

    Returns:
        OccupancyGrid with at least one fluid cell. Obstacles are removed from
        the end of the list until that holds.

    Raises:
        ValueError: On impossible dimensions or a negative obstacle count
    """
    if height < 2 or width < 2:
        raise ValueError(f"Grid dimensions must be at least 2x2, got {height}x{width}")
    if obstacle_count < 0:
        raise ValueError(f"obstacle_count must be non-negative, got {obstacle_count}")

    rng = np.random.default_rng(seed)
    masks = [_obstacle_mask(rng, height, width) for _ in range(obstacle_count)]

    while True:
        solid = np.zeros((height, width), dtype=bool)
        for mask in masks:
            solid |= mask
        if not solid.all():
            break
        dropped = masks.pop()
        logger.debug(f"Dropped an obstacle covering {int(dropped.sum())} cells")

    return OccupancyGrid(solid)


def generate_rhs(grid: OccupancyGrid, seed: int) -> np.ndarray:
    """I.i.d. standard normal right-hand side over the fluid cells."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.n_fluid)
