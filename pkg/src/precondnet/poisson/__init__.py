"""2D Poisson pressure systems on occupancy grids."""

from .assembly import PoissonSample, assemble_poisson, generate_samples, make_sample, poisson_1d
from .dataset import load_dataset, save_dataset
from .grid import OccupancyGrid, generate_grid, generate_rhs

__all__ = [
    "OccupancyGrid",
    "PoissonSample",
    "assemble_poisson",
    "generate_grid",
    "generate_rhs",
    "generate_samples",
    "load_dataset",
    "make_sample",
    "poisson_1d",
    "save_dataset",
]
