"""
CLI for dataset generation.

Usage:
    precondnet gen --height 16 --width 16 --count 100 --obstacles 3 --seed 1 --out train.pmd
"""

from __future__ import annotations

import logging
from pathlib import Path

import typer
from pydantic import ValidationError

from ..core.config import GridConfig
from ..poisson.assembly import generate_samples
from ..poisson.dataset import save_dataset
from .common import console, fail, set_verbose

logger = logging.getLogger(__name__)


def gen(
    height: int = typer.Option(..., "--height", help="Grid rows"),
    width: int = typer.Option(..., "--width", help="Grid columns"),
    count: int = typer.Option(..., "--count", help="Number of samples"),
    obstacles: int = typer.Option(3, "--obstacles", help="Random obstacles per grid"),
    seed: int = typer.Option(0, "--seed", help="Master random seed"),
    out: Path = typer.Option(..., "--out", help="Output dataset file (PMD1)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """
    Generate random 2D Poisson systems on occupancy grids.

    Example:
        precondnet gen --height 16 --width 16 --count 100 \\
            --obstacles 3 --seed 1 --out train.pmd
    """
    set_verbose(verbose)
    console.print("[bold blue]precondnet - Dataset generation[/bold blue]")

    try:
        grid = GridConfig(
            height=height, width=width, count=count, obstacles=obstacles, seed=seed
        )
    except ValidationError as e:
        raise fail(f"invalid grid settings: {e}") from None

    try:
        with console.status(f"Generating {count} samples on {height}x{width} grids..."):
            samples = generate_samples(
                grid.height, grid.width, grid.count, grid.obstacles, grid.seed
            )
        out.parent.mkdir(parents=True, exist_ok=True)
        save_dataset(samples, out)
    except (ValueError, OSError) as e:
        logger.debug("Generation failed", exc_info=True)
        raise fail(str(e)) from None

    sizes = [s.n for s in samples]
    console.print("\n[bold green]Generation complete![/bold green]")
    console.print(f"Samples: {len(samples):,}")
    if sizes:
        console.print(f"Unknowns per sample: {min(sizes)}-{max(sizes)}")
    console.print(f"Output saved to: {out}")
