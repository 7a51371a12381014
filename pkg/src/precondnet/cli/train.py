"""
CLI for model training.

Usage:
    precondnet train --data train.pmd --val val.pmd --epochs 64 --lr 1e-3 --seed 0 --out runs/a
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import typer
from pydantic import ValidationError
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn

from ..core.config import TrainConfig
from ..core.exceptions import PrecondNetError
from ..poisson.dataset import load_dataset
from ..training.trainer import BEST_CHECKPOINT, HISTORY_FILE, train as run_training
from .common import console, fail, set_verbose

logger = logging.getLogger(__name__)


def resolve_config(config_file: Optional[Path], **overrides: Any) -> TrainConfig:
    """YAML config (or defaults) with explicitly given flags taking precedence."""
    base = TrainConfig.from_yaml(config_file) if config_file is not None else TrainConfig()
    updates = {k: v for k, v in overrides.items() if v is not None}
    return TrainConfig.model_validate({**base.model_dump(), **updates})


def train(
    data: Path = typer.Option(..., "--data", help="Training dataset (PMD1)"),
    val: Path = typer.Option(..., "--val", help="Validation dataset (PMD1)"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Epochs (default 64)"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Adam learning rate (default 1e-3)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (default 0)"),
    batch: Optional[int] = typer.Option(None, "--batch", help="Samples per batch (default 1)"),
    config_file: Optional[Path] = typer.Option(
        None, "--config", help="YAML file with training settings"
    ),
    out: Path = typer.Option(..., "--out", help="Output directory for history and checkpoints"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """
    Train the preconditioner model by minimizing kappa(A M^-1).

    Writes history.csv, epoch_<k>.ckpt and best.ckpt into the output
    directory.

    Example:
        precondnet train --data train.pmd --val val.pmd \\
            --epochs 64 --lr 1e-3 --seed 0 --out runs/desk
    """
    set_verbose(verbose)
    console.print("[bold blue]precondnet - Training[/bold blue]")

    try:
        config = resolve_config(config_file, epochs=epochs, lr=lr, seed=seed, batch=batch)
    except (ValidationError, ValueError, OSError) as e:
        raise fail(f"invalid training configuration: {e}") from None

    try:
        train_set = load_dataset(data)
        val_set = load_dataset(val)
    except (FileNotFoundError, PrecondNetError) as e:
        raise fail(str(e)) from None
    if not train_set:
        raise fail(f"training set {data} is empty")
    console.print(f"Training samples: {len(train_set)}, validation samples: {len(val_set)}")

    progress = Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=console,
    )
    with progress:
        task = progress.add_task("Training...", total=config.epochs)

        def on_epoch(epoch: int, train_loss: float, val_loss: float) -> None:
            progress.update(
                task,
                advance=1,
                description=f"Training (train {train_loss:.3f}, val {val_loss:.3f})",
            )

        try:
            _, history = run_training(train_set, val_set, config, out_dir=out, on_epoch=on_epoch)
        except (PrecondNetError, ValueError) as e:
            logger.exception("Training failed")
            raise fail(str(e)) from None

    console.print("\n[bold green]Training complete![/bold green]")
    console.print(
        f"Final loss: train {history.train_loss[-1]:.4f}, val {history.val_loss[-1]:.4f}"
    )
    if history.skipped_steps:
        console.print(f"[yellow]Skipped degenerate steps: {history.skipped_steps}[/yellow]")
    console.print(f"History: {out / HISTORY_FILE}")
    console.print(f"Best checkpoint: {out / BEST_CHECKPOINT}")
