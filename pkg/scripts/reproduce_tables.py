#!/usr/bin/env python3
"""
Desk-scale benchmark run: train on 16x16 grids, then compare all methods on
held-out 16x16 samples and on unseen 32x32 samples.

Usage:
    python scripts/reproduce_tables.py --out runs/desk --epochs 64
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from precondnet.bench import Method, MethodSummary, evaluate_method, summarize, write_summary_csv
from precondnet.core.config import TrainConfig
from precondnet.krylov.solvers import SolveReport, iteration_ratio
from precondnet.model.network import CnnParams
from precondnet.poisson.assembly import PoissonSample, generate_samples
from precondnet.training import train

console = Console()
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    handlers=[RichHandler(console=console, rich_tracebacks=True)],
)
logger = logging.getLogger(__name__)

METHODS = (Method.VANILLA, Method.JACOBI, Method.IC0, Method.AMG, Method.LEARNED)


def _evaluate(samples: list[PoissonSample], model: CnnParams) -> dict[str, list[SolveReport]]:
    return {
        m.value: [evaluate_method(s, m, model=model) for s in samples] for m in METHODS
    }


def _show(title: str, summaries: list[MethodSummary]) -> None:
    table = Table(title=title)
    for column in ("method", "iter", "kappa", "density"):
        table.add_column(column)
    for s in summaries:
        table.add_row(s.method, f"{s.iterations:.2f}", f"{s.kappa:.3f}", f"{s.density:.5f}")
    console.print(table)


def main(
    out: Path = typer.Option(Path("runs/desk"), "--out", help="Output directory"),
    epochs: int = typer.Option(64, "--epochs", help="Training epochs"),
    train_count: int = typer.Option(100, "--train-count", help="16x16 training samples"),
    test_count: int = typer.Option(20, "--test-count", help="Samples per test set"),
    seed: int = typer.Option(0, "--seed", help="Training seed"),
) -> None:
    """Train once and print the in-distribution and larger-grid tables."""
    out.mkdir(parents=True, exist_ok=True)
    train_set = generate_samples(16, 16, train_count, 3, seed=1)
    val_set = generate_samples(16, 16, test_count, 3, seed=2)
    large_set = generate_samples(32, 32, test_count, 3, seed=3)

    model, history = train(train_set, val_set, TrainConfig(epochs=epochs, seed=seed), out)
    logger.info(f"Best validation loss {min(history.val_loss):.3f}")

    same_size = _evaluate(val_set, model)
    same = summarize(same_size)
    write_summary_csv(same, out / "summary_16.csv")
    _show("16x16 held-out samples", same)

    larger = _evaluate(large_set, model)
    large = summarize(larger)
    write_summary_csv(large, out / "summary_32.csv")
    _show("32x32 unseen samples", large)

    by_method = {s.method: s for s in same}
    ordered = by_method["learned"].kappa < by_method["ic0"].kappa < by_method["vanilla"].kappa
    ratio = iteration_ratio(same_size["learned"], same_size["vanilla"])
    improved = np.mean(
        [lr.kappa < vr.kappa for lr, vr in zip(larger["learned"], larger["vanilla"], strict=True)]
    )
    large_by_method = {s.method: s for s in large}
    large_ratio = iteration_ratio(larger["learned"], larger["vanilla"])

    console.print(f"kappa ordering learned < ic0 < vanilla: {ordered}")
    console.print(f"16x16 iteration ratio learned/vanilla: {ratio:.3f} (target <= 0.67)")
    console.print(f"32x32 samples with reduced kappa: {improved:.0%} (target >= 70%)")
    console.print(f"32x32 iteration ratio learned/vanilla: {large_ratio:.3f} (target <= 0.8)")
    console.print(
        f"32x32 AMG below IC(0) iterations: "
        f"{large_by_method['amg'].iterations < large_by_method['ic0'].iterations}"
    )


if __name__ == "__main__":
    typer.run(main)
