"""
CLI for benchmarking preconditioners.

Usage:
    precondnet eval --data test.pmd --methods vanilla,jacobi,ic0,amg,learned \\
        --model runs/a/best.ckpt --summary out.csv --residual-dir residuals
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.progress import track
from rich.table import Table

from ..bench.evaluate import Method, evaluate_method
from ..bench.summary import (
    audit_frame,
    summarize_frame,
    write_audit_csv,
    write_residual_csvs,
    write_summary_csv,
)
from ..core.config import SolverConfig
from ..core.exceptions import PrecondNetError
from ..krylov.solvers import SolveReport
from ..model.checkpoint import load_checkpoint
from ..model.network import CnnParams
from ..poisson.dataset import load_dataset
from .common import console, fail, set_verbose

logger = logging.getLogger(__name__)


def evaluate(
    data: Path = typer.Option(..., "--data", help="Dataset to evaluate (PMD1)"),
    methods: str = typer.Option(
        "vanilla,jacobi,ic0,amg,learned", "--methods", help="Comma-separated methods"
    ),
    model: Optional[Path] = typer.Option(None, "--model", help="Checkpoint for 'learned'"),
    tol: float = typer.Option(1e-6, "--tol", help="Relative residual tolerance"),
    max_iter: int = typer.Option(10000, "--max-iter", help="Iteration cap"),
    summary: Path = typer.Option(Path("summary.csv"), "--summary", help="Summary CSV"),
    residual_dir: Optional[Path] = typer.Option(
        None, "--residual-dir", help="Directory for per-sample residual CSVs"
    ),
    audit: Optional[Path] = typer.Option(None, "--audit", help="Per-sample audit CSV"),
    no_timings: bool = typer.Option(
        False,
        "--no-timings",
        help="Write time columns as 0; reruns are byte-identical only with this flag",
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """
    Solve every sample with every method and write summary tables.

    Exits with code 1 if any sample of any method failed; failed samples are
    excluded from the summary of every method. Reruns give byte-identical
    summary and audit files only with --no-timings.

    Example:
        precondnet eval --data test.pmd --methods vanilla,ic0,learned \\
            --model runs/desk/best.ckpt --tol 1e-6 --max-iter 10000 \\
            --summary out.csv --residual-dir residuals
    """
    set_verbose(verbose)
    console.print("[bold blue]precondnet - Evaluation[/bold blue]")

    try:
        selected = Method.parse_list(methods)
        solver = SolverConfig(tol=tol, max_iter=max_iter)
    except ValueError as e:
        raise fail(str(e)) from None

    params: Optional[CnnParams] = None
    if Method.LEARNED in selected:
        if model is None:
            raise fail("method 'learned' requires --model")
        try:
            params = load_checkpoint(model)
        except (FileNotFoundError, PrecondNetError) as e:
            raise fail(str(e)) from None

    try:
        samples = load_dataset(data)
    except (FileNotFoundError, PrecondNetError) as e:
        raise fail(str(e)) from None
    console.print(f"Samples: {len(samples)}, methods: {', '.join(selected)}")

    reports: dict[str, list[SolveReport]] = {m.value: [] for m in selected}
    failed: set[str] = set()
    for method in selected:
        for sample in track(samples, description=f"Evaluating {method}...", console=console):
            try:
                reports[method.value].append(evaluate_method(sample, method, params, solver))
            except PrecondNetError as e:
                logger.exception(f"{method} failed on sample {sample.sample_id}: {e}")
                failed.add(sample.sample_id)

    if failed:
        reports = {
            m: [r for r in rs if r.sample_id not in failed] for m, rs in reports.items()
        }

    frame = audit_frame(reports, timings=not no_timings)
    summaries = summarize_frame(frame)
    summary.parent.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summaries, summary)
    if audit is not None:
        audit.parent.mkdir(parents=True, exist_ok=True)
        write_audit_csv(frame, audit)
    if residual_dir is not None:
        write_residual_csvs(reports, residual_dir)

    table = Table(title="Method summary")
    for column in ("method", "time [ms]", "iter", "kappa", "density"):
        table.add_column(column)
    for s in summaries:
        table.add_row(
            s.method, f"{s.time_ms:.2f}", f"{s.iterations:.2f}", f"{s.kappa:.3f}", f"{s.density:.5f}"
        )
    console.print(table)
    console.print(f"Summary saved to: {summary}")

    if failed:
        console.print(f"[bold red]Error:[/bold red] {len(failed)} sample(s) failed")
        raise typer.Exit(1)
    console.print("[bold green]Evaluation complete![/bold green]")
