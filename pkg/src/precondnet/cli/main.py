"""
precondnet command-line entry point.

Usage:
    precondnet gen   ...   generate Poisson datasets
    precondnet train ...   train the preconditioner model
    precondnet eval  ...   benchmark vanilla CG, Jacobi, IC(0), AMG and learned
"""

from __future__ import annotations

import typer

from .evaluate import evaluate
from .generate import gen
from .train import train

app = typer.Typer(
    help="Learned sparse preconditioners for conjugate gradients",
    no_args_is_help=True,
)
app.command("gen")(gen)
app.command("train")(train)
app.command("eval")(evaluate)


if __name__ == "__main__":
    app()
