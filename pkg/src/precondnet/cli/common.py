"""Shared console and logging setup for the command-line interface."""

from __future__ import annotations

import logging

import typer
from rich.console import Console
from rich.logging import RichHandler

# Set up rich console
console = Console()

# Configure logging with rich
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    handlers=[RichHandler(console=console, rich_tracebacks=True)],
)


def set_verbose(verbose: bool) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def fail(message: str) -> typer.Exit:
    """Print an error line and return the exit to raise."""
    console.print(f"[bold red]Error:[/bold red] {message}")
    return typer.Exit(1)
