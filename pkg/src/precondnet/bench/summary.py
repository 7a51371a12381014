"""
Benchmark tables.

Per-sample SolveReports are flattened into an audit table (one row per method
and sample); method summaries are always computed from that table, so
re-summarizing a persisted audit CSV reproduces the summary CSV byte for
byte.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from ..core.config import FLOAT_FORMAT
from ..core.exceptions import SampleMismatchError
from ..krylov.solvers import SolveReport, write_residual_csv
from ..krylov.spectral import convergence_slope

logger = logging.getLogger(__name__)

AUDIT_COLUMNS = [
    "method",
    "sample_id",
    "n",
    "time_ms",
    "setup_ms",
    "iter",
    "converged",
    "kappa",
    "kappa_sym",
    "density",
    "slope",
]
SUMMARY_COLUMNS = ["method", "time_ms", "iter", "kappa", "density"]


@dataclass(frozen=True, slots=True)
class MethodSummary:
    """Means over one method's samples (NaN if a field is missing for any sample)."""

    method: str
    time_ms: float
    iterations: float
    kappa: float
    density: float
    samples: int


def _optional(value: float | None) -> float:
    return math.nan if value is None else float(value)


def _slope(report: SolveReport) -> float:
    try:
        return convergence_slope(report.residual_history)
    except ValueError:
        return math.nan


def check_same_samples(reports: Mapping[str, Sequence[SolveReport]]) -> None:
    """
    Raise if the methods were not evaluated on the identical sample set.

    Raises:
        SampleMismatchError: Naming the first method that differs
    """
    methods = list(reports)
    if not methods:
        return
    reference = sorted(r.sample_id for r in reports[methods[0]])
    for method in methods[1:]:
        ids = sorted(r.sample_id for r in reports[method])
        if ids != reference:
            raise SampleMismatchError(
                f"methods {methods[0]} and {method} were evaluated on different samples "
                f"({len(reference)} vs {len(ids)})"
            )


def audit_frame(
    reports: Mapping[str, Sequence[SolveReport]], timings: bool = True
) -> pd.DataFrame:
    """
    One row per (method, sample) in evaluation order.

    Args:
        reports: Reports grouped by method name
        timings: If False, time columns are written as 0 (reproducible files)
    """
    check_same_samples(reports)
    rows = []
    for method, method_reports in reports.items():
        for r in method_reports:
            rows.append(
                {
                    "method": method,
                    "sample_id": r.sample_id,
                    "n": r.solution.size,
                    "time_ms": r.wall_time_ms if timings else 0.0,
                    "setup_ms": r.setup_time_ms if timings else 0.0,
                    "iter": r.iterations,
                    "converged": int(r.converged),
                    "kappa": _optional(r.kappa),
                    "kappa_sym": _optional(r.kappa_sym),
                    "density": _optional(r.density),
                    "slope": _slope(r),
                }
            )
    return pd.DataFrame(rows, columns=AUDIT_COLUMNS)


def summarize_frame(audit: pd.DataFrame) -> list[MethodSummary]:
    """Arithmetic means per method, methods in order of first appearance."""
    summaries = []
    for method in pd.unique(audit["method"]):
        rows = audit[audit["method"] == method]
        summaries.append(
            MethodSummary(
                method=str(method),
                time_ms=float(np.mean(rows["time_ms"].to_numpy(dtype=np.float64))),
                iterations=float(np.mean(rows["iter"].to_numpy(dtype=np.float64))),
                kappa=float(np.mean(rows["kappa"].to_numpy(dtype=np.float64))),
                density=float(np.mean(rows["density"].to_numpy(dtype=np.float64))),
                samples=len(rows),
            )
        )
    return summaries


def summarize(
    reports: Mapping[str, Sequence[SolveReport]], timings: bool = True
) -> list[MethodSummary]:
    """
    Summarize reports grouped by method.

    Raises:
        SampleMismatchError: If methods were evaluated on different samples
    """
    return summarize_frame(audit_frame(reports, timings))


def summary_frame(summaries: Sequence[MethodSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [[s.method, s.time_ms, s.iterations, s.kappa, s.density] for s in summaries],
        columns=SUMMARY_COLUMNS,
    )


def write_summary_csv(summaries: Sequence[MethodSummary], path: Path) -> None:
    """Write ``method,time_ms,iter,kappa,density``."""
    summary_frame(summaries).to_csv(
        path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    logger.info(f"Wrote summary of {len(summaries)} methods to {path}")


def write_audit_csv(audit: pd.DataFrame, path: Path) -> None:
    audit.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(audit)} audit rows to {path}")


def read_audit_csv(path: Path) -> pd.DataFrame:
    if not Path(path).exists():
        raise FileNotFoundError(f"Audit file not found: {path}")
    return pd.read_csv(path, dtype={"method": str, "sample_id": str}, float_precision="round_trip")


def summarize_audit(path: Path) -> list[MethodSummary]:
    """Recompute method summaries from a persisted audit CSV."""
    audit = read_audit_csv(path)
    missing = [c for c in AUDIT_COLUMNS if c not in audit.columns]
    if missing:
        raise ValueError(f"Audit file {path} lacks columns: {', '.join(missing)}")
    by_method = {
        str(m): sorted(audit.loc[audit["method"] == m, "sample_id"]) for m in pd.unique(audit["method"])
    }
    reference = next(iter(by_method.values()), [])
    for method, ids in by_method.items():
        if ids != reference:
            raise SampleMismatchError(f"method {method} covers a different sample set in {path}")
    return summarize_frame(audit)


def write_residual_csvs(reports: Mapping[str, Sequence[SolveReport]], directory: Path) -> int:
    """
    Write one ``iteration,residual`` file per method and sample.

    Files are named ``<method>_<sample_id>.csv``.

    Returns:
        Number of files written
    """
    directory.mkdir(parents=True, exist_ok=True)
    count = 0
    for method, method_reports in reports.items():
        for r in method_reports:
            write_residual_csv(r, directory / f"{method}_{r.sample_id}.csv")
            count += 1
    logger.info(f"Wrote {count} residual histories to {directory}")
    return count
