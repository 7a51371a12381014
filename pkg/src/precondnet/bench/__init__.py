"""Benchmark harness: per-sample evaluation and summary tables."""

from .evaluate import Method, build_preconditioner, evaluate_method
from .summary import (
    MethodSummary,
    audit_frame,
    summarize,
    summarize_audit,
    write_audit_csv,
    write_residual_csvs,
    write_summary_csv,
)

__all__ = [
    "Method",
    "MethodSummary",
    "audit_frame",
    "build_preconditioner",
    "evaluate_method",
    "summarize",
    "summarize_audit",
    "write_audit_csv",
    "write_residual_csvs",
    "write_summary_csv",
]
