"""
Exception hierarchy for precondnet.

Every error raised on purpose by the package derives from PrecondNetError.
Input-validation failures additionally derive from ValueError so that callers
written against plain numpy/scipy conventions keep working.
"""

from __future__ import annotations

from typing import Optional


class PrecondNetError(Exception):
    """Base class for all precondnet errors."""


class DimensionMismatchError(PrecondNetError, ValueError):
    """Operand shapes do not agree."""


class IndexOutOfRangeError(PrecondNetError, ValueError):
    """A coordinate entry lies outside the matrix bounds."""


class SingularFactorError(PrecondNetError):
    """A triangular factor has a zero or negative diagonal entry."""


class NotPositiveDefiniteError(PrecondNetError):
    """A matrix expected to be SPD is not."""


class NumericallySingularError(PrecondNetError):
    """Smallest singular value is below the representable floor."""

    def __init__(self, message: str, sample_id: Optional[str] = None) -> None:
        if sample_id is not None:
            message = f"{message} (sample {sample_id})"
        super().__init__(message)
        self.sample_id = sample_id


class DenseCapExceededError(PrecondNetError, ValueError):
    """A dense spectral workspace would exceed the configured size cap."""


class FactorizationBreakdownError(PrecondNetError):
    """Incomplete factorization kept breaking down after all diagonal shifts."""


class PreconditionerError(PrecondNetError):
    """A preconditioner produced a non-positive r^T M^-1 r."""


class DatasetParseError(PrecondNetError, ValueError):
    """Malformed dataset file."""

    def __init__(self, message: str, line_no: int) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CheckpointError(PrecondNetError, ValueError):
    """Malformed checkpoint file or architecture mismatch."""


class NonFiniteGradientError(PrecondNetError):
    """A gradient tensor contains NaN or infinity."""


class DegenerateSpectrumError(PrecondNetError):
    """Extreme singular values are (nearly) repeated, gradient undefined."""


class TrainingError(PrecondNetError):
    """Training aborted on a failing sample or a violated invariant."""


class SampleMismatchError(PrecondNetError, ValueError):
    """Methods were evaluated on different sample sets."""
