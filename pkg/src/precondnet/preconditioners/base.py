"""
Common preconditioner interface.

A Preconditioner is an opaque linear SPD operator v -> M^-1 v plus a density
metric. Explicit operators (identity, Jacobi) and stored factors (IC(0),
learned) know their density up front; implicit operators (AMG) defer it and
are probed column by column.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from ..core.config import check_dense_cap
from ..core.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

PROBE_ZERO_TOL = 1e-14


try:
    from enum import StrEnum
except ImportError:  # Python < 3.11

    class StrEnum(str, enum.Enum):
        """Backport of ``enum.StrEnum``: members are strs; str()/format() give the value."""

        def __str__(self) -> str:
            return str.__str__(self)

        @staticmethod
        def _generate_next_value_(name: str, start: int, count: int, last_values: list) -> str:
            return name.lower()


class PreconditionerKind(StrEnum):
    IDENTITY = "identity"
    JACOBI = "jacobi"
    IC0 = "ic0"
    AMG = "amg"
    LEARNED = "learned"


@dataclass(frozen=True, eq=False)
class Preconditioner:
    """
    Linear SPD operator applying M^-1.

    ``apply`` accepts a vector of length n or an (n, k) block of columns.
    ``density_hint`` is None for implicit operators whose density has to be
    probed. ``info`` carries kind-specific setup facts (IC(0) shift, AMG
    level sizes, ...).
    """

    kind: PreconditionerKind
    n: int
    apply: Callable[[np.ndarray], np.ndarray]
    density_hint: Optional[float] = None
    info: dict[str, Any] = field(default_factory=dict)
    setup_time_ms: float = 0.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim not in (1, 2) or v.shape[0] != self.n:
            raise DimensionMismatchError(
                f"{self.kind} preconditioner of size {self.n} applied to shape {v.shape}"
            )
        return self.apply(v)

    def to_dense(self) -> np.ndarray:
        """Form M^-1 densely by applying it to the identity (cap-checked)."""
        check_dense_cap(self.n, f"dense {self.kind} operator")
        return np.asarray(self(np.eye(self.n)), dtype=np.float64)

    def __repr__(self) -> str:
        return f"Preconditioner(kind={self.kind}, n={self.n})"


def identity_precond(n: int) -> Preconditioner:
    """M^-1 = I (vanilla CG through the PCG code path)."""
    return Preconditioner(
        kind=PreconditionerKind.IDENTITY,
        n=n,
        apply=lambda v: np.array(v, dtype=np.float64, copy=True),
        density_hint=1.0 / n if n else 0.0,
    )


def operator_density(P: Preconditioner, n: Optional[int] = None) -> float:
    """
    Density of the preconditioner operator.

    Explicit operators report nnz / n^2 of what they store. Implicit ones are
    probed on unit vectors, counting entries with |value| > 1e-14.

    Raises:
        DenseCapExceededError: If probing is needed above the dense cap
    """
    if n is not None and n != P.n:
        raise DimensionMismatchError(f"operator has size {P.n}, asked for {n}")
    if P.density_hint is not None:
        return P.density_hint
    dense = P.to_dense()
    nnz = int(np.count_nonzero(np.abs(dense) > PROBE_ZERO_TOL))
    logger.debug(f"Probed {P.kind} operator: {nnz} entries above {PROBE_ZERO_TOL:g}")
    return nnz / dense.size
