"""
Configuration models and environment overrides.

Run configurations are pydantic models so that values coming from the CLI or
from YAML files are validated in one place. The dense-workspace cap is read
from the environment on every call, which keeps it overridable at runtime.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import DenseCapExceededError

logger = logging.getLogger(__name__)

DENSE_CAP_ENV = "PRECONDNET_DENSE_CAP"
DEFAULT_DENSE_CAP = 4096

# Decimal text with 17 significant digits round-trips IEEE doubles exactly.
FLOAT_FORMAT = "%.17g"


def dense_cap() -> int:
    """
    Return the largest dimension allowed for dense spectral work.

    Reads ``PRECONDNET_DENSE_CAP`` if set, otherwise 4096.

    Raises:
        ValueError: If the environment value is not a positive integer
    """
    raw = os.environ.get(DENSE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{DENSE_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap <= 0:
        raise ValueError(f"{DENSE_CAP_ENV} must be positive, got {cap}")
    return cap


def check_dense_cap(n: int, what: str = "dense workspace") -> None:
    """Raise DenseCapExceededError if an n x n dense workspace is not allowed."""
    cap = dense_cap()
    if n > cap:
        raise DenseCapExceededError(
            f"{what} of size {n} exceeds the dense cap of {cap} "
            f"(set {DENSE_CAP_ENV} to override)"
        )


class SolverConfig(BaseModel):
    """Stopping rule for CG/PCG."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(1e-6, gt=0)
    max_iter: int = Field(10000, ge=1)


class AmgParams(BaseModel):
    """Smoothed-aggregation AMG setup parameters."""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(0.08, ge=0)  # strength threshold
    omega: float = Field(2.0 / 3.0, gt=0, lt=2)  # Jacobi weight on Poisson-like levels
    max_coarse: int = Field(16, ge=1)  # coarsest level solved densely
    max_levels: int = Field(10, ge=2)


class GridConfig(BaseModel):
    """Parameters of a generated Poisson dataset."""

    model_config = ConfigDict(frozen=True)

    height: int = Field(32, ge=2)
    width: int = Field(32, ge=2)
    count: int = Field(10, ge=0)
    obstacles: int = Field(3, ge=0)
    seed: int = Field(0, ge=0)


class TrainConfig(BaseModel):
    """
    Training hyperparameters.

    Defaults: 64 epochs, Adam with lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
    batch of 1 sample.
    """

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(64, ge=1)
    lr: float = Field(1e-3, gt=0)
    seed: int = Field(0, ge=0)
    batch: int = Field(1, ge=1)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    init_candidates: int = Field(8, ge=1)
    checkpoint_every: int = Field(1, ge=0)  # 0 disables epoch_<k>.ckpt files

    @classmethod
    def from_yaml(cls, path: Path) -> TrainConfig:
        """
        Load a training configuration from a YAML mapping.

        Args:
            path: YAML file path

        Returns:
            Validated TrainConfig
        """
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"Config file {path} must contain a mapping")
        logger.info(f"Loaded training config from {path}")
        return cls.model_validate(data)
