"""Adam optimizer with bias correction, as a pure state transition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.exceptions import DimensionMismatchError, NonFiniteGradientError
from ..model.network import CnnParams


@dataclass(frozen=True, eq=False)
class AdamState:
    """Step count, first/second moments per tensor and hyperparameters."""

    t: int
    m: CnnParams
    v: CnnParams
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"step count must be >= 0, got {self.t}")
        if any(np.any(v < 0) for _, v in self.v.items()):
            raise ValueError("second moments must be non-negative")

    @classmethod
    def initial(
        cls, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ) -> AdamState:
        return cls(t=0, m=CnnParams.zeros(), v=CnnParams.zeros(), lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(
    state: AdamState, params: CnnParams, grads: CnnParams
) -> tuple[CnnParams, AdamState]:
    """
    One bias-corrected Adam update.

    m <- b1 m + (1 - b1) g, v <- b2 v + (1 - b2) g^2,
    p <- p - lr * m_hat / (sqrt(v_hat) + eps).

    Raises:
        NonFiniteGradientError: If a gradient tensor holds NaN or inf
        DimensionMismatchError: If a gradient shape differs from its parameter
    """
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise DimensionMismatchError(
                f"gradient {name} has shape {g.shape}, parameter has {params[name].shape}"
            )
        if not np.isfinite(g).all():
            raise NonFiniteGradientError(f"non-finite gradient in tensor {name}")

    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m = state.m.map(lambda name, m_old: b1 * m_old + (1.0 - b1) * grads[name])
    v = state.v.map(lambda name, v_old: b2 * v_old + (1.0 - b2) * grads[name] ** 2)
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    updated = params.map(
        lambda name, p: p - state.lr * (m[name] / c1) / (np.sqrt(v[name] / c2) + state.eps)
    )
    new_state = AdamState(
        t=t, m=m, v=v, lr=state.lr, beta1=b1, beta2=b2, eps=state.eps
    )
    return updated, new_state
