"""
Condition-number loss and its exact gradient.

loss(A) = kappa(A M^-1) with M^-1 = F F^T assembled from the model output.
The backward pass chains, in order:

    dk/dB   = (u_max v_max^T s_min - s_max u_min v_min^T) / s_min^2
    dk/dM   = A^T dk/dB
    dk/dF   = (dk/dM + dk/dM^T) F
    dk/draw = dk/dF on strictly lower sites, dk/dF on unclamped diagonal
              sites, 0 on clamped diagonal and upper sites
    dk/dparams via model_backward

The singular value derivatives assume simple extremes; a near-repeated
extreme raises DegenerateSpectrumError.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..core.config import check_dense_cap
from ..core.exceptions import DegenerateSpectrumError
from ..core.sparse import CsrMatrix
from ..krylov.spectral import SpectralInfo, condition_number
from ..model.feature_map import FeatureMap
from ..model.network import CnnParams, model_backward, model_forward_with_tape
from ..model.spd import SpdFactors, spd_assemble

logger = logging.getLogger(__name__)

# Gradients live in the same named container as the parameters.
GradientSet = CnnParams

DEGENERACY_GAP = 1e-10
FD_FLOOR = 1e-300


def _spectrum(A: CsrMatrix, factors: SpdFactors, sample_id: Optional[str]) -> tuple[SpectralInfo, np.ndarray]:
    check_dense_cap(A.n_rows, "kappa loss workspace")
    F = factors.factor.to_dense()
    B = A.to_dense() @ (F @ F.T)
    return condition_number(B, sample_id), F


def kappa_loss(A: CsrMatrix, params: CnnParams, sample_id: Optional[str] = None) -> float:
    """Loss only: kappa(A M^-1) for the model's preconditioner."""
    raw, _ = model_forward_with_tape(params, A)
    return raw_loss(A, raw, sample_id)


def raw_loss(A: CsrMatrix, raw: FeatureMap, sample_id: Optional[str] = None) -> float:
    """kappa(A M^-1) for a given raw map."""
    info, _ = _spectrum(A, spd_assemble(raw), sample_id)
    return info.kappa


def _check_simple_extremes(info: SpectralInfo, sample_id: Optional[str]) -> None:
    s = info.singular_values
    if s is None or s.size < 2:
        return
    threshold = DEGENERACY_GAP * s[0]
    where = f" (sample {sample_id})" if sample_id is not None else ""
    if s[0] - s[1] < threshold:
        raise DegenerateSpectrumError(f"sigma_max is (nearly) repeated{where}")
    if s[-2] - s[-1] < threshold:
        raise DegenerateSpectrumError(f"sigma_min is (nearly) repeated{where}")


def kappa_loss_and_grad(
    A: CsrMatrix, params: CnnParams, sample_id: Optional[str] = None
) -> tuple[float, GradientSet]:
    """
    Loss kappa(A M^-1) and its gradient with respect to every parameter.

    Args:
        A: SPD system matrix (n within the dense cap)
        params: Model parameters
        sample_id: Carried into error messages

    Returns:
        (loss, gradients shaped like params)

    Raises:
        NumericallySingularError: If A M^-1 is numerically singular
        DegenerateSpectrumError: If sigma_max or sigma_min is repeated
    """
    raw, tape = model_forward_with_tape(params, A)
    kappa, grad_raw = raw_loss_and_grad(A, raw, sample_id)
    grads = model_backward(params, tape, grad_raw)
    return kappa, CnnParams(grads)


def raw_loss_and_grad(
    A: CsrMatrix, raw: FeatureMap, sample_id: Optional[str] = None
) -> tuple[float, np.ndarray]:
    """
    Loss kappa(A M^-1) and its gradient with respect to the raw map values.

    The gradient is zero on upper sites and on clamped diagonal sites.

    Returns:
        (loss, gradient shaped like ``raw.values``)

    Raises:
        NumericallySingularError: If A M^-1 is numerically singular
        DegenerateSpectrumError: If sigma_max or sigma_min is repeated
    """
    factors = spd_assemble(raw)
    info, F = _spectrum(A, factors, sample_id)
    _check_simple_extremes(info, sample_id)

    s_max, s_min = info.sigma_max, info.sigma_min
    grad_B = (
        np.outer(info.u_max, info.v_max) * s_min - s_max * np.outer(info.u_min, info.v_min)
    ) / (s_min * s_min)
    grad_M = A.scipy.T @ grad_B
    grad_F = (grad_M + grad_M.T) @ F

    rows, cols = raw.rows, raw.cols
    site_grad = grad_F[rows, cols]
    on_diag = rows == cols
    unclamped = factors.diag_raw[rows] > factors.epsilon
    keep = (rows > cols) | (on_diag & unclamped)
    return info.kappa, np.where(keep, site_grad, 0.0)[None, :]


def finite_diff_check(
    params: CnnParams,
    A: CsrMatrix,
    h: float = 1e-6,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Compare analytic gradients with central differences.

    Args:
        params: Parameters at which to check
        A: System matrix (small, n <= 32 keeps this quick)
        h: Finite-difference step
        max_entries: If set, check only this many randomly chosen entries
        rng: Generator used for the entry sample (default seed 0)

    Returns:
        max |g - g_fd| / max(max |g_fd|, 1e-300) over the checked entries
    """
    _, grads = kappa_loss_and_grad(A, params)
    positions = [
        (name, index) for name, tensor in params.items() for index in np.ndindex(tensor.shape)
    ]
    if max_entries is not None and max_entries < len(positions):
        rng = rng if rng is not None else np.random.default_rng(0)
        chosen = np.sort(rng.choice(len(positions), size=max_entries, replace=False))
        positions = [positions[k] for k in chosen]

    analytic = np.empty(len(positions))
    numeric = np.empty(len(positions))
    for k, (name, index) in enumerate(positions):
        base = params[name]
        plus, minus = base.copy(), base.copy()
        plus[index] += h
        minus[index] -= h
        loss_plus = kappa_loss(A, params.replace(**{name: plus}))
        loss_minus = kappa_loss(A, params.replace(**{name: minus}))
        numeric[k] = (loss_plus - loss_minus) / (2.0 * h)
        analytic[k] = grads[name][index]

    if not positions:
        return 0.0
    error = float(np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), FD_FLOOR))
    logger.debug(f"Finite-difference check on {len(positions)} entries, h={h:g}: {error:.3e}")
    return error
