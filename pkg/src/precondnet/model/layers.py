"""
Sparse convolution and PReLU layers with hand-written backward passes.

2x2 kernels are zero-padded by one row on top and one column on the left, so
the output image has the input's size: out(i, j) = sum_{di, dj}
W[:, :, di, dj] x(i - 1 + di, j - 1 + dj). Outputs are computed only at
pixels whose receptive field contains an input site. There are no biases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feature_map import FeatureMap, dilate_keys


@dataclass(frozen=True, eq=False)
class ConvPlan:
    """
    Site bookkeeping of one convolution.

    ``taps`` lists, per kernel tap (di, dj), the index arrays pairing output
    sites with the input sites they read through that tap.
    """

    kernel_size: int
    out_rows: np.ndarray
    out_cols: np.ndarray
    taps: tuple[tuple[int, int, np.ndarray, np.ndarray], ...]


def plan_conv(source: FeatureMap, kernel_size: int) -> ConvPlan:
    """Work out output sites and tap index pairs for a 1x1 or 2x2 kernel."""
    n_in = source.n_sites
    if kernel_size == 1:
        every = np.arange(n_in)
        return ConvPlan(1, source.rows, source.cols, ((0, 0, every, every),))
    if kernel_size != 2:
        raise ValueError(f"Only 1x1 and 2x2 kernels are supported, got {kernel_size}")

    height, width = source.height, source.width
    out_keys = dilate_keys(source.rows, source.cols, height, width, reach=1)
    taps = []
    for a in (0, 1):
        for b in (0, 1):
            r, c = source.rows + a, source.cols + b
            keep = (r < height) & (c < width)
            out_idx = np.searchsorted(out_keys, r[keep] * width + c[keep])
            in_idx = np.flatnonzero(keep)
            taps.append((1 - a, 1 - b, out_idx, in_idx))
    return ConvPlan(2, out_keys // width, out_keys % width, tuple(taps))


def conv_apply(kernel: np.ndarray, values: np.ndarray, plan: ConvPlan) -> np.ndarray:
    """Output values (out_channels, out_sites) of a planned convolution."""
    out = np.zeros((kernel.shape[0], plan.out_rows.size))
    for di, dj, out_idx, in_idx in plan.taps:
        out[:, out_idx] += kernel[:, :, di, dj] @ values[:, in_idx]
    return out


def conv_forward(kernel: np.ndarray, source: FeatureMap) -> FeatureMap:
    """
    Sparse convolution of a feature map.

    Args:
        kernel: (out_channels, in_channels, k, k), k in {1, 2}
        source: Input feature map

    Returns:
        Output feature map of the same spatial size

    Raises:
        ValueError: If the kernel's input channels do not match
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise ValueError(f"kernel must be (out, in, k, k), got {kernel.shape}")
    if kernel.shape[1] != source.channels:
        raise ValueError(
            f"kernel expects {kernel.shape[1]} input channels, map has {source.channels}"
        )
    plan = plan_conv(source, kernel.shape[2])
    return FeatureMap(
        source.height,
        source.width,
        plan.out_rows,
        plan.out_cols,
        conv_apply(kernel, source.values, plan),
    )


def conv_backward(
    kernel: np.ndarray, values: np.ndarray, plan: ConvPlan, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Gradients of a planned convolution.

    Returns:
        (grad wrt input values, grad wrt kernel)
    """
    grad_in = np.zeros_like(values)
    grad_kernel = np.zeros_like(kernel)
    for di, dj, out_idx, in_idx in plan.taps:
        g = grad_out[:, out_idx]
        grad_in[:, in_idx] += kernel[:, :, di, dj].T @ g
        grad_kernel[:, :, di, dj] += g @ values[:, in_idx].T
    return grad_in, grad_kernel


def prelu_values(slope: float, values: np.ndarray) -> np.ndarray:
    return np.where(values > 0, values, slope * values)


def prelu(slope: float, source: FeatureMap) -> FeatureMap:
    """x if x > 0 else slope * x, on the sites only."""
    return source.with_values(prelu_values(slope, source.values))


def prelu_backward(
    slope: float, values: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, float]:
    """
    Gradients of PReLU.

    Returns:
        (grad wrt input values, grad wrt slope)
    """
    positive = values > 0
    grad_in = np.where(positive, grad_out, slope * grad_out)
    grad_slope = float(np.sum(np.where(positive, 0.0, grad_out * values)))
    return grad_in, grad_slope
