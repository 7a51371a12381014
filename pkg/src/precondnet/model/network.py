"""
The six-layer fully convolutional model f: A -> raw factor map.

Architecture (fixed):

    encode_input(A)            2 channels
    conv 1x1  2 -> 8,  PReLU
    conv 2x2  8 -> 16, PReLU
    conv 2x2 16 -> 32, PReLU
    conv 2x2 32 -> 16, PReLU
    conv 2x2 16 -> 8,  PReLU
    conv 1x1  8 -> 1

Parameters are stored by name (``conv_0`` .. ``conv_5``, ``prelu_0`` ..
``prelu_4``) so that optimizers and checkpoints can walk them uniformly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from ..core.sparse import CsrMatrix
from .feature_map import FeatureMap, encode_input
from .layers import ConvPlan, conv_apply, conv_backward, plan_conv, prelu_backward, prelu_values

logger = logging.getLogger(__name__)

KERNEL_SIZES = (1, 2, 2, 2, 2, 1)
CHANNELS = (2, 8, 16, 32, 16, 8, 1)
N_CONV = len(KERNEL_SIZES)
N_PRELU = N_CONV - 1
INITIAL_SLOPE = 0.25
INIT_NOISE = 0.1
DIAGONAL_GAIN = 0.125
# encode_input puts diag(A) in channel 1.
DIAGONAL_CHANNEL = 1

# Four 2x2 layers, each spreading support by one pixel down and right.
RECEPTIVE_REACH = sum(k - 1 for k in KERNEL_SIZES)


def conv_name(layer: int) -> str:
    return f"conv_{layer}"


def prelu_name(layer: int) -> str:
    return f"prelu_{layer}"


def parameter_shapes() -> dict[str, tuple[int, ...]]:
    """Expected tensor shapes in canonical order (kernels first, then slopes)."""
    shapes: dict[str, tuple[int, ...]] = {}
    for layer, k in enumerate(KERNEL_SIZES):
        shapes[conv_name(layer)] = (CHANNELS[layer + 1], CHANNELS[layer], k, k)
    for layer in range(N_PRELU):
        shapes[prelu_name(layer)] = (1,)
    return shapes


def architecture_string() -> str:
    """Compact description, e.g. ``k=1,2,2,2,2,1 c=2,8,16,32,16,8,1``."""
    kernels = ",".join(str(k) for k in KERNEL_SIZES)
    channels = ",".join(str(c) for c in CHANNELS)
    return f"k={kernels} c={channels}"


@dataclass(frozen=True, eq=False)
class CnnParams:
    """
    Named parameter tensors of the model.

    Gradients (GradientSet) and Adam moments use the same container, which
    keeps them shape-congruent with the parameters by construction.
    """

    tensors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        """Check names and shapes against the fixed architecture."""
        expected = parameter_shapes()
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise ValueError(f"parameter names differ: missing={missing} extra={extra}")
        ordered = {}
        for name, shape in expected.items():
            array = np.array(self.tensors[name], dtype=np.float64)
            if array.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {array.shape}")
            array.setflags(write=False)
            ordered[name] = array
        object.__setattr__(self, "tensors", ordered)

    @classmethod
    def zeros(cls) -> CnnParams:
        return cls({name: np.zeros(shape) for name, shape in parameter_shapes().items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.tensors.items())

    def kernel(self, layer: int) -> np.ndarray:
        return self.tensors[conv_name(layer)]

    def slope(self, layer: int) -> float:
        return float(self.tensors[prelu_name(layer)][0])

    @property
    def size(self) -> int:
        """Total number of scalar parameters."""
        return sum(t.size for t in self.tensors.values())

    def map(self, fn: Callable[[str, np.ndarray], np.ndarray]) -> CnnParams:
        """New container with ``fn(name, tensor)`` applied to every tensor."""
        return CnnParams({name: fn(name, t) for name, t in self.tensors.items()})

    def replace(self, **updates: np.ndarray) -> CnnParams:
        return CnnParams({**self.tensors, **updates})

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors.values())

    def equals(self, other: CnnParams) -> bool:
        """Bitwise equality of every tensor."""
        return all(np.array_equal(t, other[name]) for name, t in self.tensors.items())


def init_params(rng: np.random.Generator) -> CnnParams:
    """
    Draw initial parameters.

    Kernels are i.i.d. uniform in [-s, s] with s = INIT_NOISE / sqrt(fan_in),
    fan_in = in_channels * k * k, added to a pass-through of the diagonal
    input channel: conv_0 copies it into channel 0, every 2x2 layer forwards
    channel 0 through its (1, 1) tap (which reads the same pixel) and the
    last layer scales it by DIAGONAL_GAIN. A Poisson diagonal of 4 therefore
    starts as a raw diagonal near 0.5, far above the clamp, and M^-1 starts
    close to a multiple of the identity. PReLU slopes start at 0.25.
    """
    tensors: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes().items():
        if name.startswith("prelu"):
            tensors[name] = np.full(shape, INITIAL_SLOPE)
        else:
            _, fan_in_channels, k, _ = shape
            s = INIT_NOISE / np.sqrt(fan_in_channels * k * k)
            tensors[name] = rng.uniform(-s, s, size=shape)

    tensors[conv_name(0)][0, DIAGONAL_CHANNEL, 0, 0] += 1.0
    for layer in range(1, N_CONV - 1):
        tensors[conv_name(layer)][0, 0, 1, 1] += 1.0
    tensors[conv_name(N_CONV - 1)][0, 0, 0, 0] += DIAGONAL_GAIN
    return CnnParams(tensors)


@dataclass(frozen=True, eq=False)
class ForwardTape:
    """
    Values recorded by a forward pass for the backward pass.

    ``inputs[l]`` is the input of conv layer l, ``pre_activations[l]`` the
    output of conv layer l before PReLU l.
    """

    plans: tuple[ConvPlan, ...]
    inputs: tuple[np.ndarray, ...]
    pre_activations: tuple[np.ndarray, ...]


def model_forward_with_tape(params: CnnParams, A: CsrMatrix) -> tuple[FeatureMap, ForwardTape]:
    """Forward pass that also records what the backward pass needs."""
    x = encode_input(A)
    plans: list[ConvPlan] = []
    inputs: list[np.ndarray] = []
    pre_activations: list[np.ndarray] = []

    for layer in range(N_CONV):
        plan = plan_conv(x, KERNEL_SIZES[layer])
        y = conv_apply(params.kernel(layer), x.values, plan)
        plans.append(plan)
        inputs.append(x.values)
        if layer < N_PRELU:
            pre_activations.append(y)
            y = prelu_values(params.slope(layer), y)
        x = FeatureMap(A.n_rows, A.n_cols, plan.out_rows, plan.out_cols, y)

    return x, ForwardTape(tuple(plans), tuple(inputs), tuple(pre_activations))


def model_forward(params: CnnParams, A: CsrMatrix) -> FeatureMap:
    """
    Evaluate f(A): single-channel n x n raw factor map.

    The same parameters apply to any matrix size.

    Raises:
        ValueError: If A is not square or smaller than 2 x 2
    """
    if A.n_rows < 2:
        raise ValueError(f"model_forward needs n >= 2, got {A.n_rows}")
    raw, _ = model_forward_with_tape(params, A)
    return raw


def model_backward(
    params: CnnParams, tape: ForwardTape, grad_raw: np.ndarray
) -> dict[str, np.ndarray]:
    """
    Backpropagate d loss / d raw (shape (1, output sites)) to every parameter.

    Returns:
        Gradient tensor per parameter name
    """
    grads: dict[str, np.ndarray] = {}
    g = np.asarray(grad_raw, dtype=np.float64)
    for layer in reversed(range(N_CONV)):
        g_in, grads[conv_name(layer)] = conv_backward(
            params.kernel(layer), tape.inputs[layer], tape.plans[layer], g
        )
        if layer > 0:
            g, g_slope = prelu_backward(
                params.slope(layer - 1), tape.pre_activations[layer - 1], g_in
            )
            grads[prelu_name(layer - 1)] = np.array([g_slope])
    return grads
