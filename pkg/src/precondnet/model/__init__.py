"""Fully convolutional preconditioner model, SPD assembly and checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .feature_map import FeatureMap, encode_input, support_within_dilation
from .layers import conv_forward, prelu
from .network import (
    CHANNELS,
    KERNEL_SIZES,
    RECEPTIVE_REACH,
    CnnParams,
    ForwardTape,
    init_params,
    model_backward,
    model_forward,
    model_forward_with_tape,
)
from .spd import EPSILON, SpdFactors, learned_precond, spd_assemble

__all__ = [
    "CHANNELS",
    "EPSILON",
    "KERNEL_SIZES",
    "RECEPTIVE_REACH",
    "CnnParams",
    "FeatureMap",
    "ForwardTape",
    "SpdFactors",
    "conv_forward",
    "encode_input",
    "init_params",
    "learned_precond",
    "load_checkpoint",
    "model_backward",
    "model_forward",
    "model_forward_with_tape",
    "prelu",
    "save_checkpoint",
    "spd_assemble",
    "support_within_dilation",
]
