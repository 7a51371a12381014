"""Condition-number loss, Adam and the training loop."""

from .adam import AdamState, adam_step
from .loss import GradientSet, finite_diff_check, kappa_loss, kappa_loss_and_grad
from .trainer import TrainHistory, make_batches, mean_loss, select_initial_params, train

__all__ = [
    "AdamState",
    "GradientSet",
    "TrainHistory",
    "adam_step",
    "finite_diff_check",
    "kappa_loss",
    "kappa_loss_and_grad",
    "make_batches",
    "mean_loss",
    "select_initial_params",
    "train",
]
