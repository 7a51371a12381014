"""
Training loop for the learned preconditioner.

Each epoch shuffles the training samples (seeded), groups them into batches
of equal matrix size, averages the batch gradients in a fixed order and takes
one Adam step per batch. Validation loss is computed without updates after
every epoch and the parameters with the lowest validation loss are kept.

Key Features:
- Deterministic for a fixed seed and configuration (single-threaded)
- Best-of-k initialization on the first batch
- Degenerate-spectrum steps skipped and counted instead of aborting
- history.csv, epoch_<k>.ckpt and best.ckpt written to an output directory
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.config import FLOAT_FORMAT, TrainConfig
from ..core.exceptions import DegenerateSpectrumError, PrecondNetError, TrainingError
from ..model.checkpoint import save_checkpoint
from ..model.network import CnnParams, init_params
from ..poisson.assembly import PoissonSample
from .adam import AdamState, adam_step
from .loss import kappa_loss, kappa_loss_and_grad

logger = logging.getLogger(__name__)

HISTORY_FILE = "history.csv"
BEST_CHECKPOINT = "best.ckpt"

EpochCallback = Callable[[int, float, float], None]


@dataclass
class TrainHistory:
    """Per-epoch mean training and validation losses."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    skipped_steps: int = 0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epoch": np.arange(1, self.epochs + 1),
                "train_loss": self.train_loss,
                "val_loss": self.val_loss,
            }
        )

    def write_csv(self, path: Path) -> None:
        """Write ``epoch,train_loss,val_loss`` with round-trip precision."""
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def make_batches(samples: Sequence[PoissonSample], batch: int) -> list[list[PoissonSample]]:
    """
    Group samples of equal size into batches of at most ``batch``.

    Batches are emitted as soon as they fill up, in sample order; partial
    batches follow in order of first appearance of their size.
    """
    batches: list[list[PoissonSample]] = []
    open_batches: dict[int, list[PoissonSample]] = {}
    for sample in samples:
        bucket = open_batches.setdefault(sample.n, [])
        bucket.append(sample)
        if len(bucket) == batch:
            batches.append(bucket)
            open_batches[sample.n] = []
    batches.extend(bucket for bucket in open_batches.values() if bucket)
    return batches


def _checked_loss(loss: float, sample_id: str) -> float:
    if not loss >= 1.0:
        raise TrainingError(f"loss {loss!r} below 1 on sample {sample_id}")
    return loss


def mean_loss(params: CnnParams, samples: Sequence[PoissonSample]) -> float:
    """Mean kappa loss over samples, no gradients."""
    if not samples:
        return math.nan
    total = 0.0
    for sample in samples:
        try:
            loss = kappa_loss(sample.matrix, params, sample.sample_id)
        except PrecondNetError as e:
            raise TrainingError(f"sample {sample.sample_id} failed: {e}") from e
        total += _checked_loss(loss, sample.sample_id)
    return total / len(samples)


def select_initial_params(
    batch: Sequence[PoissonSample], rng: np.random.Generator, candidates: int = 8
) -> CnnParams:
    """
    Draw ``candidates`` parameter sets and keep the one with the lowest mean
    loss on ``batch``.

    Raises:
        TrainingError: If every candidate fails on the batch
    """
    best: Optional[CnnParams] = None
    best_loss = math.inf
    for k in range(candidates):
        params = init_params(rng)
        try:
            loss = mean_loss(params, batch)
        except TrainingError as e:
            logger.debug(f"Initial candidate {k} rejected: {e}")
            continue
        if loss < best_loss:
            best, best_loss = params, loss
    if best is None:
        raise TrainingError("no initial parameter candidate produced a finite loss")
    logger.info(f"Selected initial parameters with first-batch loss {best_loss:.4f}")
    return best


def _batch_step(
    params: CnnParams, batch: Sequence[PoissonSample], history: TrainHistory
) -> tuple[list[float], Optional[CnnParams]]:
    """Losses of the batch samples and their averaged gradient (None if all skipped)."""
    losses: list[float] = []
    total: Optional[dict[str, np.ndarray]] = None
    used = 0
    for sample in batch:
        try:
            loss, grads = kappa_loss_and_grad(sample.matrix, params, sample.sample_id)
        except DegenerateSpectrumError as e:
            logger.warning(f"Skipping gradient of sample {sample.sample_id}: {e}")
            history.skipped_steps += 1
            losses.append(mean_loss(params, [sample]))
            continue
        except PrecondNetError as e:
            raise TrainingError(f"sample {sample.sample_id} failed: {e}") from e
        losses.append(_checked_loss(loss, sample.sample_id))
        if total is None:
            total = {name: g.copy() for name, g in grads.items()}
        else:
            for name, g in grads.items():
                total[name] += g
        used += 1
    if total is None:
        return losses, None
    return losses, CnnParams({name: g / used for name, g in total.items()})


def train(
    train_set: Sequence[PoissonSample],
    val_set: Sequence[PoissonSample],
    config: Optional[TrainConfig] = None,
    out_dir: Optional[Path] = None,
    on_epoch: Optional[EpochCallback] = None,
) -> tuple[CnnParams, TrainHistory]:
    """
    Train the model by minimizing the mean kappa loss.

    Args:
        train_set: Training samples (non-empty)
        val_set: Validation samples; if empty, selection uses the training loss
        config: Hyperparameters (defaults of TrainConfig if None)
        out_dir: Where to write history.csv and checkpoints (optional)
        on_epoch: Called as on_epoch(epoch, train_loss, val_loss)

    Returns:
        (best-validation parameters, history)

    Raises:
        TrainingError: If a sample fails or a loss drops below 1
    """
    if not train_set:
        raise ValueError("train needs a non-empty training set")
    config = config or TrainConfig()
    rng = np.random.default_rng(config.seed)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    params = select_initial_params(
        make_batches(train_set, config.batch)[0], rng, config.init_candidates
    )
    state = AdamState.initial(config.lr, config.beta1, config.beta2, config.eps)
    history = TrainHistory()
    best_params, best_score = params, math.inf

    logger.info(
        f"Training on {len(train_set)} samples ({len(val_set)} validation), "
        f"{config.epochs} epochs, batch {config.batch}, {params.size} parameters"
    )
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_set))
        epoch_losses: list[float] = []
        for batch in make_batches([train_set[k] for k in order], config.batch):
            losses, grads = _batch_step(params, batch, history)
            epoch_losses.extend(losses)
            if grads is not None:
                params, state = adam_step(state, params, grads)

        train_loss = float(np.mean(epoch_losses))
        val_loss = mean_loss(params, val_set)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        logger.info(f"Epoch {epoch}/{config.epochs}: train {train_loss:.4f}, val {val_loss:.4f}")

        score = val_loss if val_set else train_loss
        improved = score < best_score
        if improved:
            best_params, best_score = params, score

        if out_dir is not None:
            history.write_csv(out_dir / HISTORY_FILE)
            if config.checkpoint_every and epoch % config.checkpoint_every == 0:
                save_checkpoint(params, out_dir / f"epoch_{epoch}.ckpt")
            if improved:
                save_checkpoint(best_params, out_dir / BEST_CHECKPOINT)
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)

    if history.skipped_steps:
        logger.warning(f"{history.skipped_steps} degenerate gradient steps were skipped")
    return best_params, history
