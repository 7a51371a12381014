"""Tests for the kappa loss, its gradient, Adam and the training loop."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from precondnet.bench.evaluate import (
    DENSITY_RATIO_LIMIT,
    Method,
    build_learned,
    evaluate_method,
    factor_density_ratio,
)
from precondnet.core.config import TrainConfig
from precondnet.core.exceptions import NonFiniteGradientError
from precondnet.core.sparse import CsrMatrix
from precondnet.krylov.spectral import condition_number
from precondnet.model.checkpoint import load_checkpoint
from precondnet.model.feature_map import FeatureMap
from precondnet.model.network import CnnParams, init_params, model_forward, parameter_shapes
from precondnet.model.spd import spd_assemble
from precondnet.poisson.assembly import PoissonSample, assemble_poisson, generate_samples
from precondnet.poisson.grid import OccupancyGrid
from precondnet.training import (
    AdamState,
    TrainHistory,
    adam_step,
    finite_diff_check,
    kappa_loss,
    kappa_loss_and_grad,
    make_batches,
    mean_loss,
    train,
)
from precondnet.training.loss import raw_loss, raw_loss_and_grad
from precondnet.training.trainer import BEST_CHECKPOINT, HISTORY_FILE


def _raw_map(dense: np.ndarray) -> FeatureMap:
    rows, cols = np.nonzero(np.ones_like(dense, dtype=bool))
    return FeatureMap(dense.shape[0], dense.shape[1], rows, cols, dense.reshape(1, -1))


def _constant(value: float) -> CnnParams:
    return CnnParams({name: np.full(shape, value) for name, shape in parameter_shapes().items()})


class TestKappaLoss:
    def test_matches_condition_number(self, params: CnnParams, grid3_poisson: CsrMatrix) -> None:
        minv = spd_assemble(model_forward(params, grid3_poisson)).minv_dense()
        expected = condition_number(grid3_poisson.to_dense() @ minv).kappa
        assert kappa_loss(grid3_poisson, params) == pytest.approx(expected, rel=1e-12)

    def test_zero_params_give_kappa_of_a(self, grid3_poisson: CsrMatrix) -> None:
        loss, grads = kappa_loss_and_grad(grid3_poisson, CnnParams.zeros())
        assert loss == pytest.approx(condition_number(grid3_poisson.to_dense()).kappa, rel=1e-10)
        assert all(not np.any(g) for _, g in grads.items())

    def test_loss_at_least_one(self, params: CnnParams, small_samples) -> None:
        for sample in small_samples:
            assert kappa_loss(sample.matrix, params) >= 1.0

    def test_gradient_shapes(self, params: CnnParams, grid3_poisson: CsrMatrix) -> None:
        _, grads = kappa_loss_and_grad(grid3_poisson, params)
        for name, g in grads.items():
            assert g.shape == params[name].shape
        assert grads.all_finite()


class TestFiniteDifference:
    def test_zero_params(self, grid3_poisson: CsrMatrix) -> None:
        assert finite_diff_check(CnnParams.zeros(), grid3_poisson) == 0.0

    def test_random_params_sampled(self, params: CnnParams, grid3_poisson: CsrMatrix) -> None:
        error = finite_diff_check(
            params, grid3_poisson, max_entries=40, rng=np.random.default_rng(4)
        )
        assert error < 1e-5

    def test_generated_sample(self, params: CnnParams) -> None:
        sample = generate_samples(4, 4, 1, 1, seed=17)[0]
        assert finite_diff_check(params, sample.matrix, max_entries=25) < 1e-5

    def test_random_pairs_across_sizes(self) -> None:
        for seed in range(20):
            side = 3 + seed % 3
            A = assemble_poisson(OccupancyGrid.all_fluid(side, side))
            params = init_params(np.random.default_rng(seed))
            error = finite_diff_check(params, A, max_entries=30, rng=np.random.default_rng(seed))
            assert error < 1e-5, f"seed {seed}, n={A.n_rows}: {error:.2e}"

    def test_step_size_sweep(self, params: CnnParams, grid3_poisson: CsrMatrix) -> None:
        errors = {
            h: finite_diff_check(
                params, grid3_poisson, h=h, max_entries=30, rng=np.random.default_rng(1)
            )
            for h in (1e-1, 1e-4, 1e-6)
        }
        assert errors[1e-6] < 1e-5
        assert errors[1e-4] < 1e-3
        assert errors[1e-1] > errors[1e-6]


class TestClampGradient:
    def test_clamped_diagonal_has_zero_gradient(self, grid3_poisson: CsrMatrix) -> None:
        rng = np.random.default_rng(8)
        dense = 0.5 * np.eye(9) + np.tril(rng.uniform(-0.05, 0.05, (9, 9)), -1)
        dense[2, 2] = -0.3
        loss, grad = raw_loss_and_grad(grid3_poisson, _raw_map(dense))
        grad = grad[0].reshape(9, 9)
        assert grad[2, 2] == 0.0
        assert grad[4, 4] != 0.0
        assert not np.any(np.triu(grad, 1))

        bumped = dense.copy()
        bumped[2, 2] = -0.2
        assert raw_loss(grid3_poisson, _raw_map(bumped)) == loss

    def test_raw_gradient_matches_parameter_path(
        self, params: CnnParams, grid3_poisson: CsrMatrix
    ) -> None:
        raw = model_forward(params, grid3_poisson)
        loss, _ = raw_loss_and_grad(grid3_poisson, raw)
        assert loss == kappa_loss(grid3_poisson, params)


class TestAdam:
    def test_zero_gradient_keeps_params(self, params: CnnParams) -> None:
        updated, state = adam_step(AdamState.initial(), params, CnnParams.zeros())
        assert updated.equals(params)
        assert state.t == 1

    def test_first_step_moves_by_lr(self) -> None:
        grads = _constant(0.5).replace(conv_0=np.full((8, 2, 1, 1), -2.0))
        updated, _ = adam_step(AdamState.initial(lr=1e-3), CnnParams.zeros(), grads)
        np.testing.assert_allclose(updated["conv_1"], -1e-3, rtol=1e-6)
        np.testing.assert_allclose(updated["conv_0"], 1e-3, rtol=1e-6)

    def test_deterministic(self, params: CnnParams) -> None:
        grads = _constant(0.1)
        a, _ = adam_step(AdamState.initial(), params, grads)
        b, _ = adam_step(AdamState.initial(), params, grads)
        assert a.equals(b)

    def test_non_finite_gradient(self, params: CnnParams) -> None:
        grads = CnnParams.zeros().replace(prelu_2=np.array([np.nan]))
        with pytest.raises(NonFiniteGradientError, match="prelu_2"):
            adam_step(AdamState.initial(), params, grads)

    def test_state_validation(self) -> None:
        with pytest.raises(ValueError):
            AdamState(t=-1, m=CnnParams.zeros(), v=CnnParams.zeros())


class TestBatches:
    def test_groups_by_size(self) -> None:
        small = generate_samples(4, 4, 3, 0, seed=1)
        large = generate_samples(5, 5, 2, 0, seed=2)
        mixed = [small[0], large[0], small[1], large[1], small[2]]
        batches = make_batches(mixed, 2)
        assert [[s.n for s in b] for b in batches] == [[16, 16], [25, 25], [16]]

    def test_mean_loss_empty_is_nan(self, params: CnnParams) -> None:
        assert np.isnan(mean_loss(params, []))


@pytest.mark.slow
class TestTrain:
    config = TrainConfig(epochs=3, lr=1e-2, seed=3, init_candidates=2)

    def test_runs_and_writes_outputs(self, tmp_path: Path) -> None:
        train_set = generate_samples(6, 6, 4, 1, seed=100)
        val_set = generate_samples(6, 6, 2, 1, seed=200)
        seen: list[int] = []
        best, history = train(
            train_set, val_set, self.config, tmp_path, on_epoch=lambda e, t, v: seen.append(e)
        )
        assert seen == [1, 2, 3]
        assert history.epochs == 3
        assert all(loss >= 1.0 for loss in history.train_loss + history.val_loss)

        frame = pd.read_csv(tmp_path / HISTORY_FILE)
        assert list(frame.columns) == ["epoch", "train_loss", "val_loss"]
        assert frame["epoch"].tolist() == [1, 2, 3]
        for epoch in (1, 2, 3):
            assert (tmp_path / f"epoch_{epoch}.ckpt").exists()

        reloaded = load_checkpoint(tmp_path / BEST_CHECKPOINT)
        assert reloaded.equals(best)
        assert mean_loss(reloaded, val_set) == pytest.approx(min(history.val_loss), rel=1e-12)

    def test_deterministic(self) -> None:
        train_set = generate_samples(5, 5, 3, 1, seed=7)
        first, h1 = train(train_set, [], self.config)
        second, h2 = train(train_set, [], self.config)
        assert first.equals(second)
        assert h1.train_loss == h2.train_loss
        assert all(np.isnan(v) for v in h1.val_loss)

    def test_rejects_empty_training_set(self) -> None:
        with pytest.raises(ValueError):
            train([], [], self.config)


@pytest.mark.slow
class TestTrainedModel:
    @pytest.fixture(scope="class")
    def trained(
        self,
    ) -> tuple[list[PoissonSample], list[PoissonSample], CnnParams, TrainHistory]:
        train_set = generate_samples(8, 8, 10, 2, seed=21)
        val_set = generate_samples(8, 8, 5, 2, seed=22)
        model, history = train(train_set, val_set, TrainConfig(epochs=50, seed=0, init_candidates=2))
        return train_set, val_set, model, history

    def test_training_loss_decreases(self, trained) -> None:
        _, _, _, history = trained
        assert history.epochs == 50
        assert history.train_loss[-1] < history.train_loss[0]

    def test_learned_kappa_below_vanilla(self, trained) -> None:
        _, val_set, model, history = trained
        learned = [evaluate_method(s, Method.LEARNED, model=model) for s in val_set]
        vanilla = [evaluate_method(s, Method.VANILLA) for s in val_set]
        assert all(r.converged for r in learned)
        assert np.mean([r.kappa for r in learned]) == pytest.approx(min(history.val_loss))
        assert np.mean([r.kappa for r in learned]) < np.mean([r.kappa for r in vanilla])
        for report in learned:
            assert report.kappa_sym <= report.kappa * (1 + 1e-8)

    def test_factor_density_within_limit(self, trained) -> None:
        _, val_set, model, _ = trained
        for sample in val_set:
            ratio = factor_density_ratio(sample.matrix, build_learned(sample.matrix, model))
            assert 0.0 < ratio <= DENSITY_RATIO_LIMIT
