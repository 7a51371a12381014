"""Tests for the sparse CNN, its SPD head and checkpoint files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from precondnet.core.exceptions import CheckpointError
from precondnet.core.sparse import CsrMatrix
from precondnet.model.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from precondnet.model.feature_map import FeatureMap, encode_input, support_within_dilation
from precondnet.model.layers import conv_forward, prelu, prelu_backward
from precondnet.model.network import (
    CHANNELS,
    RECEPTIVE_REACH,
    CnnParams,
    architecture_string,
    init_params,
    model_forward,
    parameter_shapes,
)
from precondnet.model.spd import EPSILON, learned_precond, spd_assemble
from precondnet.poisson.assembly import assemble_poisson, generate_samples
from precondnet.poisson.grid import OccupancyGrid


def _single_site(height: int, width: int, row: int, col: int, value: float = 1.0) -> FeatureMap:
    return FeatureMap(height, width, np.array([row]), np.array([col]), np.array([[value]]))


def _uniform_params(rng: np.random.Generator) -> CnnParams:
    """Plain fan-in uniform draws with no diagonal pass-through."""
    tensors = {}
    for name, shape in parameter_shapes().items():
        if name.startswith("prelu"):
            tensors[name] = np.full(shape, 0.25)
        else:
            s = 1.0 / np.sqrt(np.prod(shape[1:]))
            tensors[name] = rng.uniform(-s, s, size=shape)
    return CnnParams(tensors)


def _raw_map(dense: np.ndarray) -> FeatureMap:
    rows, cols = np.nonzero(np.ones_like(dense, dtype=bool))
    return FeatureMap(dense.shape[0], dense.shape[1], rows, cols, dense.reshape(1, -1))


class TestEncodeInput:
    def test_tridiagonal(self, tridiag3: CsrMatrix) -> None:
        dense = encode_input(tridiag3).to_dense()
        np.testing.assert_array_equal(dense[0], [[0, 0, 0], [-1, 0, 0], [0, -1, 0]])
        np.testing.assert_array_equal(dense[1], np.diag([2.0, 2.0, 2.0]))

    def test_identity_has_empty_lower_channel(self) -> None:
        fm = encode_input(CsrMatrix.identity(4))
        assert fm.channels == 2
        assert not np.any(fm.to_dense()[0])
        np.testing.assert_array_equal(fm.to_dense()[1], np.eye(4))

    def test_not_square(self) -> None:
        with pytest.raises(ValueError, match="square"):
            encode_input(CsrMatrix.from_dense(np.ones((2, 3))))


class TestFeatureMap:
    def test_rejects_unsorted_sites(self) -> None:
        with pytest.raises(ValueError, match="sorted"):
            FeatureMap(3, 3, np.array([1, 0]), np.array([0, 0]), np.ones((1, 2)))

    def test_site_and_active_masks(self) -> None:
        fm = FeatureMap(2, 2, np.array([0, 1]), np.array([0, 1]), np.array([[0.0, 2.0]]))
        np.testing.assert_array_equal(fm.site_mask(), np.eye(2, dtype=bool))
        np.testing.assert_array_equal(fm.active_mask(), [[False, False], [False, True]])

    def test_rejects_bad_value_shape(self) -> None:
        with pytest.raises(ValueError, match="shape"):
            FeatureMap(3, 3, np.array([0]), np.array([0]), np.ones((1, 2)))


class TestConvolution:
    def test_zero_kernel_gives_zero_map(self, tridiag3: CsrMatrix) -> None:
        out = conv_forward(np.zeros((4, 2, 2, 2)), encode_input(tridiag3))
        assert out.channels == 4
        assert not np.any(out.values)

    def test_one_by_one_scales(self, tridiag3: CsrMatrix) -> None:
        fm = encode_input(tridiag3)
        kernel = np.zeros((1, 2, 1, 1))
        kernel[0, 1, 0, 0] = 3.0
        out = conv_forward(kernel, fm)
        np.testing.assert_array_equal(out.to_dense()[0], 3.0 * fm.to_dense()[1])

    def test_two_by_two_pads_top_left(self) -> None:
        kernel = np.zeros((1, 1, 2, 2))
        kernel[0, 0, 0, 0] = 1.0
        out = conv_forward(kernel, _single_site(3, 3, 0, 0, 5.0)).to_dense()[0]
        assert out[1, 1] == 5.0
        assert out[0, 0] == 0.0

    def test_channel_mismatch(self, tridiag3: CsrMatrix) -> None:
        with pytest.raises(ValueError, match="input channels"):
            conv_forward(np.ones((1, 3, 1, 1)), encode_input(tridiag3))

    def test_single_pixel_spreads_within_reach(self) -> None:
        fm = _single_site(9, 9, 2, 3)
        for _ in range(RECEPTIVE_REACH):
            fm = conv_forward(np.ones((1, 1, 2, 2)), fm)
        rows, cols = np.nonzero(fm.active_mask())
        assert rows.min() == 2 and rows.max() == 2 + RECEPTIVE_REACH
        assert cols.min() == 3 and cols.max() == 3 + RECEPTIVE_REACH


class TestPrelu:
    def test_values(self) -> None:
        fm = FeatureMap(1, 3, np.zeros(3, dtype=int), np.arange(3), np.array([[-2.0, 0.0, 3.0]]))
        np.testing.assert_array_equal(prelu(0.25, fm).values, [[-0.5, 0.0, 3.0]])

    def test_identity_slope(self) -> None:
        values = np.array([[-1.0, 2.0]])
        fm = FeatureMap(1, 2, np.zeros(2, dtype=int), np.arange(2), values)
        np.testing.assert_array_equal(prelu(1.0, fm).values, values)

    def test_backward(self) -> None:
        grad_in, grad_slope = prelu_backward(0.5, np.array([[-2.0, 3.0]]), np.array([[1.0, 1.0]]))
        np.testing.assert_array_equal(grad_in, [[0.5, 1.0]])
        assert grad_slope == -2.0


class TestNetwork:
    def test_parameter_shapes(self) -> None:
        shapes = parameter_shapes()
        assert shapes["conv_0"] == (8, 2, 1, 1)
        assert shapes["conv_3"] == (16, 32, 2, 2)
        assert shapes["conv_5"] == (1, 8, 1, 1)
        assert shapes["prelu_4"] == (1,)
        assert architecture_string() == "k=1,2,2,2,2,1 c=2,8,16,32,16,8,1"
        assert CHANNELS[-1] == 1

    def test_zero_params_give_zero_output(self, grid3_poisson: CsrMatrix) -> None:
        raw = model_forward(CnnParams.zeros(), grid3_poisson)
        assert raw.channels == 1
        assert not np.any(raw.values)

    def test_any_size(self, params: CnnParams) -> None:
        small = model_forward(params, assemble_poisson(OccupancyGrid.all_fluid(8, 8)))
        large = model_forward(params, assemble_poisson(OccupancyGrid.all_fluid(16, 16)))
        assert (small.height, large.height) == (64, 256)

    def test_output_support_stays_local(self, params: CnnParams, small_samples) -> None:
        for sample in small_samples:
            raw = model_forward(params, sample.matrix)
            assert support_within_dilation(raw, encode_input(sample.matrix), RECEPTIVE_REACH)

    def test_deterministic(self, params: CnnParams, grid3_poisson: CsrMatrix) -> None:
        first = model_forward(params, grid3_poisson).values
        second = model_forward(params, grid3_poisson).values
        np.testing.assert_array_equal(first, second)

    def test_rejects_tiny_matrix(self, params: CnnParams) -> None:
        with pytest.raises(ValueError, match="n >= 2"):
            model_forward(params, CsrMatrix.identity(1))

    def test_init_is_seeded(self) -> None:
        a = init_params(np.random.default_rng(5))
        b = init_params(np.random.default_rng(5))
        assert a.equals(b)
        assert a["conv_0"][0, 1, 0, 0] > 0.9
        noise = np.delete(a["conv_0"].ravel(), 1)
        assert np.all(np.abs(noise) <= 0.1 / np.sqrt(2))
        assert a.slope(0) == 0.25

    def test_init_starts_off_the_clamp(self, small_samples) -> None:
        for seed in range(5):
            params = init_params(np.random.default_rng(seed))
            for sample in small_samples:
                factors = spd_assemble(model_forward(params, sample.matrix))
                assert not factors.clamped.any()
                np.testing.assert_allclose(factors.diag_raw, 0.5, rtol=0.5)

    def test_rejects_wrong_shape(self) -> None:
        tensors = {name: np.zeros(shape) for name, shape in parameter_shapes().items()}
        tensors["conv_1"] = np.zeros((1, 1, 1, 1))
        with pytest.raises(ValueError, match="conv_1"):
            CnnParams(tensors)


class TestSpdAssemble:
    def test_identity_raw(self) -> None:
        factors = spd_assemble(_raw_map(np.eye(3)))
        np.testing.assert_array_equal(factors.minv_dense(), np.eye(3))

    def test_negative_diagonal_is_clamped(self) -> None:
        raw = np.array([[-5.0, 0.0], [0.0, 1.0]])
        factors = spd_assemble(_raw_map(raw))
        np.testing.assert_allclose(factors.D, [EPSILON, 1.0])
        np.testing.assert_allclose(factors.minv_dense(), np.diag([EPSILON**2, 1.0]))

    def test_zero_raw_gives_scaled_identity(self) -> None:
        factors = spd_assemble(_raw_map(np.zeros((4, 4))))
        np.testing.assert_allclose(factors.minv_dense(), 1e-6 * np.eye(4))
        assert factors.clamped.all()

    def test_upper_triangle_is_discarded(self) -> None:
        raw = np.array([[1.0, 7.0], [2.0, 1.0]])
        factors = spd_assemble(_raw_map(raw))
        np.testing.assert_array_equal(factors.factor.to_dense(), [[1.0, 0.0], [2.0, 1.0]])

    def test_spd_for_random_raw(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(5):
            minv = spd_assemble(_raw_map(rng.standard_normal((6, 6)))).minv_dense()
            np.testing.assert_allclose(minv, minv.T, atol=1e-14)
            assert np.linalg.eigvalsh(minv).min() > 0

    def test_spd_for_model_outputs(self) -> None:
        samples = generate_samples(8, 8, 3, 2, seed=9)
        for seed in range(3):
            drawn = init_params(np.random.default_rng(seed))
            wide = _uniform_params(np.random.default_rng(seed))
            for sample in samples:
                for p in (drawn, wide):
                    factors = spd_assemble(model_forward(p, sample.matrix))
                    F = factors.factor.to_dense()
                    assert not np.any(np.triu(F, 1))
                    assert np.all(np.diag(F) >= EPSILON)
                    minv = factors.minv_dense()
                    np.testing.assert_allclose(minv, minv.T, rtol=1e-12, atol=1e-12)
                minv = spd_assemble(model_forward(drawn, sample.matrix)).minv_dense()
                assert np.linalg.eigvalsh(minv).min() > 0

    def test_requires_single_channel(self, tridiag3: CsrMatrix) -> None:
        with pytest.raises(ValueError, match="single-channel"):
            spd_assemble(encode_input(tridiag3))

    def test_learned_preconditioner_wraps_factors(self, params: CnnParams) -> None:
        sample = generate_samples(6, 6, 1, 1, seed=3)[0]
        factors = spd_assemble(model_forward(params, sample.matrix))
        P = learned_precond(factors)
        v = np.random.default_rng(0).standard_normal(sample.n)
        np.testing.assert_allclose(P(v), factors.minv_dense() @ v, rtol=1e-12, atol=1e-12)
        assert P.density_hint == factors.factor_density()


class TestCheckpoint:
    def test_round_trip(self, tmp_path: Path, params: CnnParams) -> None:
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, path)
        assert load_checkpoint(path).equals(params)
        assert path.read_text(encoding="utf-8").startswith(f"{MAGIC}\n{architecture_string()}\n")

    def test_bad_magic(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.ckpt"
        path.write_text("XXXX\n", encoding="utf-8")
        with pytest.raises(CheckpointError, match="line 1"):
            load_checkpoint(path)

    def test_architecture_mismatch(self, tmp_path: Path, params: CnnParams) -> None:
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[1] = "k=1,3 c=2,1"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CheckpointError, match="line 2: architecture mismatch"):
            load_checkpoint(path)

    def test_truncated(self, tmp_path: Path, params: CnnParams) -> None:
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        path.write_text("\n".join(lines[:-3]) + "\n", encoding="utf-8")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.ckpt")
