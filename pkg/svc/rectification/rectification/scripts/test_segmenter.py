"""
Tests for the document segmenter and background removal.

Run with: pytest test_segmenter.py -v
"""

import numpy as np
import pytest

from rectifier.errors import ArgumentError, DimensionError
from rectifier.numerics import Tensor, check_gradients
from rectifier.segmenter import (
    ConfidenceMap,
    DocMask,
    SegModel,
    bce_loss,
    binarize,
    load_mask,
    preprocess,
    remove_background,
    save_mask,
    segment,
)


class TestSegModel:
    """Forward pass of the U-shaped network."""

    def test_output_is_probability_map(self, tiny_seg_config, rng):
        model = SegModel(tiny_seg_config)
        conf = segment(rng.uniform(size=(16, 16, 3)), model)
        assert conf.shape == (16, 16)
        assert conf.p.min() >= 0.0 and conf.p.max() <= 1.0

    def test_rejects_wrong_extent(self, tiny_seg_config):
        with pytest.raises(DimensionError):
            SegModel(tiny_seg_config)(np.zeros((8, 16, 3)))

    def test_same_seed_same_weights(self, tiny_seg_config):
        a = SegModel(tiny_seg_config).state_dict()
        b = SegModel(tiny_seg_config).state_dict()
        assert a.keys() == b.keys()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])


class TestMasks:
    """Thresholding and masking."""

    def test_binarize_is_inclusive(self):
        conf = ConfidenceMap(np.array([[0.49, 0.5], [0.51, 1.0]]))
        np.testing.assert_array_equal(binarize(conf, 0.5).values, [[0, 1], [1, 1]])

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.2])
    def test_binarize_rejects_tau_outside_open_interval(self, tau):
        with pytest.raises(ArgumentError):
            binarize(ConfidenceMap(np.zeros((2, 2))), tau)

    def test_doc_mask_rejects_non_binary(self):
        with pytest.raises(ArgumentError):
            DocMask(np.array([[0, 2]]))

    def test_confidence_rejects_out_of_range(self):
        with pytest.raises(ArgumentError):
            ConfidenceMap(np.array([[1.5]]))

    def test_remove_background_zeroes_outside(self, rng):
        image = rng.uniform(0.1, 1.0, size=(4, 5, 3))
        mask = DocMask(np.eye(4, 5, dtype=np.uint8))
        masked = remove_background(image, mask)
        np.testing.assert_array_equal(masked[mask.values == 0], 0.0)
        np.testing.assert_array_equal(masked[mask.values == 1], image[mask.values == 1])

    def test_remove_background_extent_mismatch(self):
        with pytest.raises(DimensionError):
            remove_background(np.zeros((4, 4, 3)), DocMask(np.zeros((3, 4), dtype=np.uint8)))

    def test_preprocess_returns_mask_and_masked_image(self, tiny_seg_config, rng):
        image = rng.uniform(size=(16, 16, 3)).astype(np.float32)
        mask, masked = preprocess(image, SegModel(tiny_seg_config))
        assert mask.shape == (16, 16)
        np.testing.assert_array_equal(masked, remove_background(image, mask))

    def test_mask_file_round_trip(self, tmp_path):
        mask = DocMask(np.array([[0, 1, 1], [1, 0, 0]], dtype=np.uint8))
        save_mask(mask, tmp_path / "mask.pgm")
        np.testing.assert_array_equal(load_mask(tmp_path / "mask.pgm").values, mask.values)


class TestBceLoss:
    """Binary cross-entropy."""

    def test_perfect_prediction_is_near_zero(self):
        gt = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        assert bce_loss(Tensor(gt.astype(np.float64)), gt).item() < 1e-5

    def test_sum_is_pixel_count_times_mean(self, rng):
        pred = Tensor(rng.uniform(0.05, 0.95, size=(3, 4)))
        gt = (rng.uniform(size=(3, 4)) > 0.5).astype(np.uint8)
        assert bce_loss(pred, gt).item() == pytest.approx(12 * bce_loss(pred, gt, mean=True).item())

    def test_half_confidence_costs_log_two(self):
        pred = Tensor(np.full((2, 2), 0.5))
        assert bce_loss(pred, np.ones((2, 2)), mean=True).item() == pytest.approx(np.log(2.0))

    def test_gradients(self, rng):
        pred = Tensor(rng.uniform(0.1, 0.9, size=(3, 3)), requires_grad=True)
        gt = (rng.uniform(size=(3, 3)) > 0.5).astype(np.uint8)
        worst = check_gradients(lambda: bce_loss(pred, gt), {"pred": pred})
        assert worst["pred"] < 1e-5

    def test_extent_mismatch(self):
        with pytest.raises(DimensionError):
            bce_loss(Tensor(np.full((2, 2), 0.5)), np.ones((2, 3)))
