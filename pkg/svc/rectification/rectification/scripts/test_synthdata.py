"""
Tests for synthetic pages, warps, shading and dataset directories.

Run with: pytest test_synthdata.py -v
"""

import numpy as np
import pytest

from rectifier import SynthConfig
from rectifier.errors import DataError, WarpError
from rectifier.fields import identity_map, warp_image
from rectifier.metrics.ssim import ms_ssim, to_grayscale
from rectifier.numerics import Rng
from rectifier.synthdata import (
    DirectoryDataset,
    Fold,
    GeneratedDataset,
    WarpParams,
    gen_sample,
    gen_shading,
    gen_warp,
    invert_warp,
    jacobian_determinants,
    render_document,
    sample_seeds,
    sample_warp_params,
    write_dataset,
)
from rectifier.synthdata.dataset import MANIFEST, SUFFIXES, sample_name
from rectifier.synthdata.sample import ROUNDTRIP_MIN_MS_SSIM, soften_shading
from rectifier.synthdata.shading import SHADING_MAX, SHADING_MIN
from utils import read_tsv


class TestDocument:
    """Clean page rendering."""

    def test_same_seed_same_page(self):
        a, text_a, layout_a = render_document(5)
        b, text_b, layout_b = render_document(5)
        np.testing.assert_array_equal(a, b)
        assert text_a == text_b
        assert layout_a == layout_b

    def test_layout_matches_text(self):
        page, text, layout = render_document(11)
        assert page.shape == (288, 288, 3)
        lines = text.split("\n")
        assert len(lines) == len(layout.lines)
        assert [len(line) for line in lines] == [line.length for line in layout.lines]

    def test_layout_dict_round_trip(self):
        _, _, layout = render_document(2)
        assert type(layout).from_dict(layout.to_dict()) == layout


class TestWarps:
    """Backward map generation and inversion."""

    def test_default_params_are_identity(self):
        np.testing.assert_allclose(gen_warp(WarpParams(), 12, 9).coords, identity_map(12, 9).coords, atol=1e-12)

    def test_identity_jacobian_is_one(self):
        np.testing.assert_allclose(jacobian_determinants(WarpParams()), 1.0)

    def test_damping_scales_amplitudes(self):
        params = WarpParams(inset=0.1, corners=(0.02,) * 8, folds=[Fold(amplitude=0.04)], curl=0.1)
        damped = params.damped()
        assert damped.inset == 0.1
        assert damped.corners == (0.01,) * 8
        assert damped.folds[0].amplitude == pytest.approx(0.02)
        assert damped.curl == pytest.approx(0.05)

    def test_sampled_params_respect_config(self):
        config = SynthConfig()
        params = sample_warp_params(Rng(4), config)
        assert 1 <= len(params.folds) <= config.max_folds
        assert max(abs(c) for c in params.corners) <= config.perspective
        assert abs(params.curl) <= config.curl

    def test_folding_warp_is_rejected(self):
        params = WarpParams(folds=[Fold(axis="x", amplitude=20.0, frequency=2.0)])
        with pytest.raises(WarpError):
            gen_warp(params, 16, 16)

    def test_invert_identity(self):
        forward, on_page = invert_warp(identity_map(10, 10), 10, 10)
        np.testing.assert_allclose(forward.coords, identity_map(10, 10).coords, atol=1e-9)
        assert on_page.all()

    def test_inset_page_leaves_background(self):
        bmap = gen_warp(WarpParams(inset=0.2), 32, 32)
        _, on_page = invert_warp(bmap, 32, 32)
        assert on_page[16, 16]
        assert not on_page[0, 0]


class TestSample:
    """Complete training records."""

    def test_shading_range(self):
        shading = gen_shading(9, 40, 30)
        assert shading.shape == (40, 30)
        assert shading.min() >= SHADING_MIN and shading.max() <= SHADING_MAX

    def test_record_shapes(self, sample):
        assert sample.shape == (288, 288)
        assert sample.bmap.shape == (288, 288)
        assert sample.mask.shape == (288, 288)
        assert sample.clean.shape == (288, 288, 3)
        assert 0.0 < sample.mask.area_fraction < 1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_ground_truth_unwarp_restores_page(self, seed):
        record = gen_sample(seed)
        restored = warp_image(record.distorted, record.bmap)
        assert ms_ssim(to_grayscale(restored), to_grayscale(record.clean)) > ROUNDTRIP_MIN_MS_SSIM
        assert record.shading.min() >= SHADING_MIN and record.shading.max() <= SHADING_MAX

    def test_softened_shading_stays_in_range(self):
        shading = gen_shading(9, 40, 30)
        for depth in (1.0, 0.5, 0.0):
            softened = soften_shading(shading, depth)
            assert softened.min() >= SHADING_MIN and softened.max() <= SHADING_MAX
        np.testing.assert_array_equal(soften_shading(shading, 0.0), 1.0)
        np.testing.assert_allclose(soften_shading(shading, 1.0), shading)

    def test_same_seed_same_sample(self, sample):
        again = gen_sample(sample.seed)
        np.testing.assert_array_equal(again.distorted, sample.distorted)
        np.testing.assert_array_equal(again.bmap.coords, sample.bmap.coords)

    def test_without_shading_or_background(self):
        record = gen_sample(1, SynthConfig(shading=False, background=False))
        np.testing.assert_array_equal(record.shading, 1.0)
        assert np.all(record.distorted[record.mask.values == 0] == 0.0)


class TestDataset:
    """Dataset directories and providers."""

    def test_seeds_are_deterministic(self):
        assert sample_seeds(3, 4) == sample_seeds(3, 4)
        assert sample_seeds(3, 4)[:2] == sample_seeds(3, 2)
        assert len(set(sample_seeds(3, 16))) == 16

    def test_write_then_read(self, tmp_path, dataset):
        manifest = write_dataset(2, 0, tmp_path)
        assert manifest == tmp_path / MANIFEST
        for index in range(2):
            for suffix in SUFFIXES:
                assert (tmp_path / f"{sample_name(index)}{suffix}").exists()

        loaded = DirectoryDataset(tmp_path)
        assert loaded.names() == ["000000", "000001"]
        original, record = dataset.get(1), loaded.get(1)
        assert record.seed == original.seed
        assert record.text == original.text
        assert record.layout == original.layout
        np.testing.assert_array_equal(record.mask.values, original.mask.values)
        np.testing.assert_allclose(record.distorted, original.distorted, atol=0.5 / 255 + 1e-6)
        np.testing.assert_allclose(record.bmap.coords, original.bmap.coords, atol=1e-6)

    def test_manifest_lists_seeds(self, tmp_path):
        write_dataset(2, 7, tmp_path)
        table = read_tsv(tmp_path / MANIFEST, ["name", "seed"])
        assert [int(s) for s in table["seed"]] == sample_seeds(7, 2)

    def test_empty_dataset(self, tmp_path):
        write_dataset(0, 0, tmp_path)
        assert len(DirectoryDataset(tmp_path)) == 0

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError):
            DirectoryDataset(tmp_path)

    def test_missing_sample_file(self, tmp_path):
        write_dataset(1, 0, tmp_path)
        (tmp_path / "000000.bmap").unlink()
        with pytest.raises(DataError):
            DirectoryDataset(tmp_path).get(0)

    def test_generated_dataset_caches(self, dataset):
        assert dataset.get(0) is dataset.get(0)
        with pytest.raises(IndexError):
            dataset.get(5)
