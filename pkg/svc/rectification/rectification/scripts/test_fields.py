"""
Tests for backward maps, warping and ×8 field upsampling.

Run with: pytest test_fields.py -v
"""

import numpy as np
import pytest

from rectifier.errors import ContractError, DataError, DimensionError
from rectifier.fields import (
    BackwardMap,
    bilinear_upsample_field,
    convex_upsample,
    identity_map,
    read_bmap,
    resize_image,
    resize_map,
    validate_mask,
    warp_image,
    warp_tensor,
    write_bmap,
)
from rectifier.numerics import Tensor, check_gradients


class TestBackwardMap:
    """Construction, identity and resizing."""

    def test_identity_corners(self):
        bmap = identity_map(4, 6)
        assert bmap.shape == (4, 6)
        assert tuple(bmap.coords[0, 0]) == (0.0, 0.0)
        assert tuple(bmap.coords[-1, -1]) == (1.0, 1.0)

    def test_rejects_wrong_rank(self):
        with pytest.raises(DimensionError):
            BackwardMap(np.zeros((4, 4, 3)))

    def test_resize_identity_stays_identity(self):
        resized = resize_map(identity_map(9, 9), 33, 17)
        np.testing.assert_allclose(resized.coords, identity_map(33, 17).coords, atol=1e-12)

    def test_resize_image_keeps_constant(self):
        image = np.full((5, 7, 3), 0.25, dtype=np.float32)
        out = resize_image(image, 11, 3)
        assert out.shape == (11, 3, 3)
        np.testing.assert_allclose(out, 0.25)


class TestWarp:
    """Bilinear sampling through a map."""

    @pytest.mark.parametrize("seed", range(20))
    def test_identity_warp_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        height, width = (int(n) for n in rng.integers(1, 48, size=2))
        shape = (height, width) if seed % 4 == 0 else (height, width, 3)
        src = rng.uniform(size=shape).astype(np.float32 if seed % 2 else np.float64)
        out = warp_image(src, identity_map(height, width))
        assert out.dtype == src.dtype
        np.testing.assert_array_equal(out, src)

    def test_constant_map_samples_one_pixel(self, rng):
        src = rng.uniform(size=(5, 5, 3))
        coords = np.full((3, 4, 2), 0.5)
        out = warp_image(src, BackwardMap(coords))
        assert out.shape == (3, 4, 3)
        np.testing.assert_allclose(out, np.broadcast_to(src[2, 2], out.shape))

    def test_out_of_range_positions_clamp(self, rng):
        src = rng.uniform(size=(4, 4))
        coords = np.full((1, 1, 2), -3.0)
        assert warp_image(src, BackwardMap(coords))[0, 0] == pytest.approx(src[0, 0])

    def test_half_pixel_shift_averages_neighbours(self):
        src = np.array([[0.0, 1.0]])
        coords = np.array([[[0.5, 0.0]]])
        assert warp_image(src, BackwardMap(coords))[0, 0] == pytest.approx(0.5)

    def test_warp_tensor_matches_warp_image(self, rng):
        src = rng.uniform(size=(6, 7, 2))
        coords = rng.uniform(0.05, 0.95, size=(5, 4, 2))
        np.testing.assert_allclose(warp_tensor(Tensor(src), Tensor(coords)).data, warp_image(src, BackwardMap(coords)))

    def test_warp_tensor_gradients(self, rng):
        src = Tensor(rng.uniform(size=(6, 6, 2)), requires_grad=True)
        coords = Tensor(rng.uniform(0.1, 0.9, size=(4, 4, 2)), requires_grad=True)
        worst = check_gradients(lambda: (warp_tensor(src, coords) ** 2).sum(), {"src": src, "coords": coords})
        assert max(worst.values()) < 1e-4


class TestBmapFile:
    """BMAP encoding."""

    def test_round_trip_is_byte_identical(self, tmp_path, rng):
        bmap = BackwardMap(rng.uniform(size=(7, 5, 2)).astype(np.float32))
        write_bmap(tmp_path / "a.bmap", bmap)
        write_bmap(tmp_path / "b.bmap", read_bmap(tmp_path / "a.bmap"))
        assert (tmp_path / "a.bmap").read_bytes() == (tmp_path / "b.bmap").read_bytes()

    def test_header_layout(self, tmp_path):
        write_bmap(tmp_path / "m.bmap", identity_map(2, 3))
        blob = (tmp_path / "m.bmap").read_bytes()
        assert blob[:4] == b"BMAP"
        assert len(blob) == 4 + 4 + 4 + 1 + 2 * 3 * 2 * 4

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.bmap").write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(DataError, match="magic"):
            read_bmap(tmp_path / "x.bmap")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_bmap(tmp_path / "absent.bmap")


class TestUpsample:
    """Convex and bilinear ×8 upsampling."""

    def test_centre_weight_mask_replicates_coarse_values(self, rng):
        coarse = rng.normal(size=(3, 2, 2))
        mask = np.zeros((3, 2, 9, 64))
        mask[:, :, 4, :] = 1.0
        fine = convex_upsample(coarse, mask).data
        assert fine.shape == (24, 16, 2)
        np.testing.assert_allclose(fine[8:16, 0:8], np.broadcast_to(coarse[1, 0], (8, 8, 2)))

    def test_convex_combination_of_constant_interior(self):
        coarse = np.full((4, 4, 2), 0.3)
        mask = np.full((4, 4, 9, 64), 1.0 / 9.0)
        fine = convex_upsample(coarse, mask).data
        # interior coarse pixels see only the constant neighbourhood
        np.testing.assert_allclose(fine[8:24, 8:24], 0.3)

    def test_mask_must_sum_to_one(self):
        mask = np.full((1, 1, 9, 64), 0.2)
        with pytest.raises(ContractError):
            validate_mask(mask)

    def test_mask_extent_mismatch(self):
        with pytest.raises(DimensionError):
            convex_upsample(np.zeros((2, 2, 2)), np.full((3, 2, 9, 64), 1.0 / 9.0))

    def test_bilinear_upsample_extents(self, rng):
        assert bilinear_upsample_field(rng.normal(size=(3, 5, 2))).shape == (24, 40, 2)
