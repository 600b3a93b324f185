"""
Tests for Local Distortion, MS-SSIM, text metrics and batch evaluation.

Run with: pytest test_metrics.py -v
"""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import ndimage

from rectifier.errors import ArgumentError, DimensionError
from rectifier.metrics import (
    DenseFlow,
    EvalPair,
    MsSsimParams,
    cer,
    decode_text,
    dense_flow,
    edit_distance,
    evaluate_pairs,
    local_distortion,
    ms_ssim,
    prepare_pair,
    report_lines,
    ssim,
    summary,
)
from rectifier.synthdata import PageLayout, TextLine, glyph
from rectifier.synthdata.document import CELL_COLS

TEXT = st.text(alphabet="ABC ", max_size=8)


def textured(rng: np.random.Generator, height: int = 64, width: int = 64) -> np.ndarray:
    return ndimage.gaussian_filter(rng.uniform(size=(height, width)), 1.0)


def page_with_text(text: str, scale: int = 2, left: int = 4, top: int = 3):
    """White page with one line of dark glyphs and its layout."""
    width = left + len(text) * CELL_COLS * scale
    height = top + 10 * scale
    page = np.full((height, width, 3), 0.95)
    block = np.ones((scale, scale), dtype=bool)
    for i, char in enumerate(text):
        bitmap = np.kron(glyph(char), block)
        x = left + i * CELL_COLS * scale
        page[top : top + bitmap.shape[0], x : x + bitmap.shape[1]][bitmap] = 0.1
    layout = PageLayout(height=height, width=width, scale=scale, margin=left, lines=[TextLine(top, left, len(text))])
    return page, layout


class TestSsim:
    """Structural similarity."""

    def test_self_similarity_is_one(self, rng):
        image = textured(rng)
        assert ssim(image, image) == pytest.approx(1.0)
        assert ms_ssim(image, image) == pytest.approx(1.0)

    def test_noise_lowers_score(self, rng):
        image = textured(rng)
        noisy = np.clip(image + rng.normal(0.0, 0.2, size=image.shape), 0.0, 1.0)
        assert ms_ssim(image, noisy) < 0.9

    def test_too_small_for_window(self):
        with pytest.raises(ArgumentError):
            ms_ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_extents_must_match(self):
        with pytest.raises(DimensionError):
            ssim(np.zeros((16, 16)), np.zeros((16, 17)))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            MsSsimParams(weights=(0.5, 0.2))

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            MsSsimParams(window_size=10)


class TestDenseFlow:
    """Block matching and Local Distortion."""

    def test_self_flow_is_zero(self, rng):
        image = textured(rng)
        flow = dense_flow(image, image)
        assert local_distortion(flow) == 0.0

    def test_recovers_horizontal_shift(self, rng):
        ref = rng.uniform(size=(64, 64))
        target = np.roll(ref, 3, axis=1)
        flow = dense_flow(ref, target, levels=1)
        np.testing.assert_allclose(flow.dx[8:-8, 8:-8], 3.0)
        np.testing.assert_allclose(flow.dy[8:-8, 8:-8], 0.0)

    def test_local_distortion_is_mean_magnitude(self):
        flow = DenseFlow(np.full((2, 2), 3.0), np.full((2, 2), 4.0))
        assert local_distortion(flow) == pytest.approx(5.0)

    def test_smaller_than_block(self):
        with pytest.raises(ArgumentError):
            dense_flow(np.zeros((4, 4)), np.zeros((4, 4)))

    def test_component_extents_must_agree(self):
        with pytest.raises(DimensionError):
            DenseFlow(np.zeros((2, 2)), np.zeros((2, 3)))


class TestTextMetrics:
    """Edit distance, CER and glyph decoding."""

    def test_known_distances(self):
        assert edit_distance("helo", "hello") == 1
        assert edit_distance("kitten", "sitting") == 3
        assert edit_distance("", "abc") == 3

    @given(a=TEXT, b=TEXT, c=TEXT)
    def test_edit_distance_is_a_metric(self, a, b, c):
        assert edit_distance(a, a) == 0
        assert edit_distance(a, b) == edit_distance(b, a)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)

    def test_cer_can_exceed_one(self):
        assert cer("ABCD", "A") == pytest.approx(3.0)

    def test_cer_needs_reference(self):
        with pytest.raises(ArgumentError):
            cer("A", "")

    def test_decode_reads_rendered_glyphs(self):
        page, layout = page_with_text("HELLO WORLD 42")
        assert decode_text(page, layout) == "HELLO WORLD 42"

    def test_decode_blank_line_is_spaces(self):
        page, layout = page_with_text("ABC")
        page[...] = 0.95
        assert decode_text(page, layout) == "   "

    def test_decode_extent_mismatch(self):
        page, layout = page_with_text("AB")
        with pytest.raises(ArgumentError):
            decode_text(page[:-1], layout)


class TestEvaluate:
    """Per-image table with a trailing mean row."""

    def test_table_and_report(self, rng):
        image = np.repeat(textured(rng)[..., None], 3, axis=2)
        pairs = [
            EvalPair("a", image, image, hyp_text="AB", ref_text="AC"),
            EvalPair("b", image, image),
        ]
        table = evaluate_pairs(pairs)
        assert list(table["name"]) == ["a", "b", "mean"]
        assert list(table.columns) == ["name", "ld", "ms_ssim", "ed", "cer"]
        assert table["ld"].iloc[0] == 0.0
        assert table["ms_ssim"].iloc[1] == pytest.approx(1.0)
        assert pd.isna(table["ed"].iloc[1])
        assert table["cer"].iloc[2] == pytest.approx(0.5)

        lines = report_lines(table)
        assert "a.ed\t1.000000" in lines
        assert not any(line.startswith("b.ed") for line in lines)
        assert lines[-1].startswith("mean.")
        assert summary(table)["pairs"] == "2"

    def test_threads_match_serial(self, rng):
        pairs = [EvalPair(str(i), textured(rng), textured(rng)) for i in range(3)]
        serial = evaluate_pairs(pairs, metrics=["ms_ssim"])
        threaded = evaluate_pairs(pairs, metrics=["ms_ssim"], threads=3)
        pd.testing.assert_frame_equal(serial, threaded)

    def test_prediction_is_resized_to_ground_truth(self, rng):
        pred, gt = prepare_pair(rng.uniform(size=(30, 20, 3)), rng.uniform(size=(40, 25, 3)))
        assert pred.shape == gt.shape == (40, 25)

    def test_unknown_metric(self, rng):
        with pytest.raises(ArgumentError):
            evaluate_pairs([EvalPair("a", textured(rng), textured(rng))], metrics=["psnr"])
