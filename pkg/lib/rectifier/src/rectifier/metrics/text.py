"""
Edit distance, character error rate, and glyph decoding of synthetic pages.

decode_text is exact template matching against the built-in glyph set at
the cell positions recorded when the page was rendered. It is a stand-in
for OCR on synthetic documents only.
"""

from typing import List, Sequence

import numpy as np

from ..errors import ArgumentError
from ..synthdata.document import PageLayout
from ..synthdata.glyphs import ALPHABET, GLYPH_COLS, GLYPH_ROWS, glyph_stack
from .ssim import to_grayscale

MIN_INK_CONTRAST = 0.1


def edit_distance(hyp: Sequence, ref: Sequence) -> int:
    """
    Levenshtein distance with unit deletion, insertion and substitution costs.

    Usage:
        edit_distance("helo", "hello")  # 1
    """
    if len(hyp) < len(ref):
        hyp, ref = ref, hyp
    previous = list(range(len(ref) + 1))
    for i, a in enumerate(hyp, start=1):
        current = [i]
        for j, b in enumerate(ref, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (a != b),
                )
            )
        previous = current
    return previous[-1]


def cer(hyp: str, ref: str) -> float:
    """(d + i + s) / len(ref); may exceed 1."""
    if len(ref) == 0:
        raise ArgumentError("character error rate needs a non-empty reference")
    return edit_distance(hyp, ref) / len(ref)


def _cell_bits(gray: np.ndarray, top: int, left: int, scale: int, threshold: float) -> np.ndarray:
    height, width = GLYPH_ROWS * scale, GLYPH_COLS * scale
    cell = np.ones((height, width))
    crop = gray[top : top + height, left : left + width]
    cell[: crop.shape[0], : crop.shape[1]] = crop
    dots = cell.reshape(GLYPH_ROWS, scale, GLYPH_COLS, scale).mean(axis=(1, 3))
    return dots < threshold


def decode_text(image: np.ndarray, layout: PageLayout) -> str:
    """Read the page text back from an image aligned with ``layout``."""
    gray = to_grayscale(image)
    if gray.shape != (layout.height, layout.width):
        raise ArgumentError(f"image extent {gray.shape} does not match layout {layout.height}×{layout.width}")

    templates = glyph_stack().astype(bool)
    lines: List[str] = []
    for line in layout.lines:
        strip = gray[line.top : line.top + GLYPH_ROWS * layout.scale, line.left :]
        paper, ink = np.percentile(strip, 90), np.percentile(strip, 5)
        if paper - ink < MIN_INK_CONTRAST:
            lines.append(" " * line.length)
            continue
        threshold = 0.5 * (paper + ink)
        chars = []
        for top, left in layout.cells(line):
            bits = _cell_bits(gray, top, left, layout.scale, threshold)
            mismatches = (templates != bits).sum(axis=(1, 2))
            chars.append(ALPHABET[int(np.argmin(mismatches))])
        lines.append("".join(chars))
    return "\n".join(lines)
