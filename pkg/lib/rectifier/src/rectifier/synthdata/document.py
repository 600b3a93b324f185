"""
Procedural document pages.

A page is a tinted sheet with ruled text lines drawn from the built-in 5×7
glyph set and one bar-chart figure. The exact text and the glyph cell
geometry are returned with the image, so text can be read back from a
rectified page by template matching.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from ..numerics import Rng
from .glyphs import DIGITS, GLYPH_COLS, GLYPH_ROWS, WORD_CHARS, glyph

MARGIN_FRACTION = 0.06
CELL_COLS = GLYPH_COLS + 1
LINE_ROWS = GLYPH_ROWS + 3


@dataclass
class TextLine:
    top: int
    left: int
    length: int


@dataclass
class PageLayout:
    """Glyph cell geometry of a rendered page."""

    height: int
    width: int
    scale: int
    margin: int
    lines: List[TextLine] = field(default_factory=list)

    @property
    def cell_width(self) -> int:
        return CELL_COLS * self.scale

    @property
    def line_height(self) -> int:
        return LINE_ROWS * self.scale

    def cells(self, line: TextLine) -> List[Tuple[int, int]]:
        """Top-left pixel of every glyph on ``line``."""
        return [(line.top, line.left + i * self.cell_width) for i in range(line.length)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "height": self.height,
            "width": self.width,
            "scale": self.scale,
            "margin": self.margin,
            "lines": [[line.top, line.left, line.length] for line in self.lines],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PageLayout":
        return cls(
            height=int(data["height"]),
            width=int(data["width"]),
            scale=int(data["scale"]),
            margin=int(data["margin"]),
            lines=[TextLine(int(t), int(l), int(n)) for t, l, n in data["lines"]],
        )


def glyph_scale(height: int, width: int) -> int:
    return max(1, min(height, width) // 144)


def _random_word(rng: Rng) -> str:
    if rng.uniform() < 0.1:
        return "".join(rng.choice(list(DIGITS), size=int(rng.integers(1, 5))))
    word = "".join(rng.choice(list(WORD_CHARS), size=int(rng.integers(2, 9))))
    if rng.uniform() < 0.12:
        word += str(rng.choice([".", ",", "-"]))
    return word


def _compose_line(rng: Rng, capacity: int) -> str:
    words: List[str] = []
    length = 0
    while True:
        word = _random_word(rng)
        extra = len(word) + (1 if words else 0)
        if length + extra > capacity:
            break
        words.append(word)
        length += extra
        if rng.uniform() < 0.08 and len(words) > 1:
            break
    return " ".join(words) if words else _random_word(rng)[: max(capacity, 1)]


def _draw_text(ink: np.ndarray, text: str, top: int, left: int, scale: int) -> None:
    block = np.ones((scale, scale), dtype=bool)
    for i, char in enumerate(text):
        bitmap = np.kron(glyph(char), block)
        x = left + i * CELL_COLS * scale
        ink[top : top + bitmap.shape[0], x : x + bitmap.shape[1]] |= bitmap


def _draw_figure(page: np.ndarray, rng: Rng, top: int, left: int, height: int, width: int, ink_colour) -> None:
    frame = page[top : top + height, left : left + width]
    frame[...] = 0.9 * frame
    frame[[0, -1], :] = ink_colour
    frame[:, [0, -1]] = ink_colour
    bars = int(rng.integers(3, 7))
    bar_width = max(1, (width - 4) // (2 * bars))
    for b in range(bars):
        bar_height = int(rng.integers(height // 4, height - 3))
        x0 = 2 + (2 * b + 1) * bar_width
        colour = rng.uniform(0.2, 0.8, size=3)
        frame[height - 1 - bar_height : height - 1, x0 : x0 + bar_width] = colour


def render_document(seed: int, height: int = 288, width: int = 288) -> Tuple[np.ndarray, str, PageLayout]:
    """
    Render a clean page.

    Returns:
        (H×W×3 float32 image in [0, 1], text with lines joined by ``\\n``,
        PageLayout of every glyph cell)
    """
    rng = Rng(seed).spawn("document")
    scale = glyph_scale(height, width)
    margin = max(1, int(round(MARGIN_FRACTION * min(height, width))))
    layout = PageLayout(height=height, width=width, scale=scale, margin=margin)

    paper = rng.uniform(0.92, 0.99, size=3)
    ink_colour = rng.uniform(0.05, 0.2) * np.array([1.0, 1.0, 1.0]) + rng.uniform(0.0, 0.08, size=3)
    page = np.ones((height, width, 3)) * paper
    ink = np.zeros((height, width), dtype=bool)

    capacity = max(1, (width - 2 * margin) // layout.cell_width)
    rows = max(1, (height - 2 * margin) // layout.line_height)
    figure_at = int(rng.integers(1, rows)) if rows > 4 else -1
    figure_rows = min(int(rng.integers(3, 6)), max(rows - figure_at - 1, 0)) if figure_at > 0 else 0

    lines: List[str] = []
    row = 0
    while row < rows:
        top = margin + row * layout.line_height
        if row == figure_at and figure_rows > 0:
            fig_height = figure_rows * layout.line_height - 2 * scale
            fig_width = int((width - 2 * margin) * rng.uniform(0.4, 0.9))
            _draw_figure(page, rng, top, margin, fig_height, fig_width, ink_colour)
            row += figure_rows
            continue
        text = _compose_line(rng, capacity)
        _draw_text(ink, text, top, margin, scale)
        rule = top + (GLYPH_ROWS + 1) * scale
        page[rule, margin : width - margin] = 0.85 * paper
        layout.lines.append(TextLine(top=top, left=margin, length=len(text)))
        lines.append(text)
        row += 1

    page[ink] = ink_colour
    return np.clip(page, 0.0, 1.0).astype(np.float32), "\n".join(lines), layout
