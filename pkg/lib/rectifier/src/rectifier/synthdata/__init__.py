"""Synthetic pages, warps, shading and dataset files."""

from .glyphs import ALPHABET, GLYPHS, glyph, glyph_stack
from .document import PageLayout, TextLine, render_document
from .warps import Fold, WarpParams, gen_warp, invert_warp, jacobian_determinants, sample_warp_params
from .shading import gen_shading
from .backgrounds import gen_background
from .sample import SampleRecord, gen_sample
from .dataset import (
    DatasetProvider,
    DirectoryDataset,
    GeneratedDataset,
    sample_seeds,
    write_dataset,
    write_record,
)

__all__ = [
    "ALPHABET",
    "GLYPHS",
    "glyph",
    "glyph_stack",
    "PageLayout",
    "TextLine",
    "render_document",
    "Fold",
    "WarpParams",
    "sample_warp_params",
    "gen_warp",
    "invert_warp",
    "jacobian_determinants",
    "gen_shading",
    "gen_background",
    "SampleRecord",
    "gen_sample",
    "DatasetProvider",
    "DirectoryDataset",
    "GeneratedDataset",
    "sample_seeds",
    "write_dataset",
    "write_record",
]
