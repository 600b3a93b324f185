"""Foreground document segmentation (preprocessing before unwarping)."""

from .model import ConvBlock, SegModel
from .ops import (
    ConfidenceMap,
    DocMask,
    bce_loss,
    binarize,
    load_mask,
    preprocess,
    remove_background,
    save_mask,
    segment,
)

__all__ = [
    "SegModel",
    "ConvBlock",
    "ConfidenceMap",
    "DocMask",
    "segment",
    "binarize",
    "remove_background",
    "bce_loss",
    "preprocess",
    "save_mask",
    "load_mask",
]
