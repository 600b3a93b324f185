"""
Foreground document segmentation.

    confidence = segment(image, model)          # values in (0, 1)
    mask = binarize(confidence, tau=0.5)        # p >= tau → 1
    masked = remove_background(image, mask)
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from utils import read_gray, write_image

from ..errors import ArgumentError, DataError, DimensionError
from ..numerics import Tensor, as_tensor, no_grad
from .model import SegModel

BCE_EPS = 1e-7


@dataclass
class ConfidenceMap:
    """Per-pixel foreground probability."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float32)
        if self.p.ndim != 2:
            raise DimensionError(f"confidence map must be H×W, got {self.p.shape}")
        if self.p.size and (self.p.min() < 0.0 or self.p.max() > 1.0):
            raise ArgumentError("confidence values must lie in [0, 1]")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.p.shape


@dataclass
class DocMask:
    """Binary document footprint."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DimensionError(f"mask must be H×W, got {values.shape}")
        if not np.all((values == 0) | (values == 1)):
            raise ArgumentError("mask values must be 0 or 1")
        self.values = values.astype(np.uint8)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def area_fraction(self) -> float:
        return float(self.values.mean()) if self.values.size else 0.0

    def as_confidence(self) -> ConfidenceMap:
        return ConfidenceMap(self.values.astype(np.float32))


def segment(image: np.ndarray, model: SegModel) -> ConfidenceMap:
    with no_grad():
        probabilities = model(np.asarray(image, dtype=np.float32))
    return ConfidenceMap(np.clip(probabilities.data, 0.0, 1.0))


def binarize(conf: ConfidenceMap, tau: float) -> DocMask:
    if not 0.0 < tau < 1.0:
        raise ArgumentError(f"tau must lie in (0, 1), got {tau}")
    return DocMask((conf.p >= tau).astype(np.uint8))


def _mask_values(mask: Union[DocMask, np.ndarray]) -> np.ndarray:
    return mask.values if isinstance(mask, DocMask) else np.asarray(mask)


def remove_background(image: np.ndarray, mask: Union[DocMask, np.ndarray]) -> np.ndarray:
    """Zero every pixel outside the mask, channel by channel."""
    image = np.asarray(image)
    values = _mask_values(mask)
    if image.shape[:2] != values.shape:
        raise DimensionError(f"image extent {image.shape[:2]} differs from mask extent {values.shape}")
    if image.ndim == 3:
        values = values[..., None]
    return image * values.astype(image.dtype)


def bce_loss(
    pred: Union[Tensor, ConfidenceMap],
    gt: Union[DocMask, np.ndarray],
    mean: bool = False,
    eps: float = BCE_EPS,
) -> Tensor:
    """Binary cross-entropy; summed over pixels unless ``mean`` is set."""
    pred = as_tensor(pred.p if isinstance(pred, ConfidenceMap) else pred)
    target = _mask_values(gt).astype(pred.dtype)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction extent {pred.shape} differs from mask extent {target.shape}")

    p = pred.clip(eps, 1.0 - eps)
    per_pixel = -(p.log() * target + (1.0 - p).log() * (1.0 - target))
    return per_pixel.mean() if mean else per_pixel.sum()


def preprocess(image: np.ndarray, model: SegModel, tau: float | None = None) -> Tuple[DocMask, np.ndarray]:
    """segment → binarize → remove_background."""
    tau = model.config.tau if tau is None else tau
    mask = binarize(segment(image, model), tau)
    return mask, remove_background(image, mask)


def save_mask(mask: DocMask, path: str | Path) -> Path:
    try:
        return write_image(mask.values.astype(np.float32), path)
    except OSError as exc:
        raise DataError(f"cannot write mask {path}: {exc}") from exc


def load_mask(path: str | Path) -> DocMask:
    try:
        gray = read_gray(path)
    except OSError as exc:
        raise DataError(f"cannot read mask {path}: {exc}") from exc
    return DocMask((gray >= 0.5).astype(np.uint8))
