"""
End-to-end geometric rectification of an image of any resolution.

    working = resize(image, S×S)
    mask    = binarize(segment(working), tau)     (when a segmenter is given)
    coarse  = GeoModel(working * mask)
    bmap    = resize_map(coarse, H×W)
    result  = warp_image(image, bmap)
"""

from typing import Optional, Tuple

import numpy as np

from ..errors import ArgumentError, ConfigError, PipelineError
from ..fields import BackwardMap, resize_image, resize_map, warp_image
from ..segmenter import ConfidenceMap, DocMask, SegModel, binarize, remove_background, segment
from .model import GeoModel


def check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ArgumentError(f"expected a non-empty H×W×3 image, got {image.shape}")
    return image


def document_mask(
    small: np.ndarray, seg: SegModel, tau: Optional[float] = None, working_size: Optional[int] = None
) -> DocMask:
    """
    Segment an image at the segmenter resolution and reject frames with no document.

    With ``working_size`` the confidence map is resampled to that square extent
    before binarizing, so the mask lines up with the geometric model input.
    """
    tau = seg.config.tau if tau is None else tau
    confidence = segment(small, seg)
    if working_size is not None and confidence.shape != (working_size, working_size):
        resampled = resize_image(confidence.p, working_size, working_size)
        confidence = ConfidenceMap(np.clip(resampled, 0.0, 1.0))
    mask = binarize(confidence, tau)
    if mask.area_fraction < seg.config.min_area:
        raise PipelineError(
            f"no document found: mask covers {mask.area_fraction:.2%} of the frame "
            f"(minimum {seg.config.min_area:.0%})"
        )
    return mask


def map_from_working(
    small: np.ndarray, geo: GeoModel, mask: Optional[DocMask], height: int, width: int
) -> BackwardMap:
    """Predict on a working-resolution image and resize the map to height×width."""
    if mask is not None:
        if mask.shape != small.shape[:2]:
            raise ConfigError(
                f"segmenter mask is {mask.shape[0]}×{mask.shape[1]} but the geometric model "
                f"works at {small.shape[0]}×{small.shape[1]}"
            )
        small = remove_background(small, mask)
    return resize_map(geo.predict(small), height, width)


def predict_map(
    image: np.ndarray, geo: GeoModel, seg: Optional[SegModel] = None, tau: Optional[float] = None
) -> BackwardMap:
    """Backward map at the input's own resolution."""
    image = check_image(image)
    height, width = image.shape[:2]
    size = geo.config.image_size

    small = resize_image(image, size, size)
    mask = None
    if seg is not None and geo.config.use_preprocessing:
        seg_size = seg.config.image_size
        mask = document_mask(resize_image(image, seg_size, seg_size), seg, tau, working_size=size)
    return map_from_working(small, geo, mask, height, width)


def unwarp(
    image: np.ndarray, geo: GeoModel, seg: Optional[SegModel] = None, tau: Optional[float] = None
) -> Tuple[np.ndarray, BackwardMap]:
    """Return (rectified image, full-resolution backward map)."""
    image = check_image(image)
    bmap = predict_map(image, geo, seg, tau)
    return warp_image(image, bmap), bmap
