"""Whole-image illumination correction: crop → correct each patch → stitch."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import ArgumentError
from .model import IllModel
from .patches import crop_patches, stitch


def correct_illumination(image: np.ndarray, model: IllModel, threads: int = 1) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ArgumentError(f"expected a non-empty H×W×3 image, got {image.shape}")

    patches, layout = crop_patches(image, model.config)
    if threads > 1 and len(patches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            corrected = list(pool.map(model.correct_patch, patches))
    else:
        corrected = [model.correct_patch(patch) for patch in patches]
    return np.clip(stitch(corrected, layout), 0.0, 1.0)
