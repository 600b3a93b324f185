"""
SSIM and MS-SSIM on single-channel float images.

Local statistics use a separable Gaussian window (``scipy.ndimage``) over
the valid region only. MS-SSIM is the weighted product of the per-level
contrast-structure terms with the full SSIM at the coarsest level. Images
too small for five levels use fewer, with the remaining weights
renormalized.
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import ndimage

from ..errors import ArgumentError, DimensionError


class MsSsimParams(BaseModel):
    window_size: int = Field(default=11, ge=1)
    sigma: float = Field(default=1.5, gt=0)
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = Field(default=1.0, gt=0)
    weights: Tuple[float, ...] = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)

    @model_validator(mode="after")
    def _check(self) -> "MsSsimParams":
        if self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd, got {self.window_size}")
        if not self.weights or abs(sum(self.weights) - 1.0) > 1e-3:
            raise ValueError(f"level weights must sum to 1, got {sum(self.weights):.4f}")
        return self


DEFAULT_PARAMS = MsSsimParams()


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma for colour input; 2-D input passes through."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[2] == 3:
        return image @ np.array([0.299, 0.587, 0.114])
    if image.ndim == 3 and image.shape[2] == 1:
        return image[..., 0]
    raise DimensionError(f"cannot convert image of shape {image.shape} to grayscale")


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    window = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return window / window.sum()


def _filter_valid(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    half = len(window) // 2
    filtered = ndimage.correlate1d(image, window, axis=0, mode="constant")
    filtered = ndimage.correlate1d(filtered, window, axis=1, mode="constant")
    return filtered[half : image.shape[0] - half, half : image.shape[1] - half]


def _check_pair(a: np.ndarray, b: np.ndarray, window_size: int) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"SSIM expects grayscale images, got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise DimensionError(f"SSIM extents differ: {a.shape} vs {b.shape}")
    if min(a.shape) < window_size:
        raise ArgumentError(f"images {a.shape} are smaller than the {window_size}px window")
    return a, b


def _ssim_terms(a: np.ndarray, b: np.ndarray, params: MsSsimParams) -> Tuple[float, float]:
    """(mean SSIM, mean contrast-structure) over the valid region."""
    window = gaussian_window(params.window_size, params.sigma)
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2

    mu_a = _filter_valid(a, window)
    mu_b = _filter_valid(b, window)
    var_a = _filter_valid(a * a, window) - mu_a * mu_a
    var_b = _filter_valid(b * b, window) - mu_b * mu_b
    covariance = _filter_valid(a * b, window) - mu_a * mu_b

    cs_map = (2.0 * covariance + c2) / (var_a + var_b + c2)
    luminance = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    return float(np.mean(luminance * cs_map)), float(np.mean(cs_map))


def ssim(a: np.ndarray, b: np.ndarray, params: MsSsimParams = DEFAULT_PARAMS) -> float:
    a, b = _check_pair(a, b, params.window_size)
    return _ssim_terms(a, b, params)[0]


def _downsample(image: np.ndarray) -> np.ndarray:
    h, w = (image.shape[0] // 2) * 2, (image.shape[1] // 2) * 2
    return image[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def usable_levels(shape: Tuple[int, int], params: MsSsimParams) -> int:
    levels = len(params.weights)
    while levels > 0 and min(shape) // (2 ** (levels - 1)) < params.window_size:
        levels -= 1
    return levels


def ms_ssim(a: np.ndarray, b: np.ndarray, params: MsSsimParams = DEFAULT_PARAMS) -> float:
    a, b = _check_pair(a, b, params.window_size)
    levels = usable_levels(a.shape, params)
    if levels == 0:
        raise ArgumentError(f"images {a.shape} are too small for MS-SSIM with window {params.window_size}")
    weights = np.asarray(params.weights[:levels])
    weights = weights / weights.sum()

    cs_values: List[float] = []
    ssim_value = 0.0
    for level in range(levels):
        ssim_value, cs = _ssim_terms(a, b, params)
        cs_values.append(max(cs, 0.0))
        if level < levels - 1:
            a, b = _downsample(a), _downsample(b)

    result = max(ssim_value, 0.0) ** weights[-1]
    for cs, weight in zip(cs_values[:-1], weights[:-1]):
        result *= cs**weight
    return float(result)
