"""Procedural background textures for compositing pages."""

from typing import Callable, Dict

import numpy as np
from scipy import ndimage

from ..numerics import Rng


def _noise(rng: Rng, height: int, width: int) -> np.ndarray:
    sigma = rng.uniform(1.0, 6.0)
    raw = ndimage.gaussian_filter(rng.normal(size=(height, width, 3)), sigma=(sigma, sigma, 0))
    raw = (raw - raw.min()) / max(np.ptp(raw), 1e-12)
    low, high = rng.uniform(0.0, 0.4, size=3), rng.uniform(0.5, 1.0, size=3)
    return low + (high - low) * raw


def _gradient(rng: Rng, height: int, width: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, height), np.linspace(0.0, 1.0, width), indexing="ij")
    angle = rng.uniform(0.0, 2.0 * np.pi)
    t = np.cos(angle) * xx + np.sin(angle) * yy
    t = (t - t.min()) / max(np.ptp(t), 1e-12)
    start, end = rng.uniform(0.0, 1.0, size=3), rng.uniform(0.0, 1.0, size=3)
    return start + (end - start) * t[..., None]


def _stripes(rng: Rng, height: int, width: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    angle = rng.uniform(0.0, np.pi)
    period = rng.uniform(6.0, 30.0)
    t = 0.5 + 0.5 * np.sin(2.0 * np.pi * (np.cos(angle) * xx + np.sin(angle) * yy) / period)
    first, second = rng.uniform(0.0, 1.0, size=3), rng.uniform(0.0, 1.0, size=3)
    return first + (second - first) * t[..., None]


BACKGROUNDS: Dict[str, Callable[[Rng, int, int], np.ndarray]] = {
    "noise": _noise,
    "gradient": _gradient,
    "stripes": _stripes,
}


def gen_background(rng: Rng, height: int, width: int) -> np.ndarray:
    """H×W×3 float32 texture in [0, 1], kind drawn from ``BACKGROUNDS``."""
    kind = str(rng.choice(sorted(BACKGROUNDS)))
    return np.clip(BACKGROUNDS[kind](rng, height, width), 0.0, 1.0).astype(np.float32)
