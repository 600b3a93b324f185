"""Multiplicative illumination fields: smooth falloff plus soft shadow bands."""

import numpy as np

from ..numerics import Rng

SHADING_MIN = 0.4
SHADING_MAX = 1.0


def _low_frequency(rng: Rng, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    field = np.zeros_like(xx)
    for _ in range(3):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        cycles = rng.uniform(0.3, 1.5)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        field += np.cos(2.0 * np.pi * cycles * (np.cos(angle) * xx + np.sin(angle) * yy) + phase)
    return field / 3.0


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gen_shading(seed: int, height: int, width: int) -> np.ndarray:
    """H×W float32 field in [SHADING_MIN, SHADING_MAX]."""
    rng = Rng(seed).spawn("shading")
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, height), np.linspace(0.0, 1.0, width), indexing="ij")

    depth = rng.uniform(0.05, 0.3)
    field = 1.0 - depth * (0.5 + 0.5 * _low_frequency(rng, yy, xx))

    extent = max(height, width)
    for _ in range(int(rng.integers(0, 3))):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        distance = (np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5)) * extent
        start = rng.uniform(-0.4, 0.2) * extent
        band = rng.uniform(0.1, 0.4) * extent
        softness = rng.uniform(8.0, 20.0)
        darkness = rng.uniform(0.15, 0.35)
        inside = _sigmoid((distance - start) / softness) * _sigmoid((start + band - distance) / softness)
        field = field * (1.0 - darkness * inside)

    return np.clip(field, SHADING_MIN, SHADING_MAX).astype(np.float32)
