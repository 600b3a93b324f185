"""
Field upsampling by ×8.

Convex upsampling: each fine pixel is a convex combination of the 3×3
coarse neighbourhood around its parent coarse pixel. Masks are stored as
h×w×9×64 where neighbour ``a*3 + b`` is coarse pixel (i+a-1, j+b-1) and
sub-pixel ``r*8 + s`` is fine pixel (8i+r, 8j+s). Neighbourhoods that reach
past the border read zeros.
"""

from typing import Union

import numpy as np

from ..errors import ContractError, DimensionError
from ..numerics import Tensor, as_tensor, softmax, stack
from .backward_map import resize_tensor

FACTOR = 8
NEIGHBOURS = 9
SUBPIXELS = FACTOR * FACTOR
MASK_TOLERANCE = 1e-4


def mask_from_logits(logits: Tensor) -> Tensor:
    """h×w×(9·64) logits → h×w×9×64 mask, softmax over the neighbourhood."""
    h, w, depth = logits.shape
    if depth != NEIGHBOURS * SUBPIXELS:
        raise DimensionError(f"mask logits need {NEIGHBOURS * SUBPIXELS} channels, got {depth}")
    return softmax(logits.reshape(h, w, NEIGHBOURS, SUBPIXELS), axes=2)


def validate_mask(mask: np.ndarray, tolerance: float = MASK_TOLERANCE) -> None:
    if mask.min() < -tolerance:
        raise ContractError(f"upsample mask has negative weight {mask.min():.3g}")
    deviation = np.abs(mask.sum(axis=2) - 1.0).max()
    if deviation > tolerance:
        raise ContractError(
            f"upsample mask weights must sum to 1 over the 3×3 neighbourhood; worst deviation {deviation:.3g}"
        )


def convex_upsample(coarse: Union[Tensor, np.ndarray], mask: Union[Tensor, np.ndarray]) -> Tensor:
    """h×w×C coarse field and h×w×9×64 mask → 8h×8w×C fine field."""
    coarse, mask = as_tensor(coarse), as_tensor(mask)
    if mask.ndim == 5:
        mask = mask.reshape(mask.shape[0], mask.shape[1], NEIGHBOURS, mask.shape[4])
    h, w, channels = coarse.shape
    if mask.shape != (h, w, NEIGHBOURS, SUBPIXELS):
        raise DimensionError(f"mask extents {mask.shape} do not match coarse field {coarse.shape}")
    validate_mask(mask.data)

    padded = coarse.pad(((1, 1), (1, 1), (0, 0)))
    neighbours = stack([padded[a : a + h, b : b + w] for a in range(3) for b in range(3)], axis=2)

    # (h, w, 9, 1, C) * (h, w, 9, 64, 1) summed over the neighbourhood
    fine = (neighbours.reshape(h, w, NEIGHBOURS, 1, channels) * mask.reshape(h, w, NEIGHBOURS, SUBPIXELS, 1)).sum(axis=2)
    fine = fine.reshape(h, w, FACTOR, FACTOR, channels).transpose(0, 2, 1, 3, 4)
    return fine.reshape(h * FACTOR, w * FACTOR, channels)


def bilinear_upsample_field(coarse: Union[Tensor, np.ndarray], factor: int = FACTOR) -> Tensor:
    """Corner-aligned bilinear ×factor upsample, differentiable."""
    coarse = as_tensor(coarse)
    h, w, _ = coarse.shape
    return resize_tensor(coarse, h * factor, w * factor)
