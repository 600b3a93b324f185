"""Backward maps, bilinear warping and field upsampling."""

from .backward_map import (
    BackwardMap,
    identity_map,
    interpolation_matrix,
    read_bmap,
    resize_image,
    resize_map,
    resize_tensor,
    write_bmap,
)
from .upsample import bilinear_upsample_field, convex_upsample, mask_from_logits, validate_mask
from .warp import bilinear_sample, warp_image, warp_tensor

__all__ = [
    "BackwardMap",
    "identity_map",
    "resize_map",
    "resize_image",
    "resize_tensor",
    "interpolation_matrix",
    "read_bmap",
    "write_bmap",
    "warp_image",
    "warp_tensor",
    "bilinear_sample",
    "convex_upsample",
    "bilinear_upsample_field",
    "mask_from_logits",
    "validate_mask",
]
