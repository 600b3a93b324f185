"""
Bilinear warping through a backward map.

``warp_image`` is the inference path (numpy in, numpy out). ``warp_tensor``
is the same sampler as a Tensor op, differentiable with respect to both the
source pixels and the map coordinates.

Sample positions are clamped to the source rectangle. Positions within
``SNAP_TOLERANCE`` pixels of an integer are snapped onto it, so sampling a
map that lands on the pixel grid reproduces source pixels exactly.
"""

from typing import Tuple, Union

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..numerics import Tensor, as_tensor
from ..numerics.tensor import accumulate_grad, make_result
from .backward_map import BackwardMap

SNAP_TOLERANCE = 1e-5


def _axis_weights(position: np.ndarray, extent: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(low index, high index, fraction, inside mask) along one axis."""
    inside = (position >= 0.0) & (position <= extent - 1)
    clamped = np.clip(position, 0.0, extent - 1)
    nearest = np.rint(clamped)
    clamped = np.where(np.abs(clamped - nearest) < SNAP_TOLERANCE, nearest, clamped)
    if extent == 1:
        zeros = np.zeros(clamped.shape, dtype=np.int64)
        return zeros, zeros, np.zeros(clamped.shape), np.zeros(clamped.shape, dtype=bool)
    low = np.minimum(np.floor(clamped).astype(np.int64), extent - 2)
    return low, low + 1, clamped - low, inside


def bilinear_sample(src: np.ndarray, x, y) -> np.ndarray:
    """
    Sample ``src`` (H×W or H×W×C) at pixel positions (x, y).

    Returns an array of shape ``broadcast(x, y).shape`` (+ (C,) for colour).
    """
    src = np.asarray(src)
    if src.size == 0:
        raise ArgumentError("cannot sample an empty image")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    height, width = src.shape[:2]
    x0, x1, fx, _ = _axis_weights(x, width)
    y0, y1, fy, _ = _axis_weights(y, height)
    if src.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
    bottom = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def warp_image(src: np.ndarray, bmap: BackwardMap) -> np.ndarray:
    """Resample ``src`` through ``bmap``; output has the map's extent."""
    src = np.asarray(src)
    if src.size == 0:
        raise ArgumentError("cannot warp an empty source image")
    height, width = src.shape[:2]
    out = bilinear_sample(src, bmap.u * (width - 1), bmap.v * (height - 1))
    return out.astype(src.dtype) if np.issubdtype(src.dtype, np.floating) else out


def warp_tensor(src: Union[Tensor, np.ndarray], coords: Tensor) -> Tensor:
    """
    Differentiable ``warp_image``.

    ``src`` is H×W×C, ``coords`` is H'×W'×2 normalized (u, v). Gradients with
    respect to coordinates vanish where the position is clamped.
    """
    src, coords = as_tensor(src), as_tensor(coords)
    if src.size == 0:
        raise ArgumentError("cannot warp an empty source image")
    if src.ndim != 3 or coords.ndim != 3 or coords.shape[2] != 2:
        raise DimensionError(f"warp_tensor expects H×W×C source and H'×W'×2 map, got {src.shape}, {coords.shape}")

    height, width, _ = src.shape
    x = coords.data[..., 0].astype(np.float64) * (width - 1)
    y = coords.data[..., 1].astype(np.float64) * (height - 1)
    x0, x1, fx, inside_x = _axis_weights(x, width)
    y0, y1, fy, inside_y = _axis_weights(y, height)
    fx_c, fy_c = fx[..., None], fy[..., None]

    s = src.data
    p00, p01, p10, p11 = s[y0, x0], s[y0, x1], s[y1, x0], s[y1, x1]
    top = p00 * (1.0 - fx_c) + p01 * fx_c
    bottom = p10 * (1.0 - fx_c) + p11 * fx_c
    out_data = (top * (1.0 - fy_c) + bottom * fy_c).astype(src.dtype)

    def backward(g):
        if src.requires_grad:
            dsrc = np.zeros_like(s)
            np.add.at(dsrc, (y0, x0), g * (1.0 - fx_c) * (1.0 - fy_c))
            np.add.at(dsrc, (y0, x1), g * fx_c * (1.0 - fy_c))
            np.add.at(dsrc, (y1, x0), g * (1.0 - fx_c) * fy_c)
            np.add.at(dsrc, (y1, x1), g * fx_c * fy_c)
            accumulate_grad(src, dsrc)
        if coords.requires_grad:
            d_fx = ((p01 - p00) * (1.0 - fy_c) + (p11 - p10) * fy_c) * g
            d_fy = (bottom - top) * g
            du = d_fx.sum(axis=-1) * (width - 1) * inside_x
            dv = d_fy.sum(axis=-1) * (height - 1) * inside_y
            accumulate_grad(coords, np.stack([du, dv], axis=-1))

    return make_result(out_data, (src, coords), backward, "warp")
