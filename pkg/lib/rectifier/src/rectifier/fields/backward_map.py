"""
Backward Mapping Fields

A BackwardMap gives, for every output pixel, the source coordinate to sample
from. Coordinates are normalized: u = 0 is the left source column and u = 1
the right one (likewise v for rows), so a map keeps its meaning when it is
resized to a different output resolution.

File format (BMAP):
    b"BMAP" | u32 height | u32 width | u8 flag (1 = normalized) |
    height*width (u, v) float32 pairs, row-major, little-endian
"""

from dataclasses import dataclass
from pathlib import Path
import struct
from typing import Tuple, Union

import numpy as np

from ..errors import ArgumentError, DataError, DimensionError
from ..numerics import Tensor, as_tensor

BMAP_MAGIC = b"BMAP"
_HEADER = struct.Struct("<4sIIB")


@dataclass
class BackwardMap:
    """Per-pixel normalized source coordinates, stored as H×W×2 (u, v)."""

    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 3 or self.coords.shape[2] != 2 or 0 in self.coords.shape:
            raise DimensionError(f"backward map must be H×W×2 with H, W >= 1, got {self.coords.shape}")

    @classmethod
    def from_uv(cls, u: np.ndarray, v: np.ndarray) -> "BackwardMap":
        u, v = np.asarray(u), np.asarray(v)
        if u.shape != v.shape:
            raise DimensionError(f"u {u.shape} and v {v.shape} extents differ")
        return cls(np.stack([u, v], axis=-1))

    @property
    def u(self) -> np.ndarray:
        return self.coords[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.coords[..., 1]

    @property
    def height(self) -> int:
        return self.coords.shape[0]

    @property
    def width(self) -> int:
        return self.coords.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coords.shape[:2]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coords)))

    def as_tensor(self, dtype=np.float32) -> Tensor:
        return Tensor(self.coords.astype(dtype))


def _check_extent(height: int, width: int) -> None:
    if height < 1 or width < 1:
        raise ArgumentError(f"map extents must be >= 1, got {height}×{width}")


def _axis_coordinates(n: int) -> np.ndarray:
    # linspace hits both endpoints exactly; a single sample sits at 0
    return np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)


def identity_map(height: int, width: int) -> BackwardMap:
    _check_extent(height, width)
    u, v = np.meshgrid(_axis_coordinates(width), _axis_coordinates(height))
    return BackwardMap.from_uv(u, v)


def _resize_weights(n_out: int, n_in: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Corner-aligned linear interpolation: (low index, high index, fraction)."""
    if n_in == 1:
        zeros = np.zeros(n_out, dtype=np.int64)
        return zeros, zeros, np.zeros(n_out)
    if n_out == 1:
        positions = np.zeros(1)
    else:
        positions = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    low = np.clip(np.floor(positions).astype(np.int64), 0, n_in - 2)
    frac = positions - low
    return low, low + 1, frac


def interpolation_matrix(n_out: int, n_in: int) -> np.ndarray:
    """n_out×n_in matrix R with R @ signal = corner-aligned linear resize."""
    low, high, frac = _resize_weights(n_out, n_in)
    matrix = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(matrix, (rows, low), 1.0 - frac)
    np.add.at(matrix, (rows, high), frac)
    return matrix


def resize_image(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Corner-aligned bilinear resize of an H×W or H×W×C array."""
    _check_extent(height, width)
    image = np.asarray(image)
    if image.size == 0:
        raise ArgumentError("cannot resize an empty image")
    if image.shape[:2] == (height, width):
        return image.copy()

    low, high, frac = _resize_weights(height, image.shape[0])
    frac = frac.reshape((-1,) + (1,) * (image.ndim - 1))
    rows = image[low] * (1.0 - frac) + image[high] * frac

    low, high, frac = _resize_weights(width, image.shape[1])
    frac = frac.reshape((1, -1) + (1,) * (image.ndim - 2))
    out = rows[:, low] * (1.0 - frac) + rows[:, high] * frac
    return out.astype(image.dtype if np.issubdtype(image.dtype, np.floating) else np.float64)


def resize_tensor(x: Union[Tensor, np.ndarray], height: int, width: int) -> Tensor:
    """Differentiable corner-aligned bilinear resize of an H×W×C tensor."""
    _check_extent(height, width)
    x = as_tensor(x)
    h, w, c = x.shape
    rows = as_tensor(interpolation_matrix(height, h).astype(x.dtype))
    cols = as_tensor(interpolation_matrix(width, w).astype(x.dtype))
    out = (rows @ x.reshape(h, w * c)).reshape(height, w, c)
    out = (cols @ out.transpose(1, 0, 2).reshape(w, height * c)).reshape(width, height, c)
    return out.transpose(1, 0, 2)


def resize_map(bmap: BackwardMap, height: int, width: int) -> BackwardMap:
    """Bilinear resize; normalized coordinates need no value rescaling."""
    if bmap.shape == (height, width):
        return BackwardMap(bmap.coords.copy())
    return BackwardMap(resize_image(bmap.coords, height, width))


def write_bmap(path: Union[str, Path], bmap: BackwardMap) -> None:
    path = Path(path)
    payload = np.ascontiguousarray(bmap.coords, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as handle:
            handle.write(_HEADER.pack(BMAP_MAGIC, bmap.height, bmap.width, 1))
            handle.write(payload)
    except OSError as exc:
        raise DataError(f"cannot write backward map to {path}: {exc}") from exc


def read_bmap(path: Union[str, Path]) -> BackwardMap:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read backward map {path}: {exc}") from exc

    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated BMAP header")
    magic, height, width, flag = _HEADER.unpack_from(blob)
    if magic != BMAP_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {BMAP_MAGIC!r}")
    if flag != 1:
        raise DataError(f"{path}: only normalized maps (flag 1) are supported, got flag {flag}")
    expected = _HEADER.size + height * width * 2 * 4
    if len(blob) != expected:
        raise DataError(f"{path}: expected {expected} bytes for {height}×{width} map, found {len(blob)}")

    coords = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(height, width, 2)
    return BackwardMap(coords.astype(np.float64))
