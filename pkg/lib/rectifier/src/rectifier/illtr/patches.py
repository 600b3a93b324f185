"""
Overlapping patch crops and feathered stitching.

Patch starts advance by ``patch - round(overlap * patch)``; the last start in
each direction is clamped so the final patch ends at the border. Inputs
smaller than one patch are edge-replicated up to the patch size first.

Stitching blends overlaps with linear ramps: a patch's weight rises from the
edges it shares with a neighbour and is flat elsewhere (also at the image
border). Accumulated weights are divided out, so blend weights sum to 1.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..config import IllConfig
from ..errors import ArgumentError, DimensionError


@dataclass(frozen=True)
class PatchLayout:
    height: int
    width: int
    patch: int
    overlap: int
    row_starts: Tuple[int, ...]
    col_starts: Tuple[int, ...]

    @property
    def stride(self) -> int:
        return self.patch - self.overlap

    @property
    def padded_height(self) -> int:
        return max(self.height, self.patch)

    @property
    def padded_width(self) -> int:
        return max(self.width, self.patch)

    @property
    def origins(self) -> List[Tuple[int, int]]:
        return [(r, c) for r in self.row_starts for c in self.col_starts]

    def __len__(self) -> int:
        return len(self.row_starts) * len(self.col_starts)


def _starts(length: int, patch: int, stride: int) -> Tuple[int, ...]:
    if length <= patch:
        return (0,)
    starts = list(range(0, length - patch + 1, stride))
    if starts[-1] != length - patch:
        starts.append(length - patch)
    return tuple(starts)


def plan_layout(height: int, width: int, patch: int, overlap_fraction: float) -> PatchLayout:
    if height < 1 or width < 1:
        raise ArgumentError(f"cannot crop an empty {height}×{width} image")
    if not 0.0 <= overlap_fraction < 0.5:
        raise ArgumentError(f"overlap must lie in [0, 0.5), got {overlap_fraction}")
    overlap = int(round(overlap_fraction * patch))
    stride = patch - overlap
    return PatchLayout(
        height=height,
        width=width,
        patch=patch,
        overlap=overlap,
        row_starts=_starts(max(height, patch), patch, stride),
        col_starts=_starts(max(width, patch), patch, stride),
    )


def crop_patches(image: np.ndarray, cfg: IllConfig) -> Tuple[np.ndarray, PatchLayout]:
    """Return (N×P×P×C patches, layout), row-major over the patch grid."""
    image = np.asarray(image)
    if image.ndim != 3:
        raise DimensionError(f"expected an H×W×C image, got {image.shape}")
    layout = plan_layout(image.shape[0], image.shape[1], cfg.patch_size, cfg.overlap)
    padded = np.pad(
        image,
        ((0, layout.padded_height - layout.height), (0, layout.padded_width - layout.width), (0, 0)),
        mode="edge",
    )
    p = layout.patch
    patches = np.stack([padded[r : r + p, c : c + p] for r, c in layout.origins])
    return patches, layout


def _ramp(starts: Sequence[int], index: int, patch: int) -> np.ndarray:
    """1-D weights for patch ``index`` along one axis."""
    weights = np.ones(patch)
    start = starts[index]
    if index > 0:
        shared = starts[index - 1] + patch - start
        if shared > 0:
            weights[:shared] = np.minimum(weights[:shared], np.arange(1, shared + 1) / (shared + 1))
    if index < len(starts) - 1:
        shared = start + patch - starts[index + 1]
        if shared > 0:
            weights[patch - shared :] = np.minimum(
                weights[patch - shared :], np.arange(shared, 0, -1) / (shared + 1)
            )
    return weights


def _patch_weights(layout: PatchLayout) -> List[np.ndarray]:
    rows = [_ramp(layout.row_starts, i, layout.patch) for i in range(len(layout.row_starts))]
    cols = [_ramp(layout.col_starts, j, layout.patch) for j in range(len(layout.col_starts))]
    return [np.outer(r, c) for r in rows for c in cols]


def stitch(patches: Sequence[np.ndarray], layout: PatchLayout) -> np.ndarray:
    """Blend patches back into an image of the layout's source extent."""
    if len(patches) != len(layout):
        raise ArgumentError(f"layout has {len(layout)} patches, got {len(patches)}")
    p = layout.patch
    first = np.asarray(patches[0])
    channels = first.shape[2] if first.ndim == 3 else 1

    accumulated = np.zeros((layout.padded_height, layout.padded_width, channels))
    total = np.zeros((layout.padded_height, layout.padded_width, 1))
    for patch, (r, c), weight in zip(patches, layout.origins, _patch_weights(layout)):
        patch = np.asarray(patch, dtype=np.float64).reshape(p, p, channels)
        accumulated[r : r + p, c : c + p] += patch * weight[..., None]
        total[r : r + p, c : c + p] += weight[..., None]

    out = (accumulated / total)[: layout.height, : layout.width]
    if first.ndim == 2:
        out = out[..., 0]
    return out.astype(first.dtype if np.issubdtype(first.dtype, np.floating) else np.float64)


def blend_weight_sum(layout: PatchLayout) -> np.ndarray:
    """Per-pixel sum of normalized blend weights (1 wherever a patch lands)."""
    p = layout.patch
    weights = _patch_weights(layout)
    total = np.zeros((layout.padded_height, layout.padded_width))
    for (r, c), weight in zip(layout.origins, weights):
        total[r : r + p, c : c + p] += weight
    normalized = np.zeros_like(total)
    for (r, c), weight in zip(layout.origins, weights):
        normalized[r : r + p, c : c + p] += weight / total[r : r + p, c : c + p]
    return normalized[: layout.height, : layout.width]
