"""
Dense correspondence by coarse-to-fine block matching, and Local Distortion.

For each pyramid level (coarsest first) the image is tiled into
``patch``×``patch`` blocks. Every block searches integer offsets within
``radius`` of its inherited estimate and keeps the one minimizing

    mean |ref_block - target_block(offset)| + λ · ‖offset − neighbour mean‖₁ / patch

where the neighbour mean is over the 4-connected block estimates. Candidates
are visited by increasing displacement and only a strictly lower cost
replaces the incumbent, so the zero offset wins every tie. Block flows are
bilinearly interpolated to every pixel and doubled into the next level.

Sign convention: target(p + flow(p)) matches ref(p).

LD values from this matcher are comparable between runs of this library
only; they are not SIFT-flow distances.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ArgumentError, DimensionError
from ..fields import bilinear_sample


@dataclass
class DenseFlow:
    """Per-pixel displacement in pixels."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.dx = np.asarray(self.dx, dtype=np.float64)
        self.dy = np.asarray(self.dy, dtype=np.float64)
        if self.dx.shape != self.dy.shape or self.dx.ndim != 2:
            raise DimensionError(f"flow components must share an H×W extent, got {self.dx.shape}, {self.dy.shape}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.dx.shape

    def swapped(self) -> "DenseFlow":
        return DenseFlow(self.dy, self.dx)


def _downsample(image: np.ndarray) -> np.ndarray:
    h, w = (image.shape[0] // 2) * 2, (image.shape[1] // 2) * 2
    return image[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def _candidate_order(radius: int) -> np.ndarray:
    """Flat indices into the (2r+1)² search window, nearest offsets first."""
    offsets = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(offsets, offsets, indexing="ij")
    distance = dx**2 + dy**2
    return np.lexsort((dx.ravel(), dy.ravel(), distance.ravel()))


def _block_centres(count: int, patch: int) -> np.ndarray:
    return np.arange(count) * patch + (patch - 1) / 2.0


def _densify(block_flow: np.ndarray, height: int, width: int, patch: int) -> np.ndarray:
    """Bilinear interpolation of block-centre flows to every pixel."""
    ys = (np.arange(height) - (patch - 1) / 2.0) / patch
    xs = (np.arange(width) - (patch - 1) / 2.0) / patch
    grid_x, grid_y = np.meshgrid(xs, ys)
    return bilinear_sample(block_flow, grid_x, grid_y)


def _match_level(
    ref: np.ndarray,
    target: np.ndarray,
    init: np.ndarray,
    patch: int,
    radius: int,
    smoothness: float,
) -> np.ndarray:
    """Refine integer block flows (by×bx×2, (dx, dy)) on one level."""
    height, width = ref.shape
    flow = np.rint(init).astype(np.int64)
    order = _candidate_order(radius)
    span = np.arange(-radius, radius + patch)
    offsets = np.arange(-radius, radius + 1)
    off_y, off_x = np.meshgrid(offsets, offsets, indexing="ij")
    blocks_y, blocks_x = flow.shape[:2]

    for by in range(blocks_y):
        for bx in range(blocks_x):
            y0, x0 = by * patch, bx * patch
            ref_block = ref[y0 : y0 + patch, x0 : x0 + patch]
            base_x, base_y = flow[by, bx]

            rows = np.clip(y0 + base_y + span, 0, height - 1)
            cols = np.clip(x0 + base_x + span, 0, width - 1)
            region = target[np.ix_(rows, cols)]
            windows = sliding_window_view(region, (patch, patch))
            costs = np.abs(windows - ref_block).mean(axis=(2, 3))

            neighbours = [
                flow[ny, nx]
                for ny, nx in ((by - 1, bx), (by + 1, bx), (by, bx - 1), (by, bx + 1))
                if 0 <= ny < blocks_y and 0 <= nx < blocks_x
            ]
            if neighbours:
                mean_x, mean_y = np.mean(neighbours, axis=0)
                deviation = np.abs(base_x + off_x - mean_x) + np.abs(base_y + off_y - mean_y)
                costs = costs + smoothness * deviation / patch

            best = order[np.argmin(costs.ravel()[order])]
            flow[by, bx] = (base_x + off_x.ravel()[best], base_y + off_y.ravel()[best])
    return flow.astype(np.float64)


def dense_flow(
    ref: np.ndarray,
    target: np.ndarray,
    levels: int = 3,
    patch: int = 8,
    radius: int = 4,
    smoothness: float = 0.5,
) -> DenseFlow:
    ref = np.asarray(ref, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if ref.ndim != 2 or ref.shape != target.shape:
        raise DimensionError(f"dense_flow needs equal grayscale extents, got {ref.shape} and {target.shape}")
    if min(ref.shape) < patch:
        raise ArgumentError(f"images {ref.shape} are smaller than one {patch}px block")
    if levels < 1:
        raise ArgumentError(f"levels must be >= 1, got {levels}")

    pyramid: List[Tuple[np.ndarray, np.ndarray]] = [(ref, target)]
    while len(pyramid) < levels and min(pyramid[-1][0].shape) // 2 >= patch:
        r, t = pyramid[-1]
        pyramid.append((_downsample(r), _downsample(t)))

    dense = None
    for level_ref, level_target in reversed(pyramid):
        height, width = level_ref.shape
        blocks_y, blocks_x = height // patch, width // patch
        if dense is None:
            init = np.zeros((blocks_y, blocks_x, 2))
        else:
            # coarse dense flow, doubled, sampled at this level's block centres
            cy, cx = np.meshgrid(_block_centres(blocks_y, patch), _block_centres(blocks_x, patch), indexing="ij")
            init = 2.0 * bilinear_sample(dense, (cx - 0.5) / 2.0, (cy - 0.5) / 2.0)
        block_flow = _match_level(level_ref, level_target, init, patch, radius, smoothness)
        dense = _densify(block_flow, height, width, patch)

    return DenseFlow(dense[..., 0], dense[..., 1])


def local_distortion(flow: DenseFlow) -> float:
    """Mean per-pixel displacement magnitude."""
    return float(np.mean(np.sqrt(flow.dx**2 + flow.dy**2)))
