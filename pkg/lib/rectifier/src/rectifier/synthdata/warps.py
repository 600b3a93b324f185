"""
Smooth random page deformations expressed directly as backward maps.

A warp maps flat-page coordinates to distorted-image coordinates in three
steps: sinusoidal folds along each axis, a bowing curl that bends text
lines, then a perspective homography onto a jittered quadrilateral inset
from the frame. All coordinates are normalized to [0, 1].

Usage:
    params = sample_warp_params(Rng(7).spawn("warp"), SynthConfig())
    f_gt = gen_warp(params, 288, 288)
    forward, inside = invert_warp(f_gt, 288, 288)
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from utils import RunLog

from ..config import SynthConfig
from ..errors import ArgumentError, WarpError
from ..fields import BackwardMap, bilinear_sample, identity_map
from ..numerics import Rng

JACOBIAN_GRID = 32
MIN_JACOBIAN = 0.05
MAX_RETRIES = 5
DAMPING = 0.5
INVERT_ITERATIONS = 20
INVERT_TOLERANCE_PX = 0.05

_UNIT_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class Fold(BaseModel):
    axis: Literal["x", "y"] = "x"
    amplitude: float = 0.0
    frequency: float = Field(default=1.0, gt=0.0)
    phase: float = 0.0


class WarpParams(BaseModel):
    """Seeded deformation parameters; all-zero amplitudes give the identity."""

    inset: float = Field(default=0.0, ge=0.0, lt=0.5)
    corners: Tuple[float, float, float, float, float, float, float, float] = (0.0,) * 8
    folds: List[Fold] = Field(default_factory=list)
    curl: float = 0.0

    def damped(self, factor: float = DAMPING) -> "WarpParams":
        """Same warp with every amplitude scaled; the inset is kept."""
        return WarpParams(
            inset=self.inset,
            corners=tuple(c * factor for c in self.corners),
            folds=[fold.model_copy(update={"amplitude": fold.amplitude * factor}) for fold in self.folds],
            curl=self.curl * factor,
        )

    def quad(self) -> np.ndarray:
        """Destination corners (TL, TR, BR, BL) of the perspective step."""
        base = self.inset + (1.0 - 2.0 * self.inset) * _UNIT_CORNERS
        return base + np.asarray(self.corners).reshape(4, 2)


def sample_warp_params(rng: Rng, config: SynthConfig) -> WarpParams:
    folds = []
    for _ in range(int(rng.integers(1, config.max_folds + 1))):
        folds.append(
            Fold(
                axis=str(rng.choice(["x", "y"])),
                amplitude=float(rng.uniform(-1.0, 1.0) * config.fold_amplitude),
                frequency=float(rng.uniform(0.5, 2.0)),
                phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            )
        )
    return WarpParams(
        inset=config.inset,
        corners=tuple(float(c) for c in rng.uniform(-config.perspective, config.perspective, size=8)),
        folds=folds,
        curl=float(rng.uniform(-config.curl, config.curl)),
    )


def homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3×3 matrix taking the four ``src`` points onto ``dst``."""
    rows = []
    rhs = []
    for (x, y), (X, Y) in zip(src, dst):
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -x * X, -y * X])
        rows.append([0.0, 0.0, 0.0, x, y, 1.0, -x * Y, -y * Y])
        rhs.extend([X, Y])
    h = np.linalg.solve(np.array(rows), np.array(rhs))
    return np.append(h, 1.0).reshape(3, 3)


def _apply(params: WarpParams, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u = np.array(u, dtype=np.float64)
    v = np.array(v, dtype=np.float64)
    for fold in params.folds:
        if fold.axis == "x":
            u = u + fold.amplitude * np.sin(2.0 * np.pi * fold.frequency * u + fold.phase)
        else:
            v = v + fold.amplitude * np.sin(2.0 * np.pi * fold.frequency * v + fold.phase)
    if params.curl:
        # lines bow most at mid-width, more strongly near the top edge
        v = v + params.curl * 4.0 * u * (1.0 - u) * (1.0 - 0.5 * v)

    quad = params.quad()
    if np.array_equal(quad, _UNIT_CORNERS):
        return u, v
    h = homography(_UNIT_CORNERS, quad)
    w = h[2, 0] * u + h[2, 1] * v + h[2, 2]
    return (h[0, 0] * u + h[0, 1] * v + h[0, 2]) / w, (h[1, 0] * u + h[1, 1] * v + h[1, 2]) / w


def jacobian_determinants(params: WarpParams, grid: int = JACOBIAN_GRID) -> np.ndarray:
    coords = identity_map(grid, grid)
    u, v = _apply(params, coords.u, coords.v)
    spacing = 1.0 / (grid - 1)
    du_dy, du_dx = np.gradient(u, spacing)
    dv_dy, dv_dx = np.gradient(v, spacing)
    return du_dx * dv_dy - du_dy * dv_dx


def gen_warp(params: WarpParams, height: int, width: int, log: Optional[RunLog] = None) -> BackwardMap:
    """
    Backward map of ``params`` at height×width.

    A warp whose sampled Jacobian determinant drops to MIN_JACOBIAN is
    damped and rebuilt, at most MAX_RETRIES times.

    Raises:
        WarpError: If no damped variant is diffeomorphic
    """
    for attempt in range(MAX_RETRIES + 1):
        worst = float(jacobian_determinants(params).min())
        if worst > MIN_JACOBIAN:
            base = identity_map(height, width)
            u, v = _apply(params, base.u, base.v)
            return BackwardMap.from_uv(u, v)
        if log is not None:
            log.warn(f"warp Jacobian {worst:.3f} <= {MIN_JACOBIAN}; damping (attempt {attempt + 1})")
        params = params.damped()
    raise WarpError(f"warp is not diffeomorphic after {MAX_RETRIES} damped retries")


def _map_gradients(bmap: BackwardMap) -> np.ndarray:
    """H×W×4 array of (du/dx, du/dy, dv/dx, dv/dy) in normalized units."""
    sy = 1.0 / max(bmap.height - 1, 1)
    sx = 1.0 / max(bmap.width - 1, 1)
    du_dy, du_dx = np.gradient(bmap.u, sy, sx)
    dv_dy, dv_dx = np.gradient(bmap.v, sy, sx)
    return np.stack([du_dx, du_dy, dv_dx, dv_dy], axis=-1)


def invert_warp(
    bmap: BackwardMap,
    height: int,
    width: int,
    iterations: int = INVERT_ITERATIONS,
) -> Tuple[BackwardMap, np.ndarray]:
    """
    Numerically invert a backward map with Newton steps.

    For every pixel of a height×width distorted image, finds the flat-page
    position the map sends there. Outside the page the map is extended
    linearly from its border.

    Returns:
        (map from distorted pixels to flat-page coordinates,
         boolean mask of pixels that land on the page and converged)
    """
    if bmap.height < 2 or bmap.width < 2:
        raise WarpError(f"cannot invert a {bmap.height}×{bmap.width} map")
    if iterations < 1:
        raise ArgumentError(f"iterations must be >= 1, got {iterations}")
    target = identity_map(height, width)
    qu, qv = target.u, target.v
    grads = _map_gradients(bmap)
    pu, pv = qu.copy(), qv.copy()
    scale_x, scale_y = bmap.width - 1, bmap.height - 1

    for _ in range(iterations):
        cu, cv = np.clip(pu, 0.0, 1.0), np.clip(pv, 0.0, 1.0)
        x, y = cu * scale_x, cv * scale_y
        at = bilinear_sample(bmap.coords, x, y)
        j = bilinear_sample(grads, x, y)
        fu = at[..., 0] + j[..., 0] * (pu - cu) + j[..., 1] * (pv - cv)
        fv = at[..., 1] + j[..., 2] * (pu - cu) + j[..., 3] * (pv - cv)
        ru, rv = fu - qu, fv - qv
        det = j[..., 0] * j[..., 3] - j[..., 1] * j[..., 2]
        det = np.where(np.abs(det) < 1e-9, 1e-9, det)
        pu = np.clip(pu - (j[..., 3] * ru - j[..., 1] * rv) / det, -0.5, 1.5)
        pv = np.clip(pv - (-j[..., 2] * ru + j[..., 0] * rv) / det, -0.5, 1.5)

    residual = np.hypot(ru * (width - 1), rv * (height - 1))
    on_page = (pu >= 0.0) & (pu <= 1.0) & (pv >= 0.0) & (pv <= 1.0)
    return BackwardMap.from_uv(pu, pv), on_page & (residual < INVERT_TOLERANCE_PX)
