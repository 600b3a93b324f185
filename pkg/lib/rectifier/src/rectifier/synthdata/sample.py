"""
Synthetic training samples.

gen_sample renders a page, builds a ground-truth backward map, distorts the
page through the numerically inverted map, shades it, and composites it on a
procedural background. A record is only returned once unwarping its own
distorted image, shading included, with its ground-truth map reproduces the
clean page.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils import RunLog

from ..config import SynthConfig
from ..errors import WarpError
from ..fields import BackwardMap, warp_image
from ..metrics.ssim import ms_ssim, to_grayscale
from ..numerics import Rng
from ..segmenter import DocMask
from .backgrounds import gen_background
from .document import PageLayout, render_document
from .shading import gen_shading
from .warps import MAX_RETRIES, gen_warp, invert_warp, sample_warp_params

ROUNDTRIP_MIN_MS_SSIM = 0.9
SHADING_RETRIES = 3


@dataclass
class SampleRecord:
    seed: int
    distorted: np.ndarray
    bmap: BackwardMap
    mask: DocMask
    clean: np.ndarray
    shading: np.ndarray
    text: str
    layout: PageLayout

    @property
    def shape(self):
        return self.distorted.shape[:2]

    def unshaded(self) -> np.ndarray:
        """Distorted image with the shading field divided out."""
        return np.clip(self.distorted / self.shading[..., None], 0.0, 1.0)

    def shaded_flat(self) -> np.ndarray:
        """Distorted image unwarped by the ground truth; shading retained."""
        return warp_image(self.distorted, self.bmap)

    def roundtrip_score(self) -> float:
        """MS-SSIM between the ground-truth unwarp of the distorted image and the clean page."""
        return ms_ssim(to_grayscale(self.shaded_flat()), to_grayscale(self.clean))

    def geometry_score(self) -> float:
        """Round-trip MS-SSIM with the shading divided out; isolates the warp."""
        restored = warp_image(self.unshaded(), self.bmap)
        return ms_ssim(to_grayscale(restored), to_grayscale(self.clean))


def soften_shading(shading: np.ndarray, depth: float) -> np.ndarray:
    """Scale the shading's darkening by ``depth``; 0 gives a flat field."""
    return (1.0 - depth * (1.0 - shading)).astype(np.float32)


def gen_sample(seed: int, config: SynthConfig = SynthConfig(), log: Optional[RunLog] = None) -> SampleRecord:
    """
    Build one record from ``seed``.

    A warp whose unshaded round trip fails is damped and rebuilt. Once the
    warp passes, shading that pulls the shaded round trip under the bar is
    halved up to SHADING_RETRIES times, then dropped.

    Raises:
        WarpError: If neither the sampled warp nor its damped variants pass
                   the round-trip check
    """
    rng = Rng(seed)
    height, width = config.height, config.width
    clean, text, layout = render_document(seed, height, width)
    full_shading = gen_shading(seed, height, width) if config.shading else np.ones((height, width), np.float32)
    if config.background:
        background = gen_background(rng.spawn("background"), height, width)
    else:
        background = np.zeros((height, width, 3), np.float32)

    params = sample_warp_params(rng.spawn("warp"), config)
    for attempt in range(MAX_RETRIES + 1):
        bmap = gen_warp(params, height, width, log)
        forward, on_page = invert_warp(bmap, height, width)
        flat_page = warp_image(clean, forward)

        def compose(shading: np.ndarray) -> SampleRecord:
            page = flat_page * shading[..., None]
            return SampleRecord(
                seed=seed,
                distorted=np.where(on_page[..., None], page, background).astype(np.float32),
                bmap=bmap,
                mask=DocMask(on_page.astype(np.uint8)),
                clean=clean,
                shading=shading,
                text=text,
                layout=layout,
            )

        record = compose(full_shading)
        score = record.geometry_score()
        if score <= ROUNDTRIP_MIN_MS_SSIM:
            if log is not None:
                log.warn(f"sample {seed}: round-trip MS-SSIM {score:.3f}; damping warp (attempt {attempt + 1})")
            params = params.damped()
            continue

        depth = 1.0
        for _ in range(SHADING_RETRIES):
            score = record.roundtrip_score()
            if score > ROUNDTRIP_MIN_MS_SSIM:
                return record
            depth *= 0.5
            if log is not None:
                log.warn(f"sample {seed}: shaded round-trip MS-SSIM {score:.3f}; shading depth {depth:g}")
            record = compose(soften_shading(full_shading, depth))
        if record.roundtrip_score() > ROUNDTRIP_MIN_MS_SSIM:
            return record
        # flat shading leaves only the warp, which already passed
        return compose(np.ones((height, width), np.float32))
    raise WarpError(f"sample {seed} failed the round-trip check after {MAX_RETRIES} damped retries")
