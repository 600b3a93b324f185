"""Geometric unwarping stage."""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..fields import BackwardMap, resize_image, warp_image
from ..geotr import GeoModel
from ..geotr.unwarp import check_image, map_from_working
from ..pipeline.interfaces import PipelineContext, Stage


@dataclass
class UnwarpResult:
    image: np.ndarray
    bmap: BackwardMap


class UnwarpingStage(Stage):
    """
    Predicts a full-resolution backward map for each image and warps the original through it.

    With ``use_segmentation`` the masks of the ``segmentation`` stage are
    applied before prediction.
    """

    def __init__(self, geo: GeoModel, use_segmentation: bool = True):
        self.geo = geo
        self.use_segmentation = use_segmentation

    @property
    def name(self) -> str:
        return "unwarping"

    @property
    def dependencies(self) -> List[str]:
        return ["segmentation"] if self.use_segmentation else []

    def process(self, images: Dict[str, np.ndarray], context: PipelineContext) -> Dict[str, UnwarpResult]:
        size = self.geo.config.image_size
        results = {}
        for name, image in images.items():
            image = check_image(image)
            mask = context.get_stage_result("segmentation", name) if self.use_segmentation else None
            small = resize_image(image, size, size)
            bmap = map_from_working(small, self.geo, mask, image.shape[0], image.shape[1])
            results[name] = UnwarpResult(warp_image(image, bmap), bmap)
        return results
