"""Foreground segmentation stage: one DocMask per image at the geometric working resolution."""

from typing import Dict, Optional

import numpy as np

from ..fields import resize_image
from ..geotr.unwarp import check_image, document_mask
from ..pipeline.interfaces import PipelineContext, Stage
from ..segmenter import DocMask, SegModel


class SegmentationStage(Stage):
    def __init__(self, seg: SegModel, tau: Optional[float] = None, working_size: Optional[int] = None):
        self.seg = seg
        self.tau = tau
        self.working_size = working_size

    @property
    def name(self) -> str:
        return "segmentation"

    def process(self, images: Dict[str, np.ndarray], context: PipelineContext) -> Dict[str, DocMask]:
        size = self.seg.config.image_size
        return {
            name: document_mask(
                resize_image(check_image(image), size, size), self.seg, self.tau, working_size=self.working_size
            )
            for name, image in images.items()
        }
