"""Illumination correction stage: crop → correct → stitch on each unwarped image."""

from typing import Dict, List

import numpy as np

from ..illtr import IllModel, correct_illumination
from ..pipeline.interfaces import PipelineContext, Stage


class IlluminationStage(Stage):
    def __init__(self, ill: IllModel, threads: int = 1):
        self.ill = ill
        self.threads = threads

    @property
    def name(self) -> str:
        return "illumination"

    @property
    def dependencies(self) -> List[str]:
        return ["unwarping"]

    def process(self, images: Dict[str, np.ndarray], context: PipelineContext) -> Dict[str, np.ndarray]:
        results = {}
        for name in images:
            unwarped = context.get_stage_result("unwarping", name)
            results[name] = correct_illumination(unwarped.image, self.ill, threads=self.threads)
        return results
