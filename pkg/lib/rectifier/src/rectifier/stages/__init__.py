"""Pipeline stages: segmentation → unwarping → illumination."""

from .illumination import IlluminationStage
from .segmentation import SegmentationStage
from .unwarping import UnwarpingStage, UnwarpResult

__all__ = [
    "SegmentationStage",
    "UnwarpingStage",
    "UnwarpResult",
    "IlluminationStage",
]
