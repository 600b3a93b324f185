"""Illumination correction transformer and patch crop/stitch."""

from .correct import correct_illumination
from .loss import ill_loss
from .model import IllModel, flatten_mini_patches, ill_forward, ill_head, unflatten_mini_patches
from .patches import PatchLayout, blend_weight_sum, crop_patches, plan_layout, stitch
from .perceptual import PerceptualExtractor, perceptual_features

__all__ = [
    "IllModel",
    "ill_head",
    "ill_forward",
    "flatten_mini_patches",
    "unflatten_mini_patches",
    "PatchLayout",
    "plan_layout",
    "crop_patches",
    "stitch",
    "blend_weight_sum",
    "PerceptualExtractor",
    "perceptual_features",
    "ill_loss",
    "correct_illumination",
]
