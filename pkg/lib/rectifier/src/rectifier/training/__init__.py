"""Training loop and per-model recipes."""

from .recipes import GeoRecipe, IllRecipe, Recipe, SegRecipe
from .trainer import LOSS_LOG, LR_LOG, Trainer, TrainResult

__all__ = [
    "Recipe",
    "GeoRecipe",
    "IllRecipe",
    "SegRecipe",
    "Trainer",
    "TrainResult",
    "LOSS_LOG",
    "LR_LOG",
]
