"""
Training recipes: what one sample contributes to a batch loss.

A recipe owns a model and a dataset and turns (sample index, rng) into a
scalar loss tensor. The Trainer only sees this interface.

    GeoRecipe   background-excluded distorted page → ground-truth backward map (L1)
    IllRecipe   random patch of the shaded flat page → clean patch (L1 + α·perceptual)
    SegRecipe   distorted frame → document footprint (binary cross-entropy)
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ArgumentError, DimensionError
from ..fields import resize_image, resize_map
from ..geotr import GeoModel, geo_loss
from ..illtr import IllModel, PerceptualExtractor, ill_loss
from ..numerics import Module, Rng, Tensor
from ..segmenter import SegModel, bce_loss, remove_background
from ..synthdata import DatasetProvider


class Recipe(ABC):
    """A model, its training samples and its loss."""

    def __init__(self, model: Module, dataset: DatasetProvider, samples: Optional[int] = None):
        if len(dataset) == 0:
            raise ArgumentError("cannot train on an empty dataset")
        self.model = model
        self.dataset = dataset
        self.names = dataset.names()[:samples] if samples else dataset.names()
        self._cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.names)

    @property
    @abstractmethod
    def kind(self) -> str:
        """Checkpoint kind of the trained model."""
        pass

    @abstractmethod
    def prepare(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """(input, target) arrays for one sample, before any augmentation."""
        pass

    @abstractmethod
    def loss(self, index: int, rng: Rng) -> Tensor:
        """Scalar loss of one sample; ``rng`` drives any per-step augmentation."""
        pass

    def pair(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        if index not in self._cache:
            self._cache[index] = self.prepare(index)
        return self._cache[index]


class GeoRecipe(Recipe):
    def __init__(self, model: GeoModel, dataset: DatasetProvider, samples: Optional[int] = None):
        super().__init__(model, dataset, samples)

    @property
    def kind(self) -> str:
        return "geotr"

    def prepare(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        record = self.dataset.load(self.names[index])
        cfg = self.model.config
        image = record.distorted
        if cfg.use_preprocessing:
            image = remove_background(image, record.mask)
        image = resize_image(image, cfg.image_size, cfg.image_size).astype(np.float32)
        target = resize_map(record.bmap, cfg.image_size, cfg.image_size).coords.astype(np.float32)
        return image, target

    def loss(self, index: int, rng: Rng) -> Tensor:
        image, target = self.pair(index)
        return geo_loss(self.model(image), target)


class IllRecipe(Recipe):
    """
    Patch pairs cropped at random positions each step.

    Inputs are ground-truth unwarped pages that keep their shading, targets
    the clean pages, so the model learns illumination alone.
    """

    def __init__(
        self,
        model: IllModel,
        dataset: DatasetProvider,
        samples: Optional[int] = None,
        extractor: Optional[PerceptualExtractor] = None,
    ):
        super().__init__(model, dataset, samples)
        cfg = model.config
        if extractor is None and cfg.alpha > 0:
            extractor = PerceptualExtractor(cfg.perceptual_channels, cfg.perceptual_seed)
        self.extractor = extractor

    @property
    def kind(self) -> str:
        return "illtr"

    def prepare(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        record = self.dataset.load(self.names[index])
        size = self.model.config.patch_size
        height, width = record.shape
        if height < size or width < size:
            raise DimensionError(f"sample {self.names[index]} is {height}×{width}, smaller than a {size}px patch")
        return record.shaded_flat().astype(np.float32), np.asarray(record.clean, dtype=np.float32)

    def crop_origin(self, index: int, rng: Rng) -> Tuple[int, int]:
        image, _ = self.pair(index)
        size = self.model.config.patch_size
        top = int(rng.integers(0, image.shape[0] - size + 1))
        left = int(rng.integers(0, image.shape[1] - size + 1))
        return top, left

    def loss(self, index: int, rng: Rng) -> Tensor:
        image, target = self.pair(index)
        size = self.model.config.patch_size
        top, left = self.crop_origin(index, rng)
        window = (slice(top, top + size), slice(left, left + size))
        return ill_loss(self.model(image[window]), target[window], self.model.config.alpha, self.extractor)


class SegRecipe(Recipe):
    def __init__(self, model: SegModel, dataset: DatasetProvider, samples: Optional[int] = None):
        super().__init__(model, dataset, samples)

    @property
    def kind(self) -> str:
        return "segmenter"

    def prepare(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        record = self.dataset.load(self.names[index])
        size = self.model.config.image_size
        image = resize_image(record.distorted, size, size).astype(np.float32)
        mask = resize_image(record.mask.values.astype(np.float32), size, size) >= 0.5
        return image, mask.astype(np.uint8)

    def loss(self, index: int, rng: Rng) -> Tensor:
        image, mask = self.pair(index)
        return bce_loss(self.model(image), mask, mean=self.model.config.mean_reduction)
