"""L1 loss between predicted and ground-truth backward maps (mean reduction)."""

from typing import Union

import numpy as np

from ..errors import DimensionError
from ..fields import BackwardMap
from ..numerics import Tensor, as_tensor, l1_loss

MapLike = Union[Tensor, BackwardMap, np.ndarray]


def _field(value: MapLike) -> Union[Tensor, np.ndarray]:
    return value.coords if isinstance(value, BackwardMap) else value


def geo_loss(predicted: MapLike, truth: MapLike) -> Tensor:
    prediction = as_tensor(_field(predicted))
    target = _field(truth)
    target_shape = target.shape
    if prediction.shape != tuple(target_shape):
        raise DimensionError(f"predicted map {prediction.shape} and ground truth {tuple(target_shape)} differ")
    if not isinstance(target, Tensor):
        target = np.asarray(target, dtype=prediction.dtype)
    return l1_loss(prediction, target)
