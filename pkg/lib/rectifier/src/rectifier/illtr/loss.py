"""L1 plus α-weighted perceptual L1 over the extractor taps."""

from typing import Optional, Union

import numpy as np

from ..errors import DimensionError
from ..numerics import Tensor, as_tensor, l1_loss, no_grad
from .perceptual import PerceptualExtractor


def ill_loss(
    prediction: Union[Tensor, np.ndarray],
    target: Union[Tensor, np.ndarray],
    alpha: float,
    extractor: Optional[PerceptualExtractor],
) -> Tensor:
    prediction = as_tensor(prediction)
    target_data = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=prediction.dtype)
    if prediction.shape != target_data.shape:
        raise DimensionError(f"prediction {prediction.shape} and target {target_data.shape} differ")

    loss = l1_loss(prediction, target_data)
    if alpha == 0.0 or extractor is None:
        return loss

    with no_grad():
        target_taps = [tap.data for tap in extractor(target_data)]
    for tap, target_tap in zip(extractor(prediction), target_taps):
        loss = loss + alpha * l1_loss(tap, target_tap)
    return loss
