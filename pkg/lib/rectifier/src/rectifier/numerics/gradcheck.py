"""Central finite-difference gradient checks."""

from typing import Callable, Dict, Mapping, Optional

import numpy as np

from .rng import Rng
from .tensor import Tensor


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numerical_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, index, eps: float = 1e-6) -> float:
    original = tensor.data[index]
    tensor.data[index] = original + eps
    upper = float(loss_fn().data)
    tensor.data[index] = original - eps
    lower = float(loss_fn().data)
    tensor.data[index] = original
    return (upper - lower) / (2.0 * eps)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Mapping[str, Tensor],
    eps: float = 1e-6,
    samples: Optional[int] = None,
    rng: Optional[Rng] = None,
) -> Dict[str, float]:
    """
    Compare backprop gradients against central differences.

    ``loss_fn`` must rebuild the scalar loss from the tensors' current
    values. Checks every entry, or ``samples`` random entries per tensor.
    Returns the worst relative error per tensor name.
    """
    rng = rng or Rng(0)
    for tensor in tensors.values():
        tensor.grad = None
    loss_fn().backward()

    worst: Dict[str, float] = {}
    for name, tensor in tensors.items():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat_indices = np.arange(tensor.size)
        if samples is not None and samples < tensor.size:
            flat_indices = rng.spawn(name).choice(tensor.size, size=samples, replace=False)
        errors = []
        for flat in flat_indices:
            index = np.unravel_index(int(flat), tensor.shape)
            numeric = numerical_gradient(loss_fn, tensor, index, eps)
            errors.append(relative_error(float(analytic[index]), numeric))
        worst[name] = max(errors) if errors else 0.0
    return worst
