"""
Parameter containers.

A Module owns Parameters and sub-Modules as plain attributes (lists of
modules are allowed). Parameter names are dotted attribute paths, e.g.
``encoder.2.attention.q.weight``; they are the tensor names written to
checkpoints.
"""

from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from ..errors import CheckpointError
from . import functional as F
from .rng import Rng
from .tensor import DEFAULT_DTYPE, Tensor


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data, requires_grad: bool = True):
        super().__init__(np.array(data, copy=True), requires_grad=requires_grad)


def uniform_parameter(rng: Rng, shape: Tuple[int, ...], fan_in: int) -> Parameter:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return Parameter(rng.uniform(-bound, bound, size=shape).astype(DEFAULT_DTYPE))


class Module:
    """Base class for everything that holds Parameters."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            path = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{index}.")
                    elif isinstance(item, Parameter):
                        yield f"{path}.{index}", item

    def parameters(self) -> Dict[str, Parameter]:
        return dict(self.named_parameters())

    def num_parameters(self) -> int:
        return sum(p.size for _, p in self.named_parameters())

    def zero_grad(self) -> None:
        for _, param in self.named_parameters():
            param.grad = None

    def freeze(self) -> "Module":
        for _, param in self.named_parameters():
            param.requires_grad = False
        return self

    def astype(self, dtype) -> "Module":
        """Cast every parameter in place (64-bit for gradient checks)."""
        for _, param in self.named_parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        own = self.parameters()
        missing = sorted(set(own) - set(state))
        if missing:
            raise CheckpointError(
                f"checkpoint is missing tensor '{missing[0]}' ({len(missing)} missing in total)",
                tensor=missing[0],
            )
        unexpected = sorted(set(state) - set(own))
        if strict and unexpected:
            raise CheckpointError(
                f"checkpoint has unexpected tensor '{unexpected[0]}' ({len(unexpected)} unexpected in total)",
                tensor=unexpected[0],
            )
        for name, param in own.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise CheckpointError(
                    f"tensor '{name}' has extents {value.shape}, model expects {param.shape}",
                    tensor=name,
                )
        for name, param in own.items():
            param.data = np.asarray(state[name]).astype(param.dtype, copy=True)
            param.grad = None


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: Rng):
        self.weight = uniform_parameter(rng, (in_features, out_features), in_features)
        self.bias = uniform_parameter(rng, (out_features,), in_features)

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: Rng, stride: int = 1):
        fan_in = kernel_size * kernel_size * in_channels
        self.stride = stride
        self.weight = uniform_parameter(rng, (kernel_size, kernel_size, in_channels, out_channels), fan_in)
        self.bias = uniform_parameter(rng, (out_channels,), fan_in)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride)


class LayerNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-6):
        self.eps = eps
        self.gain = Parameter(np.ones(channels, dtype=DEFAULT_DTYPE))
        self.bias = Parameter(np.zeros(channels, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain, self.bias, self.eps)


class InstanceNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        self.eps = eps
        self.gain = Parameter(np.ones(channels, dtype=DEFAULT_DTYPE))
        self.bias = Parameter(np.zeros(channels, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return F.instance_norm(x, self.gain, self.bias, self.eps)


class MultiHeadAttention(Module):
    def __init__(self, channels: int, heads: int, rng: Rng):
        self.heads = heads
        self.q = Linear(channels, channels, rng)
        self.k = Linear(channels, channels, rng)
        self.v = Linear(channels, channels, rng)
        self.o = Linear(channels, channels, rng)

    def projections(self) -> Dict[str, Tensor]:
        return {
            "wq": self.q.weight, "bq": self.q.bias,
            "wk": self.k.weight, "bk": self.k.bias,
            "wv": self.v.weight, "bv": self.v.bias,
            "wo": self.o.weight, "bo": self.o.bias,
        }

    def forward(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        return F.multi_head_attention(q, k, v, self.projections(), self.heads)


class FeedForward(Module):
    def __init__(self, channels: int, hidden: int, rng: Rng):
        self.fc1 = Linear(channels, hidden, rng)
        self.fc2 = Linear(hidden, channels, rng)

    def forward(self, x: Tensor) -> Tensor:
        weights = {"w1": self.fc1.weight, "b1": self.fc1.bias, "w2": self.fc2.weight, "b2": self.fc2.bias}
        return F.feed_forward(x, weights)


class Embedding(Module):
    """Learned N×c table, input independent."""

    def __init__(self, rows: int, channels: int, rng: Rng, scale: float = 0.02):
        self.weight = Parameter(rng.normal(0.0, scale, size=(rows, channels)).astype(DEFAULT_DTYPE))

    def forward(self) -> Tensor:
        return self.weight
