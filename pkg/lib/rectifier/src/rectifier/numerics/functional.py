"""
Differentiable Building Blocks

Fused ops whose backward passes are written by hand rather than composed
from elementary Tensor ops: softmax, the normalization family, 2-D
convolution, pooling and the attention/FFN blocks of the transformers.

All images are H×W×C (channels last, no batch axis).
"""

from typing import Iterable, Mapping, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ArgumentError, ConfigError, DimensionError
from .tensor import Tensor, accumulate_grad, as_tensor, make_result

Axes = Union[int, Iterable[int]]


def _normalize_axes(axes: Axes, ndim: int, op: str) -> Tuple[int, ...]:
    axes = (axes,) if isinstance(axes, (int, np.integer)) else tuple(axes)
    if not axes:
        raise ArgumentError(f"{op}: empty axis set")
    resolved = []
    for axis in axes:
        if not -ndim <= axis < ndim:
            raise ArgumentError(f"{op}: axis {axis} out of range for rank {ndim}")
        resolved.append(int(axis) % ndim)
    return tuple(sorted(set(resolved)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an m×k and a k×n tensor."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    return a @ b


def relu(x: Tensor) -> Tensor:
    return as_tensor(x).relu()


def sigmoid(x: Tensor) -> Tensor:
    return as_tensor(x).sigmoid()


def softmax(x: Tensor, axes: Axes = -1) -> Tensor:
    """Max-stabilized softmax over one or more axes."""
    x = as_tensor(x)
    axes = _normalize_axes(axes, x.ndim, "softmax")
    shifted = x.data - x.data.max(axis=axes, keepdims=True)
    exps = np.exp(shifted)
    out_data = exps / exps.sum(axis=axes, keepdims=True)

    def backward(g):
        accumulate_grad(x, out_data * (g - (g * out_data).sum(axis=axes, keepdims=True)))

    return make_result(out_data, (x,), backward, "softmax")


def normalize(x: Tensor, axes: Axes, eps: float) -> Tensor:
    """Zero-mean, unit (population) variance over ``axes``."""
    x = as_tensor(x)
    axes = _normalize_axes(axes, x.ndim, "normalize")
    count = int(np.prod([x.shape[a] for a in axes]))
    if count == 0:
        raise ArgumentError("normalize: reduction extent is 0")

    centered = x.data - x.data.mean(axis=axes, keepdims=True)
    variance = (centered * centered).mean(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + eps)
    x_hat = centered * inv_std

    def backward(g):
        mean_g = g.mean(axis=axes, keepdims=True)
        mean_gx = (g * x_hat).mean(axis=axes, keepdims=True)
        accumulate_grad(x, inv_std * (g - mean_g - x_hat * mean_gx))

    return make_result(x_hat.astype(x.dtype, copy=False), (x,), backward, "normalize")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    x = as_tensor(x)
    channels = x.shape[-1] if x.ndim else 0
    if channels == 0:
        raise ArgumentError("layer_norm: channel extent is 0")
    if gain.shape != (channels,) or bias.shape != (channels,):
        raise DimensionError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match channels {channels}"
        )
    return normalize(x, -1, eps) * gain + bias


def instance_norm(
    x: Tensor, gain: Optional[Tensor] = None, bias: Optional[Tensor] = None, eps: float = 1e-5
) -> Tensor:
    """Per-channel spatial normalization of an H×W×C map."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise DimensionError(f"instance_norm expects H×W×C, got {x.shape}")
    out = normalize(x, (0, 1), eps)
    if gain is not None:
        out = out * gain
    if bias is not None:
        out = out + bias
    return out


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    pad: Optional[int] = None,
) -> Tensor:
    """
    Zero-padded 2-D cross-correlation.

    x is H×W×Cin, kernel is kh×kw×Cin×Cout. ``pad`` defaults to kh // 2.
    Output extents are floor((H + 2p − kh) / s) + 1.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 3 or kernel.ndim != 4:
        raise DimensionError(f"conv2d expects H×W×C input and 4-D kernel, got {x.shape}, {kernel.shape}")
    kh, kw, cin, cout = kernel.shape
    if x.shape[2] != cin:
        raise DimensionError(f"conv2d: input has {x.shape[2]} channels, kernel expects {cin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ArgumentError(f"conv2d: kernel extents must be odd, got {kh}×{kw}")
    if stride < 1:
        raise ArgumentError(f"conv2d: stride must be >= 1, got {stride}")
    if pad is None:
        pad = kh // 2

    height, width = x.shape[:2]
    padded = np.pad(x.data, ((pad, pad), (pad, pad), (0, 0)))
    if padded.shape[0] < kh or padded.shape[1] < kw:
        raise DimensionError(f"conv2d: kernel {kh}×{kw} larger than padded input {padded.shape[:2]}")

    out_h = (padded.shape[0] - kh) // stride + 1
    out_w = (padded.shape[1] - kw) // stride + 1
    windows = sliding_window_view(padded, (kh, kw), axis=(0, 1))[::stride, ::stride]
    cols = np.ascontiguousarray(windows.transpose(0, 1, 3, 4, 2)).reshape(out_h * out_w, kh * kw * cin)
    weights = kernel.data.reshape(kh * kw * cin, cout)

    out_data = (cols @ weights).reshape(out_h, out_w, cout)
    if bias is not None:
        out_data = out_data + bias.data

    def backward(g):
        g2 = g.reshape(out_h * out_w, cout)
        if kernel.requires_grad:
            accumulate_grad(kernel, (cols.T @ g2).reshape(kernel.shape))
        if bias is not None and bias.requires_grad:
            accumulate_grad(bias, g2.sum(axis=0))
        if x.requires_grad:
            dcols = (g2 @ weights.T).reshape(out_h, out_w, kh, kw, cin)
            dpadded = np.zeros(padded.shape, dtype=g.dtype)
            row_end = stride * (out_h - 1) + 1
            col_end = stride * (out_w - 1) + 1
            for i in range(kh):
                for j in range(kw):
                    dpadded[i : i + row_end : stride, j : j + col_end : stride] += dcols[:, :, i, j]
            accumulate_grad(x, dpadded[pad : pad + height, pad : pad + width])

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return make_result(out_data, parents, backward, "conv2d")


def avg_pool2d(x: Tensor, size: int = 2) -> Tensor:
    x = as_tensor(x)
    height, width, channels = x.shape
    if height % size or width % size:
        raise DimensionError(f"avg_pool2d: extents {height}×{width} not divisible by {size}")
    blocks = x.data.reshape(height // size, size, width // size, size, channels)
    out_data = blocks.mean(axis=(1, 3))

    def backward(g):
        spread = np.repeat(np.repeat(g, size, axis=0), size, axis=1) / (size * size)
        accumulate_grad(x, spread)

    return make_result(out_data, (x,), backward, "avg_pool2d")


def upsample_nearest2d(x: Tensor, factor: int = 2) -> Tensor:
    x = as_tensor(x)
    height, width, channels = x.shape
    out_data = np.repeat(np.repeat(x.data, factor, axis=0), factor, axis=1)

    def backward(g):
        blocks = g.reshape(height, factor, width, factor, channels)
        accumulate_grad(x, blocks.sum(axis=(1, 3)))

    return make_result(out_data, (x,), backward, "upsample_nearest2d")


def multi_head_attention(
    q: Tensor, k: Tensor, v: Tensor, proj: Mapping[str, Tensor], heads: int
) -> Tensor:
    """
    Scaled dot-product attention with ``heads`` heads of width c / heads.

    ``proj`` holds wq, bq, wk, bk, wv, bv, wo, bo; each weight is c×c.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise DimensionError(f"attention expects N×c operands, got {q.shape}, {k.shape}, {v.shape}")
    n_q, channels = q.shape
    n_k = k.shape[0]
    if heads <= 0 or channels % heads:
        raise ConfigError(f"attention width {channels} is not divisible by {heads} heads")
    if k.shape[1] != channels or v.shape != k.shape:
        raise DimensionError(f"attention key/value extents {k.shape}, {v.shape} do not match width {channels}")
    if n_q < 1 or n_k < 1:
        raise DimensionError("attention needs at least one query and one key")

    width = channels // heads

    def split(t: Tensor, rows: int) -> Tensor:
        return t.reshape(rows, heads, width).transpose(1, 0, 2)

    queries = split(q @ proj["wq"] + proj["bq"], n_q)
    keys = split(k @ proj["wk"] + proj["bk"], n_k)
    values = split(v @ proj["wv"] + proj["bv"], n_k)

    scores = (queries @ keys.transpose(0, 2, 1)) * (1.0 / np.sqrt(width))
    weights = softmax(scores, axes=-1)
    mixed = (weights @ values).transpose(1, 0, 2).reshape(n_q, channels)
    return mixed @ proj["wo"] + proj["bo"]


def feed_forward(x: Tensor, w: Mapping[str, Tensor]) -> Tensor:
    """Two affine layers with a ReLU between: c → h → c."""
    x = as_tensor(x)
    channels = x.shape[-1]
    w1, w2 = w["w1"], w["w2"]
    if w1.ndim != 2 or w2.ndim != 2 or w1.shape[0] != channels or w2.shape != (w1.shape[1], channels):
        raise DimensionError(
            f"feed_forward weights {w1.shape} → {w2.shape} do not fit width {channels}"
        )
    return (x @ w1 + w["b1"]).relu() @ w2 + w["b2"]


def l1_loss(prediction: Tensor, target: Union[Tensor, np.ndarray]) -> Tensor:
    """Mean absolute difference."""
    prediction = as_tensor(prediction)
    target_data = target.data if isinstance(target, Tensor) else np.asarray(target)
    if prediction.shape != target_data.shape:
        raise DimensionError(f"l1_loss extents differ: {prediction.shape} vs {target_data.shape}")
    return (prediction - as_tensor(target, dtype=prediction.dtype)).abs().mean()
