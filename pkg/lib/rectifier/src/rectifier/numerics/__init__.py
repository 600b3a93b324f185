"""Numpy-backed autograd substrate shared by every model."""

from .functional import (
    avg_pool2d,
    conv2d,
    feed_forward,
    instance_norm,
    l1_loss,
    layer_norm,
    matmul,
    multi_head_attention,
    normalize,
    relu,
    sigmoid,
    softmax,
    upsample_nearest2d,
)
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .modules import (
    Conv2d,
    Embedding,
    FeedForward,
    InstanceNorm,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    Parameter,
)
from .optim import AdamW, LrSchedule, OptimizerState, StepDecaySchedule, adamw_step, one_cycle_lr
from .rng import Rng
from .tensor import DEFAULT_DTYPE, Tensor, as_tensor, concat, is_grad_enabled, no_grad, stack

__all__ = [
    "Tensor",
    "as_tensor",
    "concat",
    "stack",
    "no_grad",
    "is_grad_enabled",
    "DEFAULT_DTYPE",
    "Rng",
    "matmul",
    "softmax",
    "normalize",
    "layer_norm",
    "instance_norm",
    "conv2d",
    "avg_pool2d",
    "upsample_nearest2d",
    "multi_head_attention",
    "feed_forward",
    "relu",
    "sigmoid",
    "l1_loss",
    "Module",
    "Parameter",
    "Linear",
    "Conv2d",
    "LayerNorm",
    "InstanceNorm",
    "MultiHeadAttention",
    "FeedForward",
    "Embedding",
    "OptimizerState",
    "AdamW",
    "adamw_step",
    "LrSchedule",
    "StepDecaySchedule",
    "one_cycle_lr",
    "check_gradients",
    "numerical_gradient",
    "relative_error",
]
