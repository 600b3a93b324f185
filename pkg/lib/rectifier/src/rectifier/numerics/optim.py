"""
AdamW and learning-rate schedules.

Usage:
    optimizer = AdamW(model.parameters(), weight_decay=1e-4)
    schedule = LrSchedule(max_lr=1e-4, warmup_steps=700, total_steps=2000)

    loss.backward()
    optimizer.step(one_cycle_lr(step, schedule))
    optimizer.zero_grad()
"""

from dataclasses import dataclass, field
import math
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import ArgumentError, DimensionError, TrainingError
from .tensor import Tensor


@dataclass
class OptimizerState:
    """Per-parameter moments plus the shared step counter."""

    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-4
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: Mapping[str, Tensor],
    grads: Optional[Mapping[str, np.ndarray]],
    state: OptimizerState,
    lr: float,
) -> None:
    """
    One bias-corrected Adam update with decoupled weight decay.

    ``grads`` defaults to each parameter's ``.grad`` (missing grads count as
    zero). All gradients are validated before any parameter is touched, so a
    non-finite gradient leaves the model and the state unchanged.
    """
    if not lr > 0:
        raise ArgumentError(f"learning rate must be > 0, got {lr}")

    resolved: Dict[str, np.ndarray] = {}
    for name, param in params.items():
        grad = grads.get(name) if grads is not None else param.grad
        if grad is None:
            grad = np.zeros_like(param.data)
        grad = np.asarray(grad)
        if grad.shape != param.shape:
            raise DimensionError(f"gradient for '{name}' has extents {grad.shape}, parameter has {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise TrainingError(f"non-finite gradient in parameter '{name}'", parameter=name)
        resolved[name] = grad

    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step

    for name, param in params.items():
        grad = resolved[name].astype(param.dtype, copy=False)
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v

        update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param.data = (param.data * (1.0 - lr * state.weight_decay) - lr * update).astype(param.dtype, copy=False)


class AdamW:
    """Stateful wrapper around ``adamw_step`` bound to a parameter set."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-4,
    ):
        self.params = dict(params)
        self.state = OptimizerState(betas=betas, eps=eps, weight_decay=weight_decay)

    def step(self, lr: float) -> None:
        adamw_step(self.params, None, self.state, lr)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.grad = None

    def state_tensors(self) -> Dict[str, np.ndarray]:
        """Moments keyed ``optim.m.<name>`` / ``optim.v.<name>`` for checkpoints."""
        tensors: Dict[str, np.ndarray] = {}
        for name in self.params:
            if name in self.state.first_moment:
                tensors[f"optim.m.{name}"] = self.state.first_moment[name]
                tensors[f"optim.v.{name}"] = self.state.second_moment[name]
        return tensors

    def load_state_tensors(self, tensors: Mapping[str, np.ndarray], step: int) -> None:
        self.state.step = int(step)
        self.state.first_moment.clear()
        self.state.second_moment.clear()
        for name, param in self.params.items():
            m = tensors.get(f"optim.m.{name}")
            v = tensors.get(f"optim.v.{name}")
            if m is None or v is None:
                continue
            self.state.first_moment[name] = np.asarray(m, dtype=param.dtype).reshape(param.shape)
            self.state.second_moment[name] = np.asarray(v, dtype=param.dtype).reshape(param.shape)


class LrSchedule(BaseModel):
    """One-cycle schedule: linear warmup to ``max_lr`` then cosine decay."""

    max_lr: float = Field(default=1e-4, gt=0)
    warmup_steps: int = Field(default=700, gt=0)
    total_steps: int = Field(default=2000, gt=0)
    start_divisor: float = Field(default=25.0, gt=1)
    end_divisor: float = Field(default=1e4, gt=1)

    @model_validator(mode="after")
    def _warmup_within_total(self) -> "LrSchedule":
        if self.warmup_steps > self.total_steps:
            raise ValueError(f"warmup_steps ({self.warmup_steps}) exceeds total_steps ({self.total_steps})")
        return self


def one_cycle_lr(step: int, sched: LrSchedule) -> float:
    if step < 0 or step > sched.total_steps:
        raise ArgumentError(f"step {step} outside [0, {sched.total_steps}]")
    start = sched.max_lr / sched.start_divisor
    end = sched.max_lr / sched.end_divisor
    if step == sched.warmup_steps:
        return sched.max_lr
    if step < sched.warmup_steps:
        return start + (sched.max_lr - start) * step / sched.warmup_steps
    progress = (step - sched.warmup_steps) / (sched.total_steps - sched.warmup_steps)
    return end + (sched.max_lr - end) * 0.5 * (1.0 + math.cos(math.pi * progress))


class StepDecaySchedule(BaseModel):
    """Constant rate multiplied by ``factor`` once ``boundary_epoch`` is reached."""

    base_lr: float = Field(default=1e-4, gt=0)
    factor: float = Field(default=0.1, gt=0, le=1)
    boundary_epoch: int = Field(default=30, ge=0)
    steps_per_epoch: int = Field(default=1, gt=0)

    def epoch(self, step: int) -> int:
        return step // self.steps_per_epoch

    def lr(self, step: int) -> float:
        if step < 0:
            raise ArgumentError(f"step must be >= 0, got {step}")
        if self.epoch(step) >= self.boundary_epoch:
            return self.base_lr * self.factor
        return self.base_lr
