"""
Trainer

Batched training loop shared by the three recipes:

    for each step:
        batch = indices drawn from Rng(seed).spawn("batch-<step>")
        loss  = mean over the batch of recipe.loss(index, rng)
        loss.backward(); AdamW step at schedule(step)

Every random choice depends on (seed, step) alone, so resuming from a
checkpoint taken after step k continues exactly as an uninterrupted run.

Outputs in ``out``:
    <kind>.dtrc             latest good checkpoint (weights, moments, step)
    <kind>-NNNNNN.dtrc      periodic snapshots
    loss.tsv, lr.tsv        ``step<TAB>value`` lines

Usage:
    trainer = Trainer(GeoRecipe(model, dataset), config.geo_train, seed=0, out="runs/geo")
    result = trainer.fit()
"""

from dataclasses import dataclass, field
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from utils import RunLog, read_tsv, write_tsv

from ..checkpoint import ModelWeights
from ..config import TrainConfig, build
from ..errors import CheckpointError, DataError, TrainingError
from ..models import model_weights
from ..numerics import AdamW, LrSchedule, Rng, StepDecaySchedule, one_cycle_lr
from .recipes import Recipe

LOSS_LOG = "loss.tsv"
LR_LOG = "lr.tsv"


@dataclass
class TrainResult:
    steps: int
    final_loss: float
    checkpoint: Optional[Path] = None
    losses: List[Tuple[int, float]] = field(default_factory=list)


class Trainer:
    def __init__(
        self,
        recipe: Recipe,
        config: TrainConfig,
        seed: int = 0,
        out: Optional[Union[str, Path]] = None,
        verbose: bool = False,
        log: Optional[RunLog] = None,
    ):
        self.recipe = recipe
        self.config = config
        self.seed = seed
        self.out = Path(out) if out is not None else None
        self.verbose = verbose
        self.log = log or RunLog("Trainer", verbose=verbose)

        self.optimizer = AdamW(recipe.model.parameters(), weight_decay=config.weight_decay)
        self.step = 0
        self.losses: List[Tuple[int, float]] = []
        self.lrs: List[Tuple[int, float]] = []

        if config.schedule == "one_cycle":
            self._one_cycle = build(
                LrSchedule,
                {"max_lr": config.max_lr, "warmup_steps": config.effective_warmup, "total_steps": config.steps},
            )
        else:
            self._step_decay = build(
                StepDecaySchedule,
                {
                    "base_lr": config.max_lr,
                    "factor": config.decay_factor,
                    "boundary_epoch": config.decay_epoch,
                    "steps_per_epoch": self.steps_per_epoch,
                },
            )

    # =========================================================================
    # Schedule and Batches
    # =========================================================================

    @property
    def steps_per_epoch(self) -> int:
        return max(1, math.ceil(len(self.recipe) / self.config.batch_size))

    def lr(self, step: int) -> float:
        if self.config.schedule == "one_cycle":
            return one_cycle_lr(step, self._one_cycle)
        return self._step_decay.lr(step)

    def batch_indices(self, step: int) -> np.ndarray:
        """Sample indices of one step; without replacement while the dataset allows."""
        rng = Rng(self.seed).spawn(f"batch-{step}")
        count = len(self.recipe)
        if self.config.batch_size <= count:
            return rng.permutation(count)[: self.config.batch_size]
        return rng.integers(0, count, size=self.config.batch_size)

    # =========================================================================
    # Steps
    # =========================================================================

    def batch_loss(self, step: int):
        augment = Rng(self.seed).spawn(f"augment-{step}")
        total = None
        indices = self.batch_indices(step)
        for slot, index in enumerate(indices):
            loss = self.recipe.loss(int(index), augment.spawn(slot))
            total = loss if total is None else total + loss
        return total / float(len(indices))

    def train_step(self) -> float:
        """One optimizer step; raises TrainingError before touching weights on NaN."""
        self.optimizer.zero_grad()
        loss = self.batch_loss(self.step)
        value = float(loss.item())
        if not math.isfinite(value):
            raise TrainingError(f"non-finite loss {value} at step {self.step}")
        loss.backward()

        lr = self.lr(self.step)
        self.optimizer.step(lr)
        self.step += 1
        self.losses.append((self.step, value))
        self.lrs.append((self.step, lr))
        return value

    def fit(self, steps: Optional[int] = None) -> TrainResult:
        """Train until ``steps`` (default: the configured total) have run."""
        target = self.config.steps if steps is None else min(steps, self.config.steps)
        if self.out is not None:
            try:
                self.out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise DataError(f"cannot create training directory {self.out}: {exc}") from exc
        if self.verbose:
            self._log(f"{self.recipe.kind}: {len(self.recipe)} samples, steps {self.step} → {target}")

        checkpoint = None
        progress = tqdm(total=target, initial=self.step, desc=f"train-{self.recipe.kind}", disable=not self.verbose)
        try:
            while self.step < target:
                value = self.train_step()
                progress.update(1)
                progress.set_postfix(loss=f"{value:.5f}")
                if self.out is not None and self.step % self.config.checkpoint_every == 0:
                    checkpoint = self.save_checkpoint(snapshot=True)
        except TrainingError as exc:
            self.log.error(str(exc), item=f"step {self.step}")
            self.write_logs()
            raise
        finally:
            progress.close()

        if self.out is not None and (checkpoint is None or self.step % self.config.checkpoint_every):
            checkpoint = self.save_checkpoint()
        self.write_logs()

        final = self.losses[-1][1] if self.losses else float("nan")
        if self.verbose:
            self._log(f"✓ {self.recipe.kind} stopped at step {self.step}, loss {final:.6f}")
        return TrainResult(steps=self.step, final_loss=final, checkpoint=checkpoint, losses=list(self.losses))

    # =========================================================================
    # Checkpoints and Logs
    # =========================================================================

    def weights(self) -> ModelWeights:
        return model_weights(
            self.recipe.model,
            extra={"train_seed": self.seed, "step": self.step},
            optimizer_tensors=self.optimizer.state_tensors(),
        )

    def save_checkpoint(self, snapshot: bool = False) -> Path:
        weights = self.weights()
        latest = weights.save(self.out / f"{self.recipe.kind}.dtrc")
        if snapshot:
            weights.save(self.out / f"{self.recipe.kind}-{self.step:06d}.dtrc")
        return latest

    def resume(self, path: Union[str, Path]) -> None:
        """Restore weights, optimizer moments and step from a trainer checkpoint."""
        weights = ModelWeights.load(path)
        kind = weights.config.get("kind")
        if kind != self.recipe.kind:
            raise CheckpointError(f"{path}: holds a '{kind}' model, this run trains '{self.recipe.kind}'")
        if "step" not in weights.config:
            raise CheckpointError(f"{path}: no training step recorded; not a trainer checkpoint")

        self.recipe.model.load_state_dict(weights.model_tensors())
        self.step = int(weights.config["step"])
        self.optimizer.load_state_tensors(weights.optimizer_tensors(), self.step)
        self.losses = [row for row in self._read_log(LOSS_LOG) if row[0] <= self.step]
        self.lrs = [row for row in self._read_log(LR_LOG) if row[0] <= self.step]
        if self.verbose:
            self._log(f"Resumed {self.recipe.kind} at step {self.step}")

    def _read_log(self, name: str) -> List[Tuple[int, float]]:
        if self.out is None or not (self.out / name).exists():
            return []
        table = read_tsv(self.out / name, ["step", "value"])
        return [(int(s), float(v)) for s, v in zip(table["step"], table["value"])]

    def write_logs(self) -> None:
        if self.out is None:
            return
        write_tsv(((step, repr(value)) for step, value in self.losses), self.out / LOSS_LOG)
        write_tsv(((step, repr(value)) for step, value in self.lrs), self.out / LR_LOG)

    def _log(self, message: str) -> None:
        print(f"[Trainer] {message}")
