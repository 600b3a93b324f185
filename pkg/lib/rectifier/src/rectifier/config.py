"""
Configuration Models

Pydantic models for every tunable in the library, the ``desk``/``paper``
profiles, YAML loading, and the ``key=value`` encoding used inside
checkpoints.

Precedence when resolving a run: profile defaults < YAML file < CLI flags.

Usage:
    config = load_run_config("desk", yaml_path="run.yaml", overrides={"seed": 7})
    geo = config.geo
    block = to_kv(geo)                   # "depth=6\\nheads=8\\n..."
    same = from_kv(GeoConfig, block)
"""

import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
import yaml

from .errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)

THREADS_ENV = "DOCTR_THREADS"


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# =============================================================================
# Model Configs
# =============================================================================


class GeoConfig(_Config):
    """Geometric unwarping transformer."""

    image_size: int = Field(default=288, ge=8)
    head_channels: Tuple[int, int, int] = (64, 128, 256)
    hidden_dim: int = Field(default=512, ge=1)
    depth: int = Field(default=6, ge=0)
    heads: int = Field(default=8, ge=1)
    ffn_dim: Optional[int] = Field(default=None, ge=1)
    tail_dim: int = Field(default=256, ge=1)
    use_encoder: bool = True
    use_decoder: bool = True
    learned_upsample: bool = True
    use_preprocessing: bool = True
    predict_residual: bool = True
    decoder_residual: Literal["printed", "attended"] = "printed"
    seed: int = 0

    @model_validator(mode="after")
    def _check_shapes(self) -> "GeoConfig":
        if self.image_size % 8:
            raise ValueError(f"image_size {self.image_size} is not divisible by 8")
        if self.hidden_dim % self.heads:
            raise ValueError(f"hidden_dim {self.hidden_dim} is not divisible by {self.heads} heads")
        return self

    @property
    def grid_size(self) -> int:
        return self.image_size // 8

    @property
    def tokens(self) -> int:
        return self.grid_size**2

    @property
    def ffn_width(self) -> int:
        return self.ffn_dim or 4 * self.hidden_dim


class IllConfig(_Config):
    """Illumination correction transformer."""

    patch_size: int = Field(default=128, ge=4)
    mini_patch: int = Field(default=4, ge=1)
    head_channels: int = Field(default=16, ge=1)
    depth: int = Field(default=6, ge=0)
    heads: int = Field(default=8, ge=1)
    ffn_dim: Optional[int] = Field(default=None, ge=1)
    overlap: float = Field(default=0.125, ge=0.0, lt=0.5)
    alpha: float = Field(default=1e-5, ge=0.0)
    use_encoder: bool = True
    use_decoder: bool = True
    perceptual_channels: Tuple[int, int, int] = (16, 32, 64)
    perceptual_seed: int = 1234
    seed: int = 0

    @model_validator(mode="after")
    def _check_shapes(self) -> "IllConfig":
        if self.patch_size % self.mini_patch:
            raise ValueError(f"patch_size {self.patch_size} is not divisible by mini_patch {self.mini_patch}")
        if self.width % self.heads:
            raise ValueError(f"transformer width {self.width} is not divisible by {self.heads} heads")
        if self.patch_size % 4:
            raise ValueError(f"patch_size {self.patch_size} must be divisible by 4 for the perceptual stages")
        return self

    @property
    def width(self) -> int:
        return self.head_channels * self.mini_patch**2

    @property
    def tokens(self) -> int:
        return (self.patch_size // self.mini_patch) ** 2

    @property
    def ffn_width(self) -> int:
        return self.ffn_dim or 4 * self.width


class SegConfig(_Config):
    """Foreground document segmenter."""

    image_size: int = Field(default=288, ge=4)
    channels: Tuple[int, int, int] = (16, 32, 64)
    tau: float = Field(default=0.5, gt=0.0, lt=1.0)
    mean_reduction: bool = False
    min_area: float = Field(default=0.01, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_shapes(self) -> "SegConfig":
        if self.image_size % 4:
            raise ValueError(f"image_size {self.image_size} is not divisible by 4")
        return self


class SynthConfig(_Config):
    """Synthetic sample generator."""

    height: int = Field(default=288, ge=32)
    width: int = Field(default=288, ge=32)
    perspective: float = Field(default=0.05, ge=0.0, le=0.15)
    fold_amplitude: float = Field(default=0.025, ge=0.0, le=0.06)
    max_folds: int = Field(default=3, ge=1, le=4)
    curl: float = Field(default=0.08, ge=0.0, le=0.2)
    inset: float = Field(default=0.12, ge=0.02, le=0.3)
    shading: bool = True
    background: bool = True


# =============================================================================
# Training and Run Configs
# =============================================================================


class TrainConfig(_Config):
    """One training recipe."""

    steps: int = Field(default=2000, ge=1)
    batch_size: int = Field(default=8, ge=1)
    max_lr: float = Field(default=1e-4, gt=0.0)
    warmup_steps: int = Field(default=700, ge=1)
    weight_decay: float = Field(default=1e-4, ge=0.0)
    schedule: Literal["one_cycle", "step_decay"] = "one_cycle"
    decay_factor: float = Field(default=0.1, gt=0.0, le=1.0)
    decay_epoch: int = Field(default=30, ge=0)
    checkpoint_every: int = Field(default=500, ge=1)
    samples: Optional[int] = Field(default=None, ge=1)

    @property
    def effective_warmup(self) -> int:
        """Warmup steps clamped to the run length; short runs peak on their last step."""
        return min(self.warmup_steps, self.steps)


class RunConfig(_Config):
    """Everything one CLI invocation needs; echoed as config.yaml."""

    command: str = ""
    profile: Literal["desk", "paper"] = "desk"
    seed: int = 0
    out: Optional[str] = None
    dataset: Optional[str] = None
    geo_checkpoint: Optional[str] = None
    ill_checkpoint: Optional[str] = None
    seg_checkpoint: Optional[str] = None
    threads: int = Field(default=1, ge=1)
    verbose: bool = False
    geo: GeoConfig = GeoConfig()
    ill: IllConfig = IllConfig()
    seg: SegConfig = SegConfig()
    synth: SynthConfig = SynthConfig()
    geo_train: TrainConfig = TrainConfig()
    ill_train: TrainConfig = TrainConfig(
        batch_size=4, max_lr=1e-4, schedule="step_decay", decay_factor=0.3, decay_epoch=20, steps=1000
    )
    seg_train: TrainConfig = TrainConfig(
        batch_size=4, max_lr=1e-4, schedule="step_decay", decay_factor=0.1, decay_epoch=30, steps=1000,
        weight_decay=0.0,
    )


# =============================================================================
# Profiles
# =============================================================================

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {},
    "paper": {
        "geo": {"image_size": 288, "hidden_dim": 512, "depth": 6, "heads": 8},
        "ill": {"patch_size": 128, "mini_patch": 4, "head_channels": 16, "depth": 6, "heads": 8},
        "geo_train": {"steps": 500_000, "batch_size": 8, "max_lr": 1e-4, "warmup_steps": 700},
        "seg_train": {
            "steps": 45 * 1000, "batch_size": 32, "schedule": "step_decay",
            "decay_factor": 0.1, "decay_epoch": 30, "weight_decay": 0.0,
        },
        "ill_train": {
            "steps": 35 * 1000, "batch_size": 24, "schedule": "step_decay",
            "decay_factor": 0.3, "decay_epoch": 20,
        },
    },
}


def build(cls: Type[ModelT], data: Mapping[str, Any]) -> ModelT:
    """Validate ``data`` into ``cls``, surfacing failures as ConfigError."""
    try:
        return cls.model_validate(dict(data))
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or cls.__name__}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid {cls.__name__}: {problems}") from exc


def _deep_merge(base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def load_yaml(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        loaded = yaml.safe_load(f) or {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"config file {path} must hold a mapping, got {type(loaded).__name__}")
    return loaded


def resolve_threads(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return default
    try:
        threads = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return threads


def load_run_config(
    profile: str = "desk",
    yaml_path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile '{profile}'. Available: {sorted(PROFILES)}")

    data = RunConfig().model_dump()
    data = _deep_merge(data, PROFILES[profile])
    if yaml_path is not None:
        data = _deep_merge(data, load_yaml(yaml_path))
    data["profile"] = profile
    data["threads"] = resolve_threads(data.get("threads", 1))
    if overrides:
        data = _deep_merge(data, {k: v for k, v in overrides.items() if v is not None})
    return build(RunConfig, data)


def dump_yaml(config: BaseModel, path: str | Path) -> None:
    """Echo a config so the run can be reproduced from the file alone."""
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.model_dump(mode="json"), f, sort_keys=True)


# =============================================================================
# key=value Encoding (checkpoint config block)
# =============================================================================


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_kv(config: BaseModel, extra: Optional[Mapping[str, Any]] = None) -> str:
    items = dict(config.model_dump())
    if extra:
        items.update(extra)
    return "".join(f"{key}={_format_value(items[key])}\n" for key in sorted(items))


def parse_kv(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {line_no} is not key=value: {line!r}")
        values[key.strip()] = value.strip()
    return values


def from_kv(cls: Type[ModelT], text: str | Mapping[str, str]) -> ModelT:
    """Rebuild ``cls`` from a key=value block; keys it does not declare are ignored."""
    raw = parse_kv(text) if isinstance(text, str) else dict(text)
    data: Dict[str, Any] = {}
    for name, field in cls.model_fields.items():
        if name not in raw:
            continue
        value = raw[name]
        if value == "none":
            data[name] = None
        elif isinstance(field.default, tuple):
            data[name] = tuple(int(part) for part in value.split(",")) if value else ()
        else:
            data[name] = value
    return build(cls, data)
