"""
Model checkpoints by kind.

Every DTRC file written by this package carries ``kind=<geotr|illtr|segmenter>``
in its config block next to the architecture fields, so a checkpoint is
enough to rebuild its model.

Usage:
    save_model(geo, "geo.dtrc")
    geo = load_model("geo.dtrc", "geotr")
"""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, Union

from pydantic import BaseModel

from .checkpoint import ModelWeights
from .config import GeoConfig, IllConfig, SegConfig, from_kv, to_kv
from .errors import CheckpointError
from .geotr import GeoModel
from .illtr import IllModel
from .numerics import Module
from .segmenter import SegModel

MODEL_KINDS: Dict[str, Tuple[Type[Module], Type[BaseModel]]] = {
    "geotr": (GeoModel, GeoConfig),
    "illtr": (IllModel, IllConfig),
    "segmenter": (SegModel, SegConfig),
}


def model_kind(model: Module) -> str:
    for kind, (cls, _) in MODEL_KINDS.items():
        if isinstance(model, cls):
            return kind
    raise CheckpointError(f"no checkpoint kind for {type(model).__name__}. Available: {sorted(MODEL_KINDS)}")


def model_weights(
    model: Module,
    extra: Optional[Mapping[str, Any]] = None,
    optimizer_tensors: Optional[Mapping[str, Any]] = None,
) -> ModelWeights:
    """Weights of ``model`` plus its config; ``extra`` keys join the config block."""
    config = to_kv(model.config, {"kind": model_kind(model), **(extra or {})})
    weights = ModelWeights.from_module(model, config)
    if optimizer_tensors:
        weights.tensors.update(optimizer_tensors)
    return weights


def save_model(model: Module, path: Union[str, Path], extra: Optional[Mapping[str, Any]] = None) -> Path:
    return model_weights(model, extra).save(path)


def build_model(weights: ModelWeights, kind: str) -> Module:
    """Rebuild a model from its embedded config and load its tensors."""
    if kind not in MODEL_KINDS:
        raise CheckpointError(f"unknown model kind '{kind}'. Available: {sorted(MODEL_KINDS)}")
    found = weights.config.get("kind")
    if found != kind:
        raise CheckpointError(f"checkpoint holds a '{found}' model, expected '{kind}'")

    cls, config_cls = MODEL_KINDS[kind]
    model = cls(from_kv(config_cls, weights.config))
    model.load_state_dict(weights.model_tensors())
    return model


def load_model(path: Union[str, Path], kind: str) -> Module:
    return build_model(ModelWeights.load(path), kind)
