"""
Rectifier

Geometric unwarping and illumination correction of photographed documents,
built on a small numpy autograd engine.

Quick Start:
    from rectifier import PipelineBuilder, load_model

    geo = load_model("runs/geo/geotr.dtrc", "geotr")
    ill = load_model("runs/ill/illtr.dtrc", "illtr")

    pipeline = PipelineBuilder().with_geo(geo).with_illumination(ill).build()
    results = pipeline.run({"page": image})
    rectified = results["page"]["illumination"]

Architecture:
    - numerics/: Tensors, reverse-mode autograd, layers, AdamW and schedules
    - fields/: Backward maps, bilinear warping, learned upsampling
    - segmenter/: Foreground document segmentation
    - geotr/: Geometric unwarping transformer
    - illtr/: Illumination correction transformer and patch stitching
    - metrics/: MS-SSIM, local distortion, edit distance and CER
    - synthdata/: Synthetic pages, warps, shading and dataset files
    - training/: Trainer and per-model recipes
    - pipeline/, stages/: Orchestrator, registry and the rectification stages

Design Principles:
    - Seeded: every random value flows from an explicit seed
    - Checkpoints carry their config: a DTRC file rebuilds its own model
    - Errors by family: everything raised derives from RectifierError
"""

__version__ = "0.1.0"

from .checkpoint import ModelWeights
from .config import (
    GeoConfig,
    IllConfig,
    RunConfig,
    SegConfig,
    SynthConfig,
    TrainConfig,
    dump_yaml,
    load_run_config,
)
from .errors import (
    ArgumentError,
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    PipelineError,
    RectifierError,
    TrainingError,
    WarpError,
)
from .fields import BackwardMap, identity_map, read_bmap, warp_image, write_bmap
from .geotr import GeoModel, unwarp
from .illtr import IllModel, correct_illumination
from .metrics import EvalPair, evaluate_pairs, ms_ssim
from .models import MODEL_KINDS, load_model, save_model
from .pipeline import PipelineBuilder, PipelineContext, PipelineOrchestrator, Stage, StageRegistry
from .segmenter import DocMask, SegModel, preprocess
from .synthdata import DirectoryDataset, GeneratedDataset, SampleRecord, gen_sample, write_dataset
from .training import GeoRecipe, IllRecipe, SegRecipe, Trainer

__all__ = [
    # Configs
    "GeoConfig",
    "IllConfig",
    "SegConfig",
    "SynthConfig",
    "TrainConfig",
    "RunConfig",
    "load_run_config",
    "dump_yaml",
    # Errors
    "RectifierError",
    "ArgumentError",
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "PipelineError",
    "TrainingError",
    "WarpError",
    # Fields
    "BackwardMap",
    "identity_map",
    "warp_image",
    "read_bmap",
    "write_bmap",
    # Models
    "GeoModel",
    "IllModel",
    "SegModel",
    "ModelWeights",
    "MODEL_KINDS",
    "load_model",
    "save_model",
    "unwarp",
    "correct_illumination",
    "preprocess",
    "DocMask",
    # Data
    "SampleRecord",
    "gen_sample",
    "write_dataset",
    "DirectoryDataset",
    "GeneratedDataset",
    # Metrics
    "EvalPair",
    "evaluate_pairs",
    "ms_ssim",
    # Training
    "Trainer",
    "GeoRecipe",
    "IllRecipe",
    "SegRecipe",
    # Pipeline
    "Stage",
    "PipelineContext",
    "StageRegistry",
    "PipelineOrchestrator",
    "PipelineBuilder",
]
