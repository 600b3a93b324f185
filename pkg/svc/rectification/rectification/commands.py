"""
Command implementations behind the CLI.

Each command takes the resolved RunConfig, echoes it as ``config.yaml`` into
its output directory, does its work through the rectifier library and
collects non-fatal issues in a RunLog.

Usage:
    config = load_run_config("desk", overrides={"out": "data", "seed": 3})
    cmd_synth(config, count=8)
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from rectifier import (
    ConfigError,
    DataError,
    GeoModel,
    IllModel,
    PipelineBuilder,
    RunConfig,
    SegModel,
    dump_yaml,
    load_model,
    write_bmap,
    write_dataset,
)
from rectifier.fields import resize_image
from rectifier.metrics import METRICS, EvalPair, decode_text, evaluate_pairs, report_lines, summary
from rectifier.synthdata import DirectoryDataset, PageLayout
from rectifier.synthdata.dataset import MANIFEST
from rectifier.training import GeoRecipe, IllRecipe, SegRecipe, Trainer, TrainResult
from utils import ImageFormatError, RunLog, load_json, read_image, save_dataframe, write_image, write_kv, write_tsv

CONFIG_ECHO = "config.yaml"
REPORT = "report.tsv"
SUMMARY = "summary.txt"
IMAGE_SUFFIX = ".ppm"
DATASET_GT_SUFFIX = ".clean.ppm"

TRAIN_KINDS = ("geotr", "illtr", "segmenter")


def output_dir(config: RunConfig) -> Path:
    if not config.out:
        raise ConfigError(f"'{config.command}' needs an output directory (--out)")
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


def echo_config(config: RunConfig, out: Path) -> Path:
    path = out / CONFIG_ECHO
    try:
        dump_yaml(config, path)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return path


def _log(component: str, message: str) -> None:
    print(f"[{component}] {message}")


# =============================================================================
# synth
# =============================================================================


def cmd_synth(config: RunConfig, count: int, log: Optional[RunLog] = None) -> Path:
    """Write ``count`` samples and a manifest; returns the manifest path."""
    out = output_dir(config)
    echo_config(config, out)
    if config.verbose:
        _log("Synth", f"{count} samples, seed {config.seed} → {out}")
    manifest = write_dataset(
        count, config.seed, out, config.synth, threads=config.threads, verbose=config.verbose, log=log
    )
    if config.verbose:
        _log("Synth", f"✓ manifest written to {manifest}")
    return manifest


# =============================================================================
# train-geo / train-ill / train-seg
# =============================================================================


def build_trainer(config: RunConfig, kind: str, log: Optional[RunLog] = None) -> Trainer:
    if not config.dataset:
        raise ConfigError("training needs a dataset directory (--dataset)")
    dataset = DirectoryDataset(config.dataset)
    if kind == "geotr":
        recipe, train = GeoRecipe(GeoModel(config.geo), dataset, config.geo_train.samples), config.geo_train
    elif kind == "illtr":
        recipe, train = IllRecipe(IllModel(config.ill), dataset, config.ill_train.samples), config.ill_train
    elif kind == "segmenter":
        recipe, train = SegRecipe(SegModel(config.seg), dataset, config.seg_train.samples), config.seg_train
    else:
        raise ConfigError(f"unknown model kind '{kind}'. Available: {list(TRAIN_KINDS)}")
    return Trainer(recipe, train, seed=config.seed, out=config.out, verbose=config.verbose, log=log)


def cmd_train(
    config: RunConfig, kind: str, resume: Optional[str] = None, log: Optional[RunLog] = None
) -> TrainResult:
    out = output_dir(config)
    echo_config(config, out)
    trainer = build_trainer(config, kind, log)
    if resume:
        trainer.resume(resume)
    return trainer.fit()


# =============================================================================
# rectify
# =============================================================================


def read_input(path: str | Path, allow_compressed: bool = False) -> np.ndarray:
    try:
        return read_image(path, allow_compressed=allow_compressed)
    except (OSError, ImageFormatError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc


def load_inputs(paths: Sequence[str | Path], allow_compressed: bool = False) -> Dict[str, np.ndarray]:
    images: Dict[str, np.ndarray] = {}
    for path in paths:
        name = Path(path).stem
        if name in images:
            raise DataError(f"two inputs share the name '{name}'; output files would collide")
        images[name] = read_input(path, allow_compressed)
    return images


def cmd_rectify(
    config: RunConfig,
    inputs: Sequence[str | Path],
    skip_ill: bool = False,
    dump_bmap: bool = False,
    log: Optional[RunLog] = None,
) -> List[Path]:
    """Rectify each input into ``out/<name>.ppm``; returns the written image paths."""
    log = log or RunLog("Rectify", verbose=config.verbose)
    if not config.geo_checkpoint:
        raise ConfigError("rectify needs geometric weights (--geo)")
    if not inputs:
        raise ConfigError("rectify needs at least one input image")

    out = output_dir(config)
    echo_config(config, out)
    geo = load_model(config.geo_checkpoint, "geotr")

    seg = None
    if config.seg_checkpoint:
        seg = load_model(config.seg_checkpoint, "segmenter")
    elif geo.config.use_preprocessing:
        log.warn("no segmenter weights (--seg); unwarping without background removal")

    ill = None
    if not skip_ill:
        if config.ill_checkpoint:
            ill = load_model(config.ill_checkpoint, "illtr")
        else:
            log.warn("no illumination weights (--ill); writing the geometric result only")

    images = load_inputs(inputs)
    pipeline = (
        PipelineBuilder()
        .with_geo(geo)
        .with_segmenter(seg, config.seg.tau)
        .with_illumination(ill)
        .threads(config.threads)
        .verbose(config.verbose)
        .build()
    )
    results = pipeline.run(images)

    written = []
    for name in images:
        stages = results[name]
        unwarped = stages["unwarping"]
        final = stages["illumination"] if "illumination" in stages else unwarped.image
        written.append(write_image(final, out / f"{name}{IMAGE_SUFFIX}"))
        if dump_bmap:
            write_bmap(out / f"{name}.bmap", unwarped.bmap)
        if config.verbose:
            _log("Rectify", f"✓ {name} → {written[-1]}")
    return written


# =============================================================================
# evaluate
# =============================================================================


def index_images(directory: str | Path, suffix: str) -> Dict[str, Path]:
    """``{name: path}`` for files in ``directory`` ending in ``suffix``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    return {
        path.name[: -len(suffix)]: path
        for path in sorted(directory.iterdir())
        if path.is_file() and path.name.endswith(suffix) and len(path.name) > len(suffix)
    }


def gt_suffix(gt_dir: str | Path) -> str:
    """Synthetic dataset directories compare against the clean pages."""
    return DATASET_GT_SUFFIX if (Path(gt_dir) / MANIFEST).exists() else IMAGE_SUFFIX


def match_images(pred_dir: str | Path, gt_dir: str | Path) -> List[Tuple[str, Path, Path]]:
    preds = index_images(pred_dir, IMAGE_SUFFIX)
    gts = index_images(gt_dir, gt_suffix(gt_dir))
    only_pred = sorted(set(preds) - set(gts))
    only_gt = sorted(set(gts) - set(preds))
    if only_pred or only_gt:
        problems = []
        if only_pred:
            problems.append(f"no ground truth for {only_pred}")
        if only_gt:
            problems.append(f"no prediction for {only_gt}")
        raise DataError("unmatched files: " + "; ".join(problems))
    if not preds:
        raise DataError(f"no {IMAGE_SUFFIX} images found in {pred_dir}")
    return [(name, preds[name], gts[name]) for name in sorted(preds)]


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read text {path}: {exc}") from exc


def hypothesis_text(
    name: str, pred: np.ndarray, pred_dir: Path, text_refs: Path, log: RunLog
) -> Optional[str]:
    """Text from ``<pred_dir>/<name>.txt``, else decoded through the reference layout."""
    supplied = pred_dir / f"{name}.txt"
    if supplied.exists():
        return _read_text(supplied)
    layout_path = text_refs / f"{name}.layout.json"
    if not layout_path.exists():
        log.warn("no hypothesis text and no layout to decode one", item=name)
        return None
    try:
        layout = PageLayout.from_dict(load_json(layout_path))
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read layout {layout_path}: {exc}") from exc
    if pred.shape[:2] != (layout.height, layout.width):
        pred = resize_image(pred, layout.height, layout.width)
    return decode_text(pred, layout)


def collect_pairs(
    pred_dir: str | Path,
    gt_dir: str | Path,
    metrics: Sequence[str],
    text_refs: Optional[str | Path],
    log: RunLog,
) -> List[EvalPair]:
    pred_dir = Path(pred_dir)
    wants_text = any(m in ("ed", "cer") for m in metrics)
    pairs = []
    for name, pred_path, gt_path in match_images(pred_dir, gt_dir):
        pair = EvalPair(name, read_input(pred_path), read_input(gt_path))
        if wants_text and text_refs is not None:
            ref_path = Path(text_refs) / f"{name}.txt"
            if ref_path.exists():
                pair.ref_text = _read_text(ref_path)
                pair.hyp_text = hypothesis_text(name, pair.pred, pred_dir, Path(text_refs), log)
        pairs.append(pair)
    return pairs


def cmd_evaluate(
    config: RunConfig,
    pred_dir: str | Path,
    gt_dir: str | Path,
    metrics: Sequence[str] = METRICS,
    text_refs: Optional[str | Path] = None,
    table_path: Optional[str | Path] = None,
    log: Optional[RunLog] = None,
) -> pd.DataFrame:
    """Score matched images; prints the report and writes it when ``out`` is set."""
    log = log or RunLog("Evaluate", verbose=config.verbose)
    if text_refs is None and any(m in ("ed", "cer") for m in metrics):
        log.warn("no text references (--text-refs); ED and CER are skipped")

    pairs = collect_pairs(pred_dir, gt_dir, metrics, text_refs, log)
    if config.verbose:
        _log("Evaluate", f"{len(pairs)} pairs, metrics {list(metrics)}")
    table = evaluate_pairs(pairs, metrics, threads=config.threads, verbose=config.verbose, log=log)

    lines = report_lines(table)
    for line in lines:
        print(line)

    if config.out:
        out = output_dir(config)
        echo_config(config, out)
        write_tsv((line.split("\t") for line in lines), out / REPORT)
        write_kv(summary(table), out / SUMMARY)
    if table_path is not None:
        try:
            save_dataframe(table, table_path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        except OSError as exc:
            raise DataError(f"cannot write table {table_path}: {exc}") from exc
    return table
