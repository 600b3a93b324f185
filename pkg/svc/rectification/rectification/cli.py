#!/usr/bin/env python
"""
Document Rectification CLI

Commands:
    synth       Generate a synthetic dataset directory
    train-geo   Train the geometric unwarping transformer
    train-ill   Train the illumination correction transformer
    train-seg   Train the document segmenter
    rectify     Unwarp (and illumination-correct) images
    evaluate    Score rectified images against ground truth

Exit codes: 0 success, 1 usage, 2 data/checkpoint/pipeline error,
3 numeric failure (non-finite loss, unrecoverable warp).

Usage:
    rectify-doc synth --count 8 --seed 0 --out data
    rectify-doc train-geo --dataset data --out runs/geo --steps 2000
    rectify-doc rectify page.ppm --geo runs/geo/geotr.dtrc --ill runs/ill/illtr.dtrc --out rectified
    rectify-doc evaluate --pred rectified --gt data --text-refs data
"""

import argparse
import sys
from typing import Any, Dict, List, Optional

from rectifier import (
    CheckpointError,
    ConfigError,
    DataError,
    PipelineError,
    RectifierError,
    TrainingError,
    WarpError,
    load_run_config,
)
from rectifier.metrics import METRICS
from utils import RunLog

from .commands import cmd_evaluate, cmd_rectify, cmd_synth, cmd_train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

TRAIN_COMMANDS = {"train-geo": ("geotr", "geo"), "train-ill": ("illtr", "ill"), "train-seg": ("segmenter", "seg")}


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage code instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (TrainingError, WarpError)):
        return EXIT_NUMERIC
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, (DataError, CheckpointError, PipelineError, RectifierError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


# =============================================================================
# Parser
# =============================================================================


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=str, help="YAML file overriding profile defaults")
    parser.add_argument(
        "--profile",
        choices=["desk", "paper"],
        default="desk",
        help="Default values: desk-scale (default) or published-scale training",
    )
    parser.add_argument("--seed", type=int, help="Seed for every random choice of the run")
    parser.add_argument("--out", "-o", type=str, help="Output directory")
    parser.add_argument("--verbose", "-v", action="store_true", default=None, help="Progress output")


def _disable(parser: argparse.ArgumentParser, flag: str, dest: str, help_text: str) -> None:
    parser.add_argument(flag, dest=dest, action="store_const", const=False, default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog="rectify-doc",
        description="Geometric unwarping and illumination correction of document images",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    rectify-doc synth --count 8 --seed 0 --out data
    rectify-doc train-geo --dataset data --out runs/geo
    rectify-doc rectify page.ppm --geo runs/geo/geotr.dtrc --skip-ill --dump-bmap --out out
    rectify-doc evaluate --pred out --gt data --metrics ld,ms_ssim
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    synth = commands.add_parser("synth", help="Generate a synthetic dataset")
    _common(synth)
    synth.add_argument("--count", "-n", type=int, default=8, help="Number of samples (default: 8)")

    for name, (kind, _) in TRAIN_COMMANDS.items():
        train = commands.add_parser(name, help=f"Train the {kind} model")
        _common(train)
        train.add_argument("--dataset", "-d", type=str, required=True, help="Dataset directory from synth")
        train.add_argument("--steps", type=int, help="Optimizer steps")
        train.add_argument("--batch-size", type=int, help="Samples per step")
        train.add_argument("--lr", type=float, help="Peak (one-cycle) or base (step decay) learning rate")
        train.add_argument("--samples", type=int, help="Train on the first N samples only")
        train.add_argument("--checkpoint-every", type=int, help="Steps between checkpoints")
        train.add_argument("--resume", type=str, help="Trainer checkpoint to continue from")
        if kind == "geotr":
            _disable(train, "--no-encoder", "use_encoder", "Ablation: drop the transformer encoder")
            _disable(train, "--no-decoder", "use_decoder", "Ablation: drop the transformer decoder")
            _disable(train, "--bilinear-upsample", "learned_upsample", "Ablation: bilinear instead of learned upsampling")
            _disable(train, "--no-preprocessing", "use_preprocessing", "Ablation: keep the background")
        elif kind == "illtr":
            _disable(train, "--no-encoder", "use_encoder", "Ablation: drop the transformer encoder")
            _disable(train, "--no-decoder", "use_decoder", "Ablation: drop the transformer decoder")
            train.add_argument("--alpha", type=float, help="Perceptual loss weight (default: 1e-5)")

    rectify = commands.add_parser("rectify", help="Rectify document images")
    _common(rectify)
    rectify.add_argument("inputs", nargs="+", help="Input images (.ppm)")
    rectify.add_argument("--geo", type=str, required=True, help="Geometric model checkpoint")
    rectify.add_argument("--ill", type=str, help="Illumination model checkpoint")
    rectify.add_argument("--seg", type=str, help="Segmenter checkpoint (enables background removal)")
    rectify.add_argument("--tau", type=float, help="Segmentation threshold (default: 0.5)")
    rectify.add_argument("--skip-ill", action="store_true", help="Stop after geometric unwarping")
    rectify.add_argument("--dump-bmap", action="store_true", help="Also write <name>.bmap backward maps")

    evaluate = commands.add_parser("evaluate", help="Score rectified images against ground truth")
    _common(evaluate)
    evaluate.add_argument("--pred", type=str, required=True, help="Directory of rectified .ppm images")
    evaluate.add_argument("--gt", type=str, required=True, help="Ground-truth directory or synth dataset")
    evaluate.add_argument(
        "--metrics",
        type=str,
        default=",".join(METRICS),
        help=f"Comma-separated subset of {','.join(METRICS)}",
    )
    evaluate.add_argument("--text-refs", type=str, help="Directory with <name>.txt reference text")
    evaluate.add_argument("--table", type=str, help="Export per-image metrics (.csv, .xlsx or .json)")
    return parser


# =============================================================================
# Overrides
# =============================================================================


def _prune(values: Dict[str, Any]) -> Dict[str, Any]:
    pruned = {}
    for key, value in values.items():
        if isinstance(value, dict):
            value = _prune(value)
            if value:
                pruned[key] = value
        elif value is not None:
            pruned[key] = value
    return pruned


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """CLI flags as a nested RunConfig override; unset flags are left out."""
    values: Dict[str, Any] = {"command": args.command, "seed": args.seed, "out": args.out, "verbose": args.verbose}
    if args.command in TRAIN_COMMANDS:
        _, section = TRAIN_COMMANDS[args.command]
        values["dataset"] = args.dataset
        values[f"{section}_train"] = {
            "steps": args.steps,
            "batch_size": args.batch_size,
            "max_lr": args.lr,
            "samples": args.samples,
            "checkpoint_every": args.checkpoint_every,
        }
        if section == "geo":
            values["geo"] = {
                "use_encoder": args.use_encoder,
                "use_decoder": args.use_decoder,
                "learned_upsample": args.learned_upsample,
                "use_preprocessing": args.use_preprocessing,
            }
        elif section == "ill":
            values["ill"] = {"use_encoder": args.use_encoder, "use_decoder": args.use_decoder, "alpha": args.alpha}
    elif args.command == "rectify":
        values.update(geo_checkpoint=args.geo, ill_checkpoint=args.ill, seg_checkpoint=args.seg)
        values["seg"] = {"tau": args.tau}
    return _prune(values)


def parse_metrics(text: str) -> List[str]:
    metrics = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown or not metrics:
        raise ConfigError(f"unknown metrics {unknown or [text]}. Available: {list(METRICS)}")
    return metrics


# =============================================================================
# Main
# =============================================================================


def run_command(args: argparse.Namespace, log: RunLog) -> None:
    config = load_run_config(args.profile, args.config, overrides_from_args(args))
    log.verbose = config.verbose

    if args.command == "synth":
        if args.count < 0:
            raise ConfigError(f"--count must be >= 0, got {args.count}")
        cmd_synth(config, args.count, log)
    elif args.command in TRAIN_COMMANDS:
        kind, _ = TRAIN_COMMANDS[args.command]
        result = cmd_train(config, kind, args.resume, log)
        print(f"step\t{result.steps}\nloss\t{result.final_loss:.6f}\ncheckpoint\t{result.checkpoint}")
    elif args.command == "rectify":
        cmd_rectify(config, args.inputs, skip_ill=args.skip_ill, dump_bmap=args.dump_bmap, log=log)
    elif args.command == "evaluate":
        cmd_evaluate(
            config,
            args.pred,
            args.gt,
            metrics=parse_metrics(args.metrics),
            text_refs=args.text_refs,
            table_path=args.table,
            log=log,
        )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    log = RunLog(component=args.command)

    try:
        run_command(args, log)
    except KeyboardInterrupt:
        print("\n\nInterrupted by user", file=sys.stderr)
        return EXIT_USAGE
    except (RectifierError, OSError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        if log.has_issues():
            print(log.summary(), file=sys.stderr)
        return exit_code(e)

    if log.has_issues():
        print(log.summary(), file=sys.stderr)
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
