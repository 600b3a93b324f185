"""Evaluation metrics: Local Distortion, SSIM/MS-SSIM, edit distance and CER."""

from .ssim import DEFAULT_PARAMS, MsSsimParams, gaussian_window, ms_ssim, ssim, to_grayscale, usable_levels
from .flow import DenseFlow, dense_flow, local_distortion
from .text import cer, decode_text, edit_distance
from .evaluate import METRICS, EvalPair, evaluate_pair, evaluate_pairs, prepare_pair, report_lines, summary

__all__ = [
    "MsSsimParams",
    "DEFAULT_PARAMS",
    "to_grayscale",
    "gaussian_window",
    "ssim",
    "ms_ssim",
    "usable_levels",
    "DenseFlow",
    "dense_flow",
    "local_distortion",
    "edit_distance",
    "cer",
    "decode_text",
    "METRICS",
    "EvalPair",
    "prepare_pair",
    "evaluate_pair",
    "evaluate_pairs",
    "report_lines",
    "summary",
]
