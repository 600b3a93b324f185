"""
Batch evaluation of rectified images against ground truth.

Every pair is scored independently (LD, MS-SSIM, and ED/CER when text is
available) and collected into a DataFrame with one row per image and a final
``mean`` row. Pairs may be scored on a thread pool; each row depends only on
its own pair.

Usage:
    pairs = [EvalPair("page", rectified, scan, hyp_text="AB", ref_text="AB")]
    table = evaluate_pairs(pairs, threads=4)
    lines = report_lines(table)
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from utils import RunLog

from ..errors import ArgumentError
from ..fields import resize_image
from .flow import dense_flow, local_distortion
from .ssim import ms_ssim, to_grayscale
from .text import cer, edit_distance

METRICS: Tuple[str, ...] = ("ld", "ms_ssim", "ed", "cer")
TEXT_METRICS = ("ed", "cer")
MEAN_ROW = "mean"


@dataclass
class EvalPair:
    name: str
    pred: np.ndarray
    gt: np.ndarray
    hyp_text: Optional[str] = None
    ref_text: Optional[str] = None

    @property
    def has_text(self) -> bool:
        return self.hyp_text is not None and self.ref_text is not None


def prepare_pair(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Resize ``pred`` to the ground-truth extent, then convert both to gray."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape[:2] != gt.shape[:2]:
        pred = resize_image(pred, gt.shape[0], gt.shape[1])
    return to_grayscale(pred), to_grayscale(gt)


def check_metrics(metrics: Sequence[str]) -> List[str]:
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise ArgumentError(f"unknown metrics {unknown}. Available: {list(METRICS)}")
    return [m for m in METRICS if m in metrics]


def evaluate_pair(pair: EvalPair, metrics: Sequence[str] = METRICS) -> Dict[str, float]:
    metrics = check_metrics(metrics)
    pred, gt = prepare_pair(pair.pred, pair.gt)
    row: Dict[str, float] = {}
    if "ld" in metrics:
        row["ld"] = local_distortion(dense_flow(gt, pred))
    if "ms_ssim" in metrics:
        row["ms_ssim"] = ms_ssim(pred, gt)
    if pair.has_text:
        if "ed" in metrics:
            row["ed"] = float(edit_distance(pair.hyp_text, pair.ref_text))
        if "cer" in metrics and pair.ref_text:
            row["cer"] = cer(pair.hyp_text, pair.ref_text)
    return row


def evaluate_pairs(
    pairs: Sequence[EvalPair],
    metrics: Sequence[str] = METRICS,
    threads: int = 1,
    verbose: bool = False,
    log: Optional[RunLog] = None,
) -> pd.DataFrame:
    """Per-image metrics plus a trailing ``mean`` row (NaN where not computed)."""
    metrics = check_metrics(metrics)
    if log is not None and any(m in metrics for m in TEXT_METRICS):
        for pair in pairs:
            if not pair.has_text:
                log.warn("no text reference; skipping ED/CER", item=pair.name)

    def score(pair: EvalPair) -> Dict[str, float]:
        return evaluate_pair(pair, metrics)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(tqdm(pool.map(score, pairs), total=len(pairs), desc="evaluate", disable=not verbose))
    else:
        rows = [score(pair) for pair in tqdm(pairs, desc="evaluate", disable=not verbose)]

    table = pd.DataFrame(rows, columns=metrics, dtype=np.float64)
    table.insert(0, "name", [pair.name for pair in pairs])
    means = {m: table[m].mean() if table[m].notna().any() else np.nan for m in metrics}
    mean_row = pd.DataFrame([{"name": MEAN_ROW, **means}])
    return pd.concat([table, mean_row], ignore_index=True)


def _format(value: float) -> str:
    return "nan" if pd.isna(value) else f"{value:.6f}"


def report_lines(table: pd.DataFrame) -> List[str]:
    """``<image>.<metric><TAB><value>`` lines, mean row last; NaN cells omitted."""
    metrics = [c for c in table.columns if c != "name"]
    lines = []
    for _, row in table.iterrows():
        for metric in metrics:
            if not pd.isna(row[metric]):
                lines.append(f"{row['name']}.{metric}\t{_format(row[metric])}")
    return lines


def summary(table: pd.DataFrame) -> Dict[str, str]:
    """Aggregate values for the machine-readable key=value summary."""
    means = table[table["name"] == MEAN_ROW].iloc[0]
    values = {f"{metric}_mean": _format(means[metric]) for metric in table.columns if metric != "name"}
    values["pairs"] = str(int((table["name"] != MEAN_ROW).sum()))
    return values
