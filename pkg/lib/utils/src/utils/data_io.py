"""
Data I/O Utility Functions

Provides functions for reading and writing the file formats the rectifier
exchanges with the outside world: portable pixmaps/graymaps, key=value
summaries, tab-separated logs, JSON, and tabular reports (CSV, Excel, JSON).
"""

import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
from PIL import Image

PORTABLE_SUFFIXES = {".ppm", ".pgm", ".pnm"}


class ImageFormatError(ValueError):
    """Raised when an image path uses a format that is not enabled."""


def _check_suffix(filepath: Path, allow_compressed: bool) -> None:
    if filepath.suffix.lower() not in PORTABLE_SUFFIXES and not allow_compressed:
        raise ImageFormatError(
            f"Unsupported image format: {filepath.suffix}. Use .ppm or .pgm "
            f"(compressed formats need allow_compressed=True)"
        )


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Quantize a [0, 1] float image to 8 bits (round half to even)."""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def read_image(filepath: str | Path, allow_compressed: bool = False) -> np.ndarray:
    """
    Read a colour image as float32 H×W×3 in [0, 1].

    Args:
        filepath: Path to a .ppm (P6) file, or any Pillow format when
                  allow_compressed is set
        allow_compressed: Accept PNG/JPEG/etc.

    Raises:
        FileNotFoundError: If file doesn't exist
        ImageFormatError: If the format is not enabled
    """
    filepath = Path(filepath)

    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    _check_suffix(filepath, allow_compressed)

    with Image.open(filepath) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    return rgb / 255.0


def read_gray(filepath: str | Path, allow_compressed: bool = False) -> np.ndarray:
    """Read a single-channel image as float32 H×W in [0, 1]."""
    filepath = Path(filepath)

    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    _check_suffix(filepath, allow_compressed)

    with Image.open(filepath) as img:
        gray = np.asarray(img.convert("L"), dtype=np.float32)
    return gray / 255.0


def write_image(image: np.ndarray, filepath: str | Path, allow_compressed: bool = False) -> Path:
    """
    Write a [0, 1] float image. H×W×3 becomes P6 (.ppm), H×W becomes P5 (.pgm).

    Returns:
        Path to saved file
    """
    filepath = Path(filepath)
    _check_suffix(filepath, allow_compressed)

    pixels = to_uint8(image)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[..., 0]
    mode = "RGB" if pixels.ndim == 3 else "L"
    Image.fromarray(pixels, mode=mode).save(filepath)
    return filepath


def write_kv(values: Mapping[str, Any], filepath: str | Path) -> Path:
    """Write sorted ``key=value`` lines."""
    filepath = Path(filepath)

    with open(filepath, "w", encoding="utf-8") as f:
        for key in sorted(values):
            f.write(f"{key}={values[key]}\n")

    return filepath


def read_kv(filepath: str | Path) -> dict[str, str]:
    filepath = Path(filepath)

    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")

    values: dict[str, str] = {}
    with open(filepath, "r", encoding="utf-8") as f:
        for line in f:
            if "=" in line:
                key, _, value = line.rstrip("\n").partition("=")
                values[key] = value
    return values


def write_tsv(rows: Iterable[Sequence[Any]], filepath: str | Path, append: bool = False) -> Path:
    """Write ``a<TAB>b`` lines, one per row."""
    filepath = Path(filepath)

    with open(filepath, "a" if append else "w", encoding="utf-8") as f:
        for row in rows:
            f.write("\t".join(str(cell) for cell in row) + "\n")

    return filepath


def read_tsv(filepath: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    """Read a header-less TSV into a DataFrame with the given column names."""
    filepath = Path(filepath)

    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    if filepath.stat().st_size == 0:
        return pd.DataFrame(columns=list(columns))

    return pd.read_csv(filepath, sep="\t", header=None, names=list(columns), dtype=str, keep_default_na=False)


def save_json(
    data: dict[str, Any] | list[Any],
    filepath: str | Path,
    indent: int = 2,
    ensure_ascii: bool = False,
) -> Path:
    """
    Save data to a JSON file with pretty formatting.

    Returns:
        Path to saved file
    """
    filepath = Path(filepath)

    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=indent, ensure_ascii=ensure_ascii, sort_keys=True)

    return filepath


def load_json(filepath: str | Path) -> dict[str, Any] | list[Any]:
    """
    Load data from a JSON file.

    Raises:
        FileNotFoundError: If file doesn't exist
    """
    filepath = Path(filepath)

    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")

    with open(filepath, "r", encoding="utf-8") as f:
        return json.load(f)


def save_dataframe(
    df: pd.DataFrame, filepath: str | Path, index: bool = False, **kwargs
) -> Path:
    """
    Save DataFrame to file based on extension.

    Args:
        df: pandas DataFrame to save
        filepath: Output path (extension determines format)
        index: Whether to include row index (default: False)
        **kwargs: Additional arguments passed to pandas save method

    Returns:
        Path to saved file
    """
    filepath = Path(filepath)
    suffix = filepath.suffix.lower()

    if suffix in [".xlsx", ".xls"]:
        df.to_excel(filepath, index=index, **kwargs)
    elif suffix == ".csv":
        df.to_csv(filepath, index=index, **kwargs)
    elif suffix == ".json":
        df.to_json(filepath, orient="records", **kwargs)
    else:
        raise ValueError(f"Unsupported file format: {suffix}. Use .xlsx, .xls, .csv, or .json")

    return filepath
