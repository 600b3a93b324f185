"""
Utils Library

Image, table and log file I/O plus the run log shared by the commands.
"""

from .data_io import (
    ImageFormatError,
    load_json,
    read_gray,
    read_image,
    read_kv,
    read_tsv,
    save_dataframe,
    save_json,
    to_uint8,
    write_image,
    write_kv,
    write_tsv,
)
from .run_log import RunLog

__all__ = [
    # Images
    "read_image",
    "read_gray",
    "write_image",
    "to_uint8",
    "ImageFormatError",
    # Text and tables
    "write_kv",
    "read_kv",
    "write_tsv",
    "read_tsv",
    "save_json",
    "load_json",
    "save_dataframe",
    # Logging
    "RunLog",
]
