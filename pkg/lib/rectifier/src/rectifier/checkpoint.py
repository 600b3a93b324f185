"""
Checkpoints (DTRC format)

Layout, all little-endian:
    b"DTRC" | u16 version | u32 tensor count
    per tensor (sorted by name):
        u16 name length | UTF-8 name | u8 rank | u32 extent × rank | f32 data (row-major)
    u32 config length | UTF-8 config block of sorted ``key=value`` lines

Sorting names and config keys makes save → load → save byte-identical.

Usage:
    weights = ModelWeights.from_module(model, to_kv(model.config, {"kind": "geotr"}))
    weights.save("geo.dtrc")
    loaded = ModelWeights.load("geo.dtrc")
    model.load_state_dict(loaded.model_tensors())
"""

from dataclasses import dataclass, field
from pathlib import Path
import struct
from typing import Dict, Mapping, Union

import numpy as np

from .config import parse_kv
from .errors import CheckpointError, DataError

MAGIC = b"DTRC"
VERSION = 1
OPTIMIZER_PREFIX = "optim."


@dataclass
class ModelWeights:
    """Named tensors plus the architecture/run config that produced them."""

    tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    config: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_module(cls, module, config: Union[str, Mapping[str, str]] = "") -> "ModelWeights":
        config = parse_kv(config) if isinstance(config, str) else dict(config)
        return cls(tensors=module.state_dict(), config=config)

    def model_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if not k.startswith(OPTIMIZER_PREFIX)}

    def optimizer_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith(OPTIMIZER_PREFIX)}

    def config_text(self) -> str:
        return "".join(f"{key}={self.config[key]}\n" for key in sorted(self.config))

    # ------------------------------------------------------------------
    # Encoding
    # ------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<HI", VERSION, len(self.tensors))]
        for name in sorted(self.tensors):
            array = np.asarray(self.tensors[name])
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise CheckpointError(f"tensor name too long: {name[:40]}...", tensor=name)
            if array.ndim > 0xFF:
                raise CheckpointError(f"tensor '{name}' has rank {array.ndim}", tensor=name)
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
            parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
        config = self.config_text().encode("utf-8")
        parts.append(struct.pack("<I", len(config)))
        parts.append(config)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes, source: str = "<bytes>") -> "ModelWeights":
        reader = _Reader(blob, source)
        if reader.take(4) != MAGIC:
            raise CheckpointError(f"{source}: not a DTRC checkpoint (bad magic)")
        version, count = reader.unpack("<HI")
        if version != VERSION:
            raise CheckpointError(f"{source}: unsupported DTRC version {version}, expected {VERSION}")

        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_length,) = reader.unpack("<H")
            name = reader.take(name_length).decode("utf-8")
            (rank,) = reader.unpack("<B")
            shape = reader.unpack(f"<{rank}I") if rank else ()
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(reader.take(4 * size, tensor=name), dtype="<f4")
            tensors[name] = data.astype(np.float32).reshape(shape)

        (config_length,) = reader.unpack("<I")
        config = parse_kv(reader.take(config_length).decode("utf-8"))
        if reader.remaining:
            raise CheckpointError(f"{source}: {reader.remaining} trailing bytes after config block")
        return cls(tensors=tensors, config=config)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(self.to_bytes())
        except OSError as exc:
            raise DataError(f"cannot write checkpoint {path}: {exc}") from exc
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModelWeights":
        path = Path(path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
        return cls.from_bytes(blob, source=str(path))


class _Reader:
    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.source = source
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.blob) - self.offset

    def take(self, n: int, tensor: str | None = None) -> bytes:
        if n > self.remaining:
            where = f" while reading tensor '{tensor}'" if tensor else ""
            raise CheckpointError(f"{self.source}: truncated checkpoint{where}", tensor=tensor)
        chunk = self.blob[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))
