"""
Dataset Providers

On-disk layout, one group of files per sample plus a manifest:

    NNNNNN.img.ppm      distorted image
    NNNNNN.bmap         ground-truth backward map (BMAP)
    NNNNNN.mask.pgm     document footprint
    NNNNNN.clean.ppm    flat, unshaded page
    NNNNNN.shading.pgm  shading field
    NNNNNN.txt          page text
    NNNNNN.layout.json  glyph cell geometry
    manifest.tsv        name<TAB>seed per sample

The manifest seeds fully determine every byte of the directory.

Usage:
    write_dataset(count=8, seed=0, out="data/")
    dataset = DirectoryDataset("data/")
    record = dataset.get(0)
"""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from utils import RunLog, load_json, read_gray, read_image, read_tsv, save_json, write_image, write_tsv

from ..config import SynthConfig
from ..errors import DataError
from ..fields import read_bmap, write_bmap
from ..numerics import Rng
from ..segmenter import DocMask
from .document import PageLayout
from .sample import SampleRecord, gen_sample

MANIFEST = "manifest.tsv"
SUFFIXES = (".img.ppm", ".bmap", ".mask.pgm", ".clean.ppm", ".shading.pgm", ".txt", ".layout.json")


def sample_name(index: int) -> str:
    return f"{index:06d}"


def sample_seeds(seed: int, count: int) -> List[int]:
    """Per-sample seeds derived from a dataset seed."""
    base = Rng(seed)
    return [int(base.spawn(f"sample-{i}").seed % 2**31) for i in range(count)]


class DatasetProvider(ABC):
    """Indexed access to SampleRecords."""

    @abstractmethod
    def names(self) -> List[str]:
        pass

    @abstractmethod
    def load(self, name: str) -> SampleRecord:
        pass

    def __len__(self) -> int:
        return len(self.names())

    def get(self, index: int) -> SampleRecord:
        names = self.names()
        if not 0 <= index < len(names):
            raise IndexError(f"sample index {index} outside [0, {len(names)})")
        return self.load(names[index])

    def __iter__(self) -> Iterator[SampleRecord]:
        for name in self.names():
            yield self.load(name)


class GeneratedDataset(DatasetProvider):
    """Samples generated in memory from a seed list; each is built once."""

    def __init__(self, seeds: Sequence[int], config: SynthConfig = SynthConfig(), log: Optional[RunLog] = None):
        self.seeds = list(seeds)
        self.config = config
        self.log = log
        self._cache: Dict[str, SampleRecord] = {}

    @classmethod
    def from_seed(cls, seed: int, count: int, config: SynthConfig = SynthConfig()) -> "GeneratedDataset":
        return cls(sample_seeds(seed, count), config)

    def names(self) -> List[str]:
        return [sample_name(i) for i in range(len(self.seeds))]

    def load(self, name: str) -> SampleRecord:
        if name not in self._cache:
            index = int(name)
            if not 0 <= index < len(self.seeds):
                raise DataError(f"no generated sample named {name}")
            self._cache[name] = gen_sample(self.seeds[index], self.config, self.log)
        return self._cache[name]


class DirectoryDataset(DatasetProvider):
    """A dataset directory written by ``write_dataset``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        manifest = self.root / MANIFEST
        if not manifest.exists():
            raise DataError(f"dataset manifest not found: {manifest}")
        table = read_tsv(manifest, ["name", "seed"])
        self._seeds = dict(zip(table["name"], (int(s) for s in table["seed"])))

    def names(self) -> List[str]:
        return sorted(self._seeds)

    def load(self, name: str) -> SampleRecord:
        if name not in self._seeds:
            raise DataError(f"sample {name} is not listed in {self.root / MANIFEST}")
        stem = self.root / name
        try:
            record = SampleRecord(
                seed=self._seeds[name],
                distorted=read_image(f"{stem}.img.ppm"),
                bmap=read_bmap(f"{stem}.bmap"),
                mask=DocMask((read_gray(f"{stem}.mask.pgm") >= 0.5).astype(np.uint8)),
                clean=read_image(f"{stem}.clean.ppm"),
                shading=read_gray(f"{stem}.shading.pgm"),
                text=Path(f"{stem}.txt").read_text(encoding="utf-8"),
                layout=PageLayout.from_dict(load_json(f"{stem}.layout.json")),
            )
        except DataError:
            raise
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot load sample {name} from {self.root}: {exc}") from exc
        return record


def write_record(record: SampleRecord, root: str | Path, name: str) -> None:
    stem = Path(root) / name
    try:
        write_image(record.distorted, f"{stem}.img.ppm")
        write_bmap(f"{stem}.bmap", record.bmap)
        write_image(record.mask.values.astype(np.float32), f"{stem}.mask.pgm")
        write_image(record.clean, f"{stem}.clean.ppm")
        write_image(record.shading, f"{stem}.shading.pgm")
        Path(f"{stem}.txt").write_text(record.text, encoding="utf-8")
        save_json(record.layout.to_dict(), f"{stem}.layout.json")
    except DataError:
        raise
    except OSError as exc:
        raise DataError(f"cannot write sample {name} to {root}: {exc}") from exc


def write_dataset(
    count: int,
    seed: int,
    out: str | Path,
    config: SynthConfig = SynthConfig(),
    threads: int = 1,
    verbose: bool = False,
    log: Optional[RunLog] = None,
) -> Path:
    """Generate ``count`` samples into ``out``; returns the manifest path."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create dataset directory {out}: {exc}") from exc

    seeds = sample_seeds(seed, count)
    names = [sample_name(i) for i in range(count)]

    def build(index: int) -> None:
        write_record(gen_sample(seeds[index], config, log), out, names[index])

    indices = range(count)
    progress = tqdm(total=count, desc="synth", disable=not verbose)
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for _ in pool.map(build, indices):
                progress.update(1)
    else:
        for index in indices:
            build(index)
            progress.update(1)
    progress.close()

    try:
        return write_tsv(zip(names, seeds), out / MANIFEST)
    except OSError as exc:
        raise DataError(f"cannot write manifest in {out}: {exc}") from exc
