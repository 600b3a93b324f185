"""Seeded random streams.

All randomness in the library flows through Rng so that a seed plus a
config fully determines every generated value. Streams are PCG64, which
numpy guarantees to be reproducible across platforms.
"""

from dataclasses import dataclass, field
import hashlib
from typing import Tuple

import numpy as np


def _label_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class Rng:
    """A 64-bit seeded random stream.

    ``spawn(label)`` derives an independent child stream whose values depend
    only on (seed, label), never on how much of the parent was consumed.
    """

    seed: int
    _generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, label: str | int) -> "Rng":
        seq = np.random.SeedSequence([self.seed, _label_key(str(label))])
        return Rng(int(seq.generate_state(1, dtype=np.uint64)[0]))

    # Thin forwarding helpers, so call sites read naturally.

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self._generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self._generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._generator.integers(low, high, size)

    def choice(self, values, size=None, replace=True):
        return self._generator.choice(values, size=size, replace=replace)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def state(self) -> Tuple[int, dict]:
        return self.seed, self._generator.bit_generator.state
