"""
Segmentation network: a three-level U-shaped encoder-decoder.

    enc1 (C1, full) ──────────────────────────┐
      └ pool → enc2 (C2, 1/2) ──────────┐      │
                 └ pool → bottleneck (C3, 1/4)  │
                            └ up ⊕ enc2 → dec2 (C2)
                                         └ up ⊕ enc1 → dec1 (C1) → 1×1 conv → sigmoid
"""

from ..config import SegConfig
from ..errors import DimensionError
from ..numerics import (
    Conv2d,
    InstanceNorm,
    Module,
    Rng,
    Tensor,
    as_tensor,
    avg_pool2d,
    concat,
    upsample_nearest2d,
)


class ConvBlock(Module):
    """(conv 3×3 → instance norm → ReLU) × 2."""

    def __init__(self, in_channels: int, out_channels: int, rng: Rng):
        self.conv1 = Conv2d(in_channels, out_channels, 3, rng)
        self.norm1 = InstanceNorm(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, 3, rng)
        self.norm2 = InstanceNorm(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm1(self.conv1(x)).relu()
        return self.norm2(self.conv2(x)).relu()


class SegModel(Module):
    def __init__(self, config: SegConfig | None = None):
        self.config = config or SegConfig()
        rng = Rng(self.config.seed).spawn("segmenter")
        c1, c2, c3 = self.config.channels
        self.enc1 = ConvBlock(3, c1, rng)
        self.enc2 = ConvBlock(c1, c2, rng)
        self.bottleneck = ConvBlock(c2, c3, rng)
        self.dec2 = ConvBlock(c3 + c2, c2, rng)
        self.dec1 = ConvBlock(c2 + c1, c1, rng)
        self.head = Conv2d(c1, 1, 1, rng)

    def forward(self, image) -> Tensor:
        """H×W×3 image → H×W foreground probabilities."""
        image = as_tensor(image)
        size = self.config.image_size
        if image.shape != (size, size, 3):
            raise DimensionError(f"segmenter expects {size}×{size}×3 input, got {image.shape}")

        e1 = self.enc1(image)
        e2 = self.enc2(avg_pool2d(e1))
        bottom = self.bottleneck(avg_pool2d(e2))
        d2 = self.dec2(concat([upsample_nearest2d(bottom), e2], axis=-1))
        d1 = self.dec1(concat([upsample_nearest2d(d2), e1], axis=-1))
        return self.head(d1).sigmoid().reshape(size, size)
