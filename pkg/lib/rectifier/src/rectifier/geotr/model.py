"""
Geometric Unwarping Transformer

    image S×S×3
      → head: 6 residual blocks (stride 2 every second block) + 3×3 conv to hidden_dim
      → flatten to (S/8)² tokens of width hidden_dim
      → encoder (head features + position embedding)
      → parallel decoder (position + query embedding, attending to the encoder memory)
      → tail: coarse 2-channel field + 3×3×64 mask logits per coarse pixel
      → convex (or bilinear) ×8 upsample → S×S×2 normalized backward map

Ablations follow the config flags: without an encoder the decoder reads
the embedded head features directly; without a decoder the tail reads the
encoder output.

Usage:
    model = GeoModel(GeoConfig())
    bmap = model.predict(image_288)          # BackwardMap 288×288
"""

from typing import List

import numpy as np

from ..config import GeoConfig
from ..errors import DimensionError
from ..fields import BackwardMap, bilinear_upsample_field, convex_upsample, identity_map, mask_from_logits
from ..numerics import Conv2d, Embedding, InstanceNorm, Module, Rng, Tensor, as_tensor, no_grad
from .transformer import DecoderLayer, EncoderLayer, decode, encode

MASK_CHANNELS = 9 * 64


class ResidualBlock(Module):
    """conv-norm-ReLU, conv-norm, add skip, ReLU. Strided blocks project the skip."""

    def __init__(self, in_channels: int, out_channels: int, stride: int, rng: Rng):
        self.conv1 = Conv2d(in_channels, out_channels, 3, rng, stride=stride)
        self.norm1 = InstanceNorm(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, 3, rng)
        self.norm2 = InstanceNorm(out_channels)
        self.projection = (
            Conv2d(in_channels, out_channels, 1, rng, stride=stride)
            if stride != 1 or in_channels != out_channels
            else None
        )

    def forward(self, x: Tensor) -> Tensor:
        out = self.norm1(self.conv1(x)).relu()
        out = self.norm2(self.conv2(out))
        skip = self.projection(x) if self.projection is not None else x
        return (out + skip).relu()


class GeoHead(Module):
    def __init__(self, config: GeoConfig, rng: Rng):
        blocks: List[ResidualBlock] = []
        in_channels = 3
        for channels in config.head_channels:
            blocks.append(ResidualBlock(in_channels, channels, 2, rng))
            blocks.append(ResidualBlock(channels, channels, 1, rng))
            in_channels = channels
        self.blocks = blocks
        self.projection = Conv2d(in_channels, config.hidden_dim, 3, rng)

    def forward(self, image: Tensor) -> Tensor:
        features = image
        for block in self.blocks:
            features = block(features)
        return self.projection(features)


class GeoTail(Module):
    def __init__(self, config: GeoConfig, rng: Rng):
        self.flow1 = Conv2d(config.hidden_dim, config.tail_dim, 3, rng)
        self.flow2 = Conv2d(config.tail_dim, 2, 3, rng)
        self.mask1 = Conv2d(config.hidden_dim, config.tail_dim, 3, rng)
        self.mask2 = Conv2d(config.tail_dim, MASK_CHANNELS, 1, rng)

    def coarse_field(self, grid: Tensor) -> Tensor:
        return self.flow2(self.flow1(grid).relu())

    def mask(self, grid: Tensor) -> Tensor:
        return mask_from_logits(self.mask2(self.mask1(grid).relu()))


def geo_head(image, model: "GeoModel") -> Tensor:
    """S×S×3 image → (S/8)² tokens of width hidden_dim (row-major flatten)."""
    image = as_tensor(image)
    size = model.config.image_size
    if image.shape != (size, size, 3):
        raise DimensionError(f"geometric head expects {size}×{size}×3 input, got {image.shape}")
    features = model.head(image)
    return flatten_grid(features)


def flatten_grid(features: Tensor) -> Tensor:
    h, w, c = features.shape
    return features.reshape(h * w, c)


def unflatten_grid(tokens: Tensor, height: int, width: int) -> Tensor:
    n, c = tokens.shape
    if n != height * width:
        raise DimensionError(f"{n} tokens cannot form a {height}×{width} grid")
    return tokens.reshape(height, width, c)


def geo_tail(f_d: Tensor, tail: GeoTail, learned_upsample: bool, grid_size: int) -> Tensor:
    """Decoded tokens → 8·grid×8·grid×2 field (before any identity offset)."""
    grid = unflatten_grid(as_tensor(f_d), grid_size, grid_size)
    coarse = tail.coarse_field(grid)
    if learned_upsample:
        return convex_upsample(coarse, tail.mask(grid))
    return bilinear_upsample_field(coarse)


class GeoModel(Module):
    def __init__(self, config: GeoConfig | None = None):
        self.config = config or GeoConfig()
        cfg = self.config
        rng = Rng(cfg.seed).spawn("geotr")

        self.head = GeoHead(cfg, rng.spawn("head"))
        self.position = Embedding(cfg.tokens, cfg.hidden_dim, rng.spawn("position"))
        self.query = Embedding(cfg.tokens, cfg.hidden_dim, rng.spawn("query")) if cfg.use_decoder else None

        layer_rng = rng.spawn("encoder")
        self.encoder = (
            [EncoderLayer(cfg.hidden_dim, cfg.heads, cfg.ffn_width, layer_rng) for _ in range(cfg.depth)]
            if cfg.use_encoder
            else []
        )
        layer_rng = rng.spawn("decoder")
        self.decoder = (
            [
                DecoderLayer(cfg.hidden_dim, cfg.heads, cfg.ffn_width, layer_rng, cfg.decoder_residual)
                for _ in range(cfg.depth)
            ]
            if cfg.use_decoder
            else []
        )
        self.tail = GeoTail(cfg, rng.spawn("tail"))
        self._identity = identity_map(cfg.image_size, cfg.image_size).coords.astype(np.float32)

    def astype(self, dtype) -> "GeoModel":
        super().astype(dtype)
        self._identity = self._identity.astype(dtype)
        return self

    def forward(self, image) -> Tensor:
        """S×S×3 background-excluded image → S×S×2 normalized (u, v)."""
        features = geo_head(as_tensor(image, dtype=self.position.weight.dtype), self)
        memory = encode(features, self.position.weight, self.encoder)
        if self.query is not None:
            decoded = decode(memory, self.position.weight, self.query.weight, self.decoder)
        else:
            decoded = memory
        field = geo_tail(decoded, self.tail, self.config.learned_upsample, self.config.grid_size)
        if self.config.predict_residual:
            field = field + self._identity
        return field

    def predict(self, image: np.ndarray) -> BackwardMap:
        with no_grad():
            field = self.forward(np.asarray(image, dtype=self.position.weight.dtype))
        return BackwardMap(field.data)
