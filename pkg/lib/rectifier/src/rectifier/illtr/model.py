"""
Illumination Correction Transformer

Works on fixed-size patches without ever lowering the feature resolution:

    patch Hp×Wp×3
      → head: 3 convs (3 → C → C → C), full resolution
      → P×P mini-patches flattened to (Hp/P)² tokens of width C·P²
      → encoder (+ position embedding), parallel decoder (+ query embedding)
      → tokens folded back to Hp×Wp×C → one conv → sigmoid → Hp×Wp×3
"""

import numpy as np

from ..config import IllConfig
from ..errors import DimensionError
from ..geotr.transformer import DecoderLayer, EncoderLayer, decode, encode
from ..numerics import Conv2d, Embedding, Module, Rng, Tensor, as_tensor, no_grad


def flatten_mini_patches(features: Tensor, mini_patch: int) -> Tensor:
    """Hp×Wp×c → (Hp/P·Wp/P)×(P·P·c), mini-patches in row-major order."""
    h, w, c = features.shape
    p = mini_patch
    if h % p or w % p:
        raise DimensionError(f"{h}×{w} features do not tile into {p}×{p} mini-patches")
    blocks = features.reshape(h // p, p, w // p, p, c).transpose(0, 2, 1, 3, 4)
    return blocks.reshape((h // p) * (w // p), p * p * c)


def unflatten_mini_patches(tokens: Tensor, height: int, width: int, mini_patch: int) -> Tensor:
    p = mini_patch
    n, depth = tokens.shape
    c = depth // (p * p)
    if n != (height // p) * (width // p) or depth != p * p * c:
        raise DimensionError(f"tokens {tokens.shape} do not fold into {height}×{width} with P={p}")
    blocks = tokens.reshape(height // p, width // p, p, p, c).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(height, width, c)


class IllModel(Module):
    def __init__(self, config: IllConfig | None = None):
        self.config = config or IllConfig()
        cfg = self.config
        rng = Rng(cfg.seed).spawn("illtr")

        head_rng = rng.spawn("head")
        c = cfg.head_channels
        self.head = [Conv2d(3, c, 3, head_rng), Conv2d(c, c, 3, head_rng), Conv2d(c, c, 3, head_rng)]
        self.position = Embedding(cfg.tokens, cfg.width, rng.spawn("position"))
        self.query = Embedding(cfg.tokens, cfg.width, rng.spawn("query")) if cfg.use_decoder else None

        layer_rng = rng.spawn("encoder")
        self.encoder = (
            [EncoderLayer(cfg.width, cfg.heads, cfg.ffn_width, layer_rng) for _ in range(cfg.depth)]
            if cfg.use_encoder
            else []
        )
        layer_rng = rng.spawn("decoder")
        self.decoder = (
            [DecoderLayer(cfg.width, cfg.heads, cfg.ffn_width, layer_rng) for _ in range(cfg.depth)]
            if cfg.use_decoder
            else []
        )
        self.tail = Conv2d(c, 3, 3, rng.spawn("tail"))

    def forward(self, patch) -> Tensor:
        return ill_forward(patch, self)

    def correct_patch(self, patch: np.ndarray) -> np.ndarray:
        with no_grad():
            return ill_forward(np.asarray(patch, dtype=self.tail.weight.dtype), self).data


def ill_head(patch, model: IllModel) -> Tensor:
    """Hp×Wp×3 patch → mini-patch tokens of width C·P²."""
    patch = as_tensor(patch)
    size = model.config.patch_size
    if patch.shape != (size, size, 3):
        raise DimensionError(f"illumination head expects {size}×{size}×3 patches, got {patch.shape}")
    features = patch
    for index, conv in enumerate(model.head):
        features = conv(features)
        if index < len(model.head) - 1:
            features = features.relu()
    return flatten_mini_patches(features, model.config.mini_patch)


def ill_forward(patch, model: IllModel) -> Tensor:
    """Corrected Hp×Wp×3 patch with values in [0, 1]."""
    cfg = model.config
    tokens = ill_head(patch, model)
    memory = encode(tokens, model.position.weight, model.encoder)
    if model.query is not None:
        decoded = decode(memory, model.position.weight, model.query.weight, model.decoder)
    else:
        decoded = memory
    features = unflatten_mini_patches(decoded, cfg.patch_size, cfg.patch_size, cfg.mini_patch)
    return model.tail(features).sigmoid()
