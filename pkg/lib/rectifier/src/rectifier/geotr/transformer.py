"""
Post-norm transformer layers with parallel (non-autoregressive) decoding.

Encoder layer:
    F' = LN(MA(F, F, F) + F)
    F  = LN(FFN(F') + F')

Decoder layer, with the encoder output M as cross-attention keys/values:
    Y'  = LN(MA(Y, Y, Y) + Y)
    Y'' = LN(MA(Y', M, M) + R)      R = Y ("printed") or Y' ("attended")
    Y   = LN(FFN(Y'') + Y'')

The decoder input is the position embedding plus a learned query embedding,
so every position decodes in one pass.
Shared by the geometric and the illumination transformers.
"""

from typing import Literal, Optional, Sequence

from ..errors import ConfigError, DimensionError
from ..numerics import FeedForward, LayerNorm, Module, MultiHeadAttention, Rng, Tensor, as_tensor

DecoderResidual = Literal["printed", "attended"]


class EncoderLayer(Module):
    def __init__(self, channels: int, heads: int, ffn_dim: int, rng: Rng):
        self.attention = MultiHeadAttention(channels, heads, rng)
        self.norm1 = LayerNorm(channels)
        self.ffn = FeedForward(channels, ffn_dim, rng)
        self.norm2 = LayerNorm(channels)

    def forward(self, features: Tensor) -> Tensor:
        attended = self.norm1(self.attention(features, features, features) + features)
        return self.norm2(self.ffn(attended) + attended)


class DecoderLayer(Module):
    def __init__(self, channels: int, heads: int, ffn_dim: int, rng: Rng, residual: DecoderResidual = "printed"):
        if residual not in ("printed", "attended"):
            raise ConfigError(f"unknown decoder residual '{residual}'. Available: ['attended', 'printed']")
        self._residual = residual
        self.self_attention = MultiHeadAttention(channels, heads, rng)
        self.norm1 = LayerNorm(channels)
        self.cross_attention = MultiHeadAttention(channels, heads, rng)
        self.norm2 = LayerNorm(channels)
        self.ffn = FeedForward(channels, ffn_dim, rng)
        self.norm3 = LayerNorm(channels)

    def forward(self, queries: Tensor, memory: Tensor) -> Tensor:
        first = self.norm1(self.self_attention(queries, queries, queries) + queries)
        skip = queries if self._residual == "printed" else first
        second = self.norm2(self.cross_attention(first, memory, memory) + skip)
        return self.norm3(self.ffn(second) + second)


def _resolve_depth(depth: Optional[int], available: int) -> int:
    if depth is None:
        return available
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    if depth > available:
        raise ConfigError(f"depth {depth} exceeds the {available} layers provided")
    return depth


def encode(
    features: Tensor, position: Tensor, layers: Sequence[EncoderLayer], depth: Optional[int] = None
) -> Tensor:
    """Add the position embedding, then run ``depth`` encoder layers."""
    features, position = as_tensor(features), as_tensor(position)
    depth = _resolve_depth(depth, len(layers))
    if features.shape != position.shape:
        raise DimensionError(f"features {features.shape} and position embedding {position.shape} differ")
    features = features + position
    for layer in layers[:depth]:
        features = layer(features)
    return features


def decode(
    memory: Tensor, position: Tensor, query: Tensor, layers: Sequence[DecoderLayer], depth: Optional[int] = None
) -> Tensor:
    """Decode position + query embeddings against ``memory`` in one parallel pass."""
    memory, position, query = as_tensor(memory), as_tensor(position), as_tensor(query)
    depth = _resolve_depth(depth, len(layers))
    if position.shape != query.shape:
        raise DimensionError(f"position embedding {position.shape} and query embedding {query.shape} differ")
    if memory.ndim != 2 or memory.shape[1] != position.shape[1]:
        raise DimensionError(f"memory {memory.shape} does not match embedding width {position.shape[1]}")
    queries = position + query
    for layer in layers[:depth]:
        queries = layer(queries, memory)
    return queries
