"""Geometric unwarping transformer."""

from .loss import geo_loss
from .model import (
    GeoHead,
    GeoModel,
    GeoTail,
    ResidualBlock,
    flatten_grid,
    geo_head,
    geo_tail,
    unflatten_grid,
)
from .transformer import DecoderLayer, EncoderLayer, decode, encode
from .unwarp import check_image, document_mask, map_from_working, predict_map, unwarp

__all__ = [
    "GeoModel",
    "GeoHead",
    "GeoTail",
    "ResidualBlock",
    "EncoderLayer",
    "DecoderLayer",
    "encode",
    "decode",
    "geo_head",
    "geo_tail",
    "flatten_grid",
    "unflatten_grid",
    "geo_loss",
    "unwarp",
    "predict_map",
    "document_mask",
    "map_from_working",
    "check_image",
]
