"""Sampling grids, morph maps and the differentiable Morph operation."""

from __future__ import annotations

from .encoding import positional_encoding
from .exception import MorphError, MorphFileError, MorphShapeError
from .field import MorphConfig, MorphMap, compose_grid, lerp_maps, normalize_map, offset_map
from .grid import SamplingGrid, identity_grid
from .io import load_morph_map, save_morph_map
from .labels import LabelMap, segment_onehot_warp, warp_labels
from .resize import resize_field, resize_grid
from .sample import bilinear_sample, morph_features

__all__ = [
    "LabelMap",
    "MorphConfig",
    "MorphError",
    "MorphFileError",
    "MorphMap",
    "MorphShapeError",
    "SamplingGrid",
    "bilinear_sample",
    "compose_grid",
    "identity_grid",
    "lerp_maps",
    "load_morph_map",
    "morph_features",
    "normalize_map",
    "offset_map",
    "positional_encoding",
    "resize_field",
    "resize_grid",
    "save_morph_map",
    "segment_onehot_warp",
    "warp_labels",
]
