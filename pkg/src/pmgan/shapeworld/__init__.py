"""Procedural multi-domain shape datasets with known warps and part masks."""

from __future__ import annotations

from .exception import DatasetError, DegenerateSpecError, ImageFormatError, ShapeworldError
from .image import (
    decode,
    encode_pgm,
    encode_ppm,
    from_model_space,
    image_grid,
    quantize,
    read_image,
    to_model_space,
    write_pgm,
    write_ppm,
)
from .io import Dataset, DatasetManifest, DomainEntry, SampleEntry, read_dataset, sample_seed, write_dataset
from .render import (
    Sample,
    ShapeParams,
    canonical_render,
    gen_sample,
    ground_truth_map,
    render_shape,
    sample_params,
    segment_by_palette,
)
from .spec import MAX_DISPLACEMENT, DomainSpec, Warp, check_specs, default_specs, dump_specs, load_specs

__all__ = [
    "MAX_DISPLACEMENT",
    "Dataset",
    "DatasetError",
    "DatasetManifest",
    "DegenerateSpecError",
    "DomainEntry",
    "DomainSpec",
    "ImageFormatError",
    "Sample",
    "SampleEntry",
    "ShapeParams",
    "ShapeworldError",
    "Warp",
    "canonical_render",
    "check_specs",
    "decode",
    "default_specs",
    "dump_specs",
    "encode_pgm",
    "encode_ppm",
    "from_model_space",
    "gen_sample",
    "ground_truth_map",
    "image_grid",
    "load_specs",
    "quantize",
    "read_dataset",
    "read_image",
    "render_shape",
    "sample_params",
    "sample_seed",
    "segment_by_palette",
    "to_model_space",
    "write_dataset",
    "write_pgm",
    "write_ppm",
]
