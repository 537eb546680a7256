from __future__ import annotations

from pathlib import Path
from typing import Literal

from attrs import field, frozen, validators

from pmgan.numeric import TensorFormatError, load_tensor, save_tensor
from pmgan.utils.convert import dumps, loads
from pmgan.utils.types import PathLike

from .exception import MorphFileError
from .field import MorphMap


@frozen
class MorphMapSidecar:
    eta: float = field(validator=validators.gt(0.0))
    order: Literal["dxdy"] = "dxdy"


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_morph_map(path: PathLike, morph: MorphMap) -> None:
    """Write the (H, W, 2) map as PMT1 plus a `<path>.json` sidecar."""

    if morph.batched:
        raise MorphFileError("Only single (H, W, 2) maps can be saved")
    save_tensor(path, morph.values)
    sidecar_path(path).write_text(dumps(MorphMapSidecar(eta=morph.eta)), encoding="utf-8")


def load_morph_map(path: PathLike) -> MorphMap:
    try:
        values = load_tensor(path)
        sidecar = loads(sidecar_path(path).read_text(encoding="utf-8"), MorphMapSidecar)
    except (OSError, TensorFormatError, ValueError) as exc:
        raise MorphFileError(f"Cannot load morph map {path}") from exc
    if values.ndim != 3 or values.shape[-1] != 2:
        raise MorphFileError(f"Morph map file holds shape {values.shape}, expected (H, W, 2)")
    return MorphMap(values, sidecar.eta)
