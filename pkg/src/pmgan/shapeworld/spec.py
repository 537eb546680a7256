"""Domain descriptions: part palette plus a smooth ground-truth warp.

Warps are given in the backward-sampling convention used by morph maps: the
domain pixel at normalized position p shows the parent content at
p + d(p). Every displacement component is clamped to the 1/3 bound a morph
map with eta=3 can express.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from typing import Any, Literal

import numpy as np
from attrs import Factory, field, frozen

from pmgan.utils.convert import value_deserialize, value_serialize
from pmgan.utils.types import RGB, FloatArray, PathLike

from .exception import DegenerateSpecError

type WarpKind = Literal["identity", "scale", "shear", "bulge"]

MAX_DISPLACEMENT = 1.0 / 3.0
"""Largest displacement component, in normalized coordinates."""

_JACOBIAN_SAMPLES = 41
_JACOBIAN_STEP = 1e-4


@frozen
class Warp:
    """Parametric displacement field d(p)."""

    kind: WarpKind = "identity"
    scale: tuple[float, float] = (1.0, 1.0)
    """(sx, sy) for `scale`: content is scaled by s about the image centre."""
    shear: float = 0.0
    """Horizontal shear factor for `shear`."""
    strength: float = 0.0
    """Radial magnification for `bulge`; negative values pinch."""
    sigma: float = 0.5
    """Gaussian radius of the `bulge` falloff."""

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def displacement(self, x: FloatArray, y: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Clamped (dx, dy) at normalized positions (x, y)."""

        match self.kind:
            case "identity":
                dx, dy = np.zeros_like(x), np.zeros_like(y)
            case "scale":
                sx, sy = self.scale
                dx, dy = x * (1.0 / sx - 1.0), y * (1.0 / sy - 1.0)
            case "shear":
                dx, dy = self.shear * y, np.zeros_like(y)
            case "bulge":
                falloff = np.exp(-(x * x + y * y) / (2.0 * self.sigma**2))
                dx, dy = -self.strength * x * falloff, -self.strength * y * falloff
            case _:
                raise DegenerateSpecError(f"Unknown warp kind `{self.kind}`")
        return (
            np.clip(dx, -MAX_DISPLACEMENT, MAX_DISPLACEMENT),
            np.clip(dy, -MAX_DISPLACEMENT, MAX_DISPLACEMENT),
        )

    def check(self) -> None:
        """Reject parameters that fold the image: p + d(p) must preserve orientation on [-1, 1]^2."""

        if self.kind == "scale" and min(self.scale) <= 0:
            raise DegenerateSpecError(f"Scale factors must be positive, got {self.scale}")
        if self.kind == "bulge" and self.sigma <= 0:
            raise DegenerateSpecError(f"Bulge sigma must be positive, got {self.sigma}")
        axis = np.linspace(-1.0, 1.0, _JACOBIAN_SAMPLES)
        x, y = np.meshgrid(axis, axis)
        h = _JACOBIAN_STEP

        def mapped(px: FloatArray, py: FloatArray) -> tuple[FloatArray, FloatArray]:
            dx, dy = self.displacement(px, py)
            return px + dx, py + dy

        xr, yr = mapped(x + h, y)
        xl, yl = mapped(x - h, y)
        xu, yu = mapped(x, y + h)
        xd, yd = mapped(x, y - h)
        det = (xr - xl) * (yu - yd) - (xu - xd) * (yr - yl)
        if (worst := float(det.min()) / (4 * h * h)) <= 0:
            raise DegenerateSpecError(f"Warp {self.kind} folds the image (Jacobian determinant {worst:.3g})")


def _check_rgb(colour: Sequence[float]) -> None:
    if len(colour) != 3 or not all(0.0 <= c <= 1.0 for c in colour):
        raise DegenerateSpecError(f"Colours must be RGB triples in [0, 1], got {colour}")


@frozen
class DomainSpec:
    name: str = field()
    palette: tuple[RGB, ...] = field()
    """One colour per part; the part count is the palette length."""
    background: RGB = (0.1, 0.1, 0.1)
    warp: Warp = Factory(Warp)
    count: int | None = None
    """Samples to generate for this domain; the dataset default when unset."""

    @name.validator
    def _check_name(self, _: Any, value: str) -> None:
        if not value or not value.replace("-", "").replace("_", "").isalnum():
            raise DegenerateSpecError(f"Domain names must be non-empty alphanumerics, got `{value}`")

    @palette.validator
    def _check_palette(self, _: Any, value: tuple[RGB, ...]) -> None:
        if not 1 <= len(value) <= 254:
            raise DegenerateSpecError(f"A domain needs 1 to 254 parts, got {len(value)}")
        for colour in value:
            _check_rgb(colour)

    def __attrs_post_init__(self) -> None:
        _check_rgb(self.background)
        if self.count is not None and self.count < 1:
            raise DegenerateSpecError(f"Sample count must be positive, got {self.count}")
        self.warp.check()

    @property
    def parts(self) -> int:
        return len(self.palette)

    @property
    def num_classes(self) -> int:
        """Parts plus background."""
        return self.parts + 1


_PARENT_PALETTE: tuple[RGB, ...] = ((0.9, 0.2, 0.2), (0.2, 0.8, 0.3), (0.2, 0.4, 0.9), (0.95, 0.85, 0.2))


def default_specs() -> tuple[DomainSpec, ...]:
    """Parent disk plus a vertically squashed and a bulged domain."""

    return (
        DomainSpec("parent", _PARENT_PALETTE),
        DomainSpec(
            "squash",
            ((0.9, 0.5, 0.1), (0.1, 0.7, 0.7), (0.6, 0.2, 0.8), (0.9, 0.9, 0.9)),
            warp=Warp("scale", scale=(1.0, 0.6)),
        ),
        DomainSpec(
            "bulge",
            ((0.8, 0.3, 0.5), (0.4, 0.9, 0.2), (0.1, 0.3, 0.6), (0.7, 0.6, 0.4)),
            warp=Warp("bulge", strength=0.4, sigma=0.6),
        ),
    )


def dump_specs(specs: Sequence[DomainSpec]) -> str:
    return json.dumps(value_serialize(list(specs)), indent=2, sort_keys=True) + "\n"


def load_specs(path: PathLike) -> tuple[DomainSpec, ...]:
    """Read a JSON list of specs; the first one is the parent and must not warp."""

    with open(path, encoding="utf-8") as file:
        raw = json.load(file)
    try:
        specs = tuple(value_deserialize(raw, list[DomainSpec]))
    except DegenerateSpecError:
        raise
    except Exception as exc:
        raise DegenerateSpecError(f"Malformed domain specs in {path}") from exc
    check_specs(specs)
    return specs


def check_specs(specs: Sequence[DomainSpec]) -> None:
    if len(specs) < 2:
        raise DegenerateSpecError("A dataset needs the parent and at least one domain")
    if not specs[0].warp.is_identity:
        raise DegenerateSpecError(f"The parent domain `{specs[0].name}` must use the identity warp")
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise DegenerateSpecError(f"Domain names must be unique, got {names}")
