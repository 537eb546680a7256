from __future__ import annotations

import json
from copy import deepcopy
from pathlib import Path
from typing import Any

from loguru import logger

from .convert import value_deserialize, value_serialize
from .types import PathLike


def deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    """
    Recursively merge two dictionaries.
    """
    result = deepcopy(base)
    for key, value in update.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = deepcopy(value)
    return result


def dotted_to_nested(overrides: dict[str, Any]) -> dict[str, Any]:
    """Expand `{"model.levels": 3}` into `{"model": {"levels": 3}}`, dropping None values."""

    nested: dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = key.split(".")
        current = nested
        for part in parents:
            current = current.setdefault(part, {})
        current[leaf] = value
    return nested


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_json(path: PathLike, value: Any) -> None:
    Path(path).write_text(
        json.dumps(value, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def resolve_config[C](
    schema: type[C],
    path: PathLike | None = None,
    overrides: dict[str, Any] | None = None,
    *,
    defaults: dict[str, Any] | None = None,
) -> C:
    """Layer class defaults < `defaults` < JSON file < explicit overrides and structure the result.

    Args:
        schema: The attrs config class to build.
        path: Optional JSON file with (possibly partial, nested) values.
        overrides: Dotted-key overrides, typically explicit CLI flags. `None` values are ignored.
        defaults: Dotted-key values that replace class defaults but yield to the file.
    """

    layered: dict[str, Any] = value_serialize(schema())
    if defaults:
        layered = deep_merge(layered, dotted_to_nested(defaults))
    if path is not None:
        from_file = read_json(path)
        if not isinstance(from_file, dict):
            raise ValueError(f"Config file {path} must hold a JSON object")
        logger.debug("Merging config file {}", path)
        layered = deep_merge(layered, from_file)
    if overrides:
        layered = deep_merge(layered, dotted_to_nested(overrides))
    return value_deserialize(layered, schema)
