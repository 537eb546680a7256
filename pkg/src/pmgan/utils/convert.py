from __future__ import annotations

import json
from typing import Any

from cattrs.preconf.json import make_converter

converter = make_converter()


def value_deserialize[R](raw_value: Any, schema: type[R]) -> R:
    return converter.structure(raw_value, schema)


def value_serialize(value: Any) -> Any:
    return converter.unstructure(value)


def dumps(value: Any) -> str:
    """Serialize an attrs value to canonical JSON (sorted keys, stable output)."""

    return json.dumps(value_serialize(value), indent=2, sort_keys=True) + "\n"


def loads[R](raw: str | bytes, schema: type[R]) -> R:
    return value_deserialize(json.loads(raw), schema)
