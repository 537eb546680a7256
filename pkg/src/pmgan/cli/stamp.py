from __future__ import annotations

from pathlib import Path
from typing import Any

from attrs import Factory, frozen

from pmgan.utils.convert import dumps, loads
from pmgan.utils.types import PathLike

STAMP_NAME = "stamp.json"


@frozen
class Stamp:
    """What a run needs to be repeated: the command line plus what it resolved to."""

    command: str
    argv: tuple[str, ...]
    """Arguments after the program name, replayable as-is."""
    flags: dict[str, Any]
    version: str
    seed: int | None = None
    checkpoint_hash: str | None = None
    config: dict[str, Any] | None = None
    outputs: tuple[str, ...] = Factory(tuple)


def stamp_path(output: PathLike) -> Path:
    """`stamp.json` inside an output directory, or next to an output file."""

    path = Path(output)
    return path / STAMP_NAME if path.is_dir() or not path.suffix else path.with_name(STAMP_NAME)


def write_stamp(output: PathLike, stamp: Stamp) -> Path:
    path = stamp_path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(stamp), encoding="utf-8")
    return path


def read_stamp(path: PathLike) -> Stamp:
    return loads(Path(path).read_bytes(), Stamp)


def replace_flag(argv: tuple[str, ...], flag: str, value: str) -> tuple[str, ...]:
    """Replace the value of `flag` in an argument vector, appending it when absent."""

    args = list(argv)
    for index, arg in enumerate(args):
        if arg == flag and index + 1 < len(args):
            args[index + 1] = value
            return tuple(args)
        if arg.startswith(f"{flag}="):
            args[index] = f"{flag}={value}"
            return tuple(args)
    return (*args, flag, value)
