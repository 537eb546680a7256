"""Checkpoint directories.

A checkpoint is a directory holding one PMT1 file per tensor and a
`manifest.json` naming each tensor, its file and shape, the aliases of shared
parameters and free-form metadata (model config, optimizer step, ...).
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import semver
from attrs import Factory, frozen
from loguru import logger

from pmgan.numeric import Tensor, TensorFormatError, encode_tensor, load_tensor, save_tensor
from pmgan.utils.convert import dumps, value_deserialize
from pmgan.utils.types import PathLike

from .exception import CheckpointFormatError, CheckpointVersionError

CHECKPOINT_FORMAT = "pmgan.checkpoint"
CHECKPOINT_VERSION = "1.0.0"
MANIFEST_NAME = "manifest.json"


@frozen
class TensorEntry:
    name: str
    file: str
    shape: tuple[int, ...]


@frozen
class CheckpointManifest:
    format: str
    version: str
    tensors: tuple[TensorEntry, ...]
    aliases: dict[str, str] = Factory(dict)
    """Duplicate names of shared parameters mapped to their canonical name."""
    metadata: dict[str, Any] = Factory(dict)
    content_hash: str = ""


@frozen
class Checkpoint:
    manifest: CheckpointManifest
    tensors: dict[str, Tensor]

    @property
    def metadata(self) -> dict[str, Any]:
        return self.manifest.metadata

    def subset(self, prefix: str) -> dict[str, Tensor]:
        """Tensors under `prefix.` with the prefix stripped."""
        head = f"{prefix}."
        return {name.removeprefix(head): t for name, t in self.tensors.items() if name.startswith(head)}


def content_hash(tensors: Mapping[str, Tensor]) -> str:
    """sha256 over sorted tensor names and their PMT1 encodings."""

    digest = hashlib.sha256()
    for name in sorted(tensors):
        digest.update(name.encode("utf-8"))
        digest.update(encode_tensor(tensors[name]))
    return digest.hexdigest()


def save_checkpoint(
    directory: PathLike,
    tensors: Mapping[str, Tensor],
    *,
    aliases: Mapping[str, str] | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> CheckpointManifest:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(tensors):
        file = f"{name}.pmt"
        save_tensor(directory / file, tensors[name])
        entries.append(TensorEntry(name, file, tensors[name].shape))
    manifest = CheckpointManifest(
        format=CHECKPOINT_FORMAT,
        version=CHECKPOINT_VERSION,
        tensors=tuple(entries),
        aliases=dict(aliases or {}),
        metadata=dict(metadata or {}),
        content_hash=content_hash(tensors),
    )
    (directory / MANIFEST_NAME).write_text(dumps(manifest), encoding="utf-8")
    logger.debug("Saved {} tensors to {}", len(entries), directory)
    return manifest


def read_manifest(directory: PathLike) -> CheckpointManifest:
    path = Path(directory) / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CheckpointFormatError(f"Cannot read checkpoint manifest {path}") from exc

    match raw:
        case {"format": str(fmt), "version": str(version)} if fmt == CHECKPOINT_FORMAT:
            pass
        case {"format": fmt}:
            raise CheckpointFormatError(f"Unknown checkpoint format `{fmt}`")
        case _:
            raise CheckpointFormatError(f"Manifest {path} lacks format and version")

    try:
        found = semver.Version.parse(version)
    except ValueError as exc:
        raise CheckpointFormatError(f"Invalid checkpoint version `{version}`") from exc
    if found.major != semver.Version.parse(CHECKPOINT_VERSION).major:
        raise CheckpointVersionError(version, CHECKPOINT_VERSION)

    try:
        return value_deserialize(raw, CheckpointManifest)
    except Exception as exc:
        raise CheckpointFormatError(f"Malformed checkpoint manifest {path}") from exc


def load_checkpoint(directory: PathLike) -> Checkpoint:
    directory = Path(directory)
    manifest = read_manifest(directory)
    tensors: dict[str, Tensor] = {}
    for entry in manifest.tensors:
        try:
            tensor = load_tensor(directory / entry.file)
        except TensorFormatError as exc:
            raise CheckpointFormatError(f"Tensor `{entry.name}` is unreadable") from exc
        if tensor.shape != entry.shape:
            raise CheckpointFormatError(f"Tensor `{entry.name}` has shape {tensor.shape}, manifest says {entry.shape}")
        tensors[entry.name] = tensor
    if manifest.content_hash and manifest.content_hash != content_hash(tensors):
        raise CheckpointFormatError(f"Content hash mismatch in {directory}")
    return Checkpoint(manifest, tensors)
