"""Dataset directories.

    <root>/manifest.json
    <root>/<domain>/<index>.ppm   image
    <root>/<domain>/<index>.pgm   part mask

The manifest lists every file with its seed and shape pose, together with the
full domain specs; the first domain is the parent.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path

import aioshutil
import anyio
import anyio.to_thread
import asyncer
import numpy as np
import semver
from attrs import Factory, frozen
from loguru import logger

from pmgan import env
from pmgan.morph import LabelMap
from pmgan.utils.convert import dumps, value_deserialize
from pmgan.utils.types import PathLike

from .exception import DatasetError, DegenerateSpecError
from .image import encode_pgm, encode_ppm, quantize, read_image
from .render import MIN_SIZE, ShapeParams, gen_sample
from .spec import DomainSpec, check_specs

SCHEMA = "shapeworld.v1"
VERSION = "1.0.0"
MANIFEST_NAME = "manifest.json"


@frozen
class SampleEntry:
    image: str
    mask: str
    seed: int
    params: ShapeParams


@frozen
class DomainEntry:
    spec: DomainSpec
    samples: tuple[SampleEntry, ...]


@frozen
class DatasetManifest:
    size: int
    seed: int
    domains: tuple[DomainEntry, ...]
    schema: str = SCHEMA
    version: str = VERSION


@frozen(eq=False)
class Dataset:
    root: Path
    manifest: DatasetManifest
    _cache: dict[int, np.ndarray] = Factory(dict)

    @property
    def specs(self) -> tuple[DomainSpec, ...]:
        return tuple(entry.spec for entry in self.manifest.domains)

    def index_of(self, name: str) -> int:
        for index, spec in enumerate(self.specs):
            if spec.name == name:
                return index
        raise DatasetError(f"No domain `{name}` in {self.root}; have {[s.name for s in self.specs]}")

    def load_images(self, domain: int) -> np.ndarray:
        """(count, 3, S, S) uint8 images of one domain (0 is the parent)."""

        if domain not in self._cache:
            entries = self.manifest.domains[domain].samples
            self._cache[domain] = np.stack([read_image(self.root / entry.image) for entry in entries])
        return self._cache[domain]

    def load_masks(self, domain: int) -> tuple[LabelMap, ...]:
        entry = self.manifest.domains[domain]
        return tuple(
            LabelMap(read_image(self.root / sample.mask), entry.spec.num_classes) for sample in entry.samples
        )


def sample_seed(seed: int, domain: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, domain, index]).generate_state(1)[0])


async def _write_sample(
    root: anyio.Path,
    spec: DomainSpec,
    domain: int,
    index: int,
    seed: int,
    size: int,
    limiter: anyio.CapacityLimiter,
) -> SampleEntry:
    derived = sample_seed(seed, domain, index)
    sample = await anyio.to_thread.run_sync(gen_sample, spec, derived, size, size, limiter=limiter)
    image = f"{spec.name}/{index:05d}.ppm"
    mask = f"{spec.name}/{index:05d}.pgm"
    await (root / image).write_bytes(encode_ppm(quantize(sample.image)))
    await (root / mask).write_bytes(encode_pgm(sample.mask.labels))
    return SampleEntry(image, mask, derived, sample.params)


async def write_dataset(
    directory: PathLike,
    specs: Sequence[DomainSpec],
    count: int,
    size: int,
    seed: int,
    *,
    overwrite: bool = False,
) -> DatasetManifest:
    """Render every domain's samples in worker threads and write them with a manifest.

    Output depends only on the arguments, not on scheduling.
    """

    check_specs(specs)
    if count < 1:
        raise DatasetError(f"count must be positive, got {count}")
    if size < MIN_SIZE:
        raise DegenerateSpecError(f"Images must be at least {MIN_SIZE}px, got {size}")
    root = anyio.Path(directory)
    if await root.exists():
        if not overwrite and any([path async for path in root.iterdir()]):
            raise DatasetError(f"{directory} is not empty; pass overwrite to replace it")
        if overwrite:
            logger.warning("Replacing dataset directory {}", directory)
            await aioshutil.rmtree(str(root))
    for spec in specs:
        await (root / spec.name).mkdir(parents=True, exist_ok=True)

    limiter = anyio.CapacityLimiter(env.worker_count())
    async with asyncer.create_task_group() as tg:
        tasks = [
            [
                tg.soonify(_write_sample)(root, spec, domain, index, seed, size, limiter)
                for index in range(spec.count or count)
            ]
            for domain, spec in enumerate(specs)
        ]
    domains = tuple(
        DomainEntry(spec, tuple(task.value for task in row)) for spec, row in zip(specs, tasks, strict=True)
    )
    manifest = DatasetManifest(size, seed, domains)
    await (root / MANIFEST_NAME).write_text(dumps(manifest), encoding="utf-8")
    logger.info("Wrote {} samples over {} domains to {}", sum(len(d.samples) for d in domains), len(domains), directory)
    return manifest


def read_dataset(directory: PathLike) -> Dataset:
    root = Path(directory)
    path = root / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DatasetError(f"Cannot read dataset manifest {path}") from exc

    match raw:
        case {"schema": str(schema), "version": str(version)} if schema == SCHEMA:
            pass
        case {"schema": schema}:
            raise DatasetError(f"Unknown dataset schema `{schema}`")
        case _:
            raise DatasetError(f"Manifest {path} lacks schema and version")
    try:
        compatible = semver.Version.parse(version).major == semver.Version.parse(VERSION).major
    except ValueError as exc:
        raise DatasetError(f"Invalid dataset version `{version}`") from exc
    if not compatible:
        raise DatasetError(f"Dataset version {version} is incompatible with {VERSION}")

    try:
        manifest = value_deserialize(raw, DatasetManifest)
    except Exception as exc:
        raise DatasetError(f"Malformed dataset manifest {path}") from exc
    check_specs([entry.spec for entry in manifest.domains])
    return Dataset(root, manifest)
