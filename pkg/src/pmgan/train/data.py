from __future__ import annotations

import numpy as np
from attrs import field, frozen

from pmgan.morph import MorphMap
from pmgan.numeric import Tensor, generator
from pmgan.shapeworld import Dataset, ground_truth_map, to_model_space
from pmgan.utils.types import FloatArray

from .exception import TrainDataError


@frozen(eq=False)
class TrainingData:
    """Real images per domain, parent first, in model space [-1, 1]."""

    names: tuple[str, ...]
    images: tuple[FloatArray, ...] = field()
    """(count, 3, S, S) per domain."""
    truth_maps: tuple[MorphMap, ...] | None = None
    """Known morph maps of domains 1..N, when the data comes with them."""

    @images.validator
    def _check_images(self, _: object, value: tuple[FloatArray, ...]) -> None:
        if len(value) != len(self.names):
            raise TrainDataError(f"{len(self.names)} domain names but {len(value)} image sets")
        if len(value) < 2:
            raise TrainDataError("Training needs the parent and at least one domain")
        shapes = {images.shape[1:] for images in value}
        if len(shapes) != 1:
            raise TrainDataError(f"Domains disagree on image shape: {sorted(shapes)}")
        for name, images in zip(self.names, value, strict=True):
            if images.ndim != 4 or images.shape[1] != 3 or not len(images):
                raise TrainDataError(f"Domain `{name}` needs (count, 3, S, S) images, got {images.shape}")

    @classmethod
    def from_dataset(cls, dataset: Dataset, *, truth_maps: bool = True) -> TrainingData:
        images = tuple(to_model_space(dataset.load_images(index)) for index in range(len(dataset.specs)))
        size = dataset.manifest.size
        maps = tuple(ground_truth_map(spec, size, size) for spec in dataset.specs[1:]) if truth_maps else None
        return cls(tuple(spec.name for spec in dataset.specs), images, maps)

    @property
    def num_domains(self) -> int:
        """Child domains, excluding the parent."""
        return len(self.images) - 1

    @property
    def image_size(self) -> int:
        return self.images[0].shape[-1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(images) for images in self.images)

    def indices(self, step: int, seed: int, batch_size: int) -> tuple[tuple[int, ...], ...]:
        """Sample indices per domain for one step.

        One uniform draw per slot is shared by all domains, so domains of equal
        size see the same samples.
        """

        uniform = generator(seed, step, "real").random(batch_size)
        return tuple(tuple(int(i) for i in np.floor(uniform * size).astype(np.int64)) for size in self.sizes)

    def batch(self, step: int, seed: int, batch_size: int) -> tuple[Tensor, ...]:
        return tuple(
            Tensor(images[list(index)])
            for images, index in zip(self.images, self.indices(step, seed, batch_size), strict=True)
        )

    def check_model(self, num_domains: int, image_size: int) -> None:
        if self.num_domains != num_domains:
            raise TrainDataError(f"Data has {self.num_domains} domains besides the parent, model has {num_domains}")
        if self.image_size != image_size:
            raise TrainDataError(f"Data images are {self.image_size}px, model renders {image_size}px")
