"""Alternating multi-domain GAN training.

Domain index 0 is the parent: its discriminator judges the core generator's
own image, which is how the shared synthesis stack learns. Indices 1..N judge
the morphed and rendered domain images. Every step runs the discriminator
updates in index order and then one generator update.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Literal, Self

from attrs import Factory, define, evolve, frozen
from loguru import logger
from tqdm import tqdm

from pmgan import env
from pmgan.model import PMGANModel, save_model
from pmgan.morph import MorphMap
from pmgan.nn import AdamState, CheckpointFormatError, Parameter, adam_step, load_checkpoint
from pmgan.numeric import GradTape, NonFiniteError, Tensor, generator, no_record, ops, rng_fill
from pmgan.utils.convert import value_deserialize, value_serialize
from pmgan.utils.types import PathLike

from .config import TrainConfig
from .data import TrainingData
from .discriminator import Discriminator
from .exception import NonFiniteLossError, TrainDataError
from .freeze import FrozenParameters, freeze
from .loss import d_loss_logistic, g_loss_nonsat, r1_penalty
from .weights import domain_loss_weights

type Phase = Literal["warm", "joint"]

CHECKPOINT_DIR = "checkpoint"
LOG_NAME = "log.csv"


@frozen
class StepReport:
    """Losses of one step, indexed by domain (parent first). Inactive terms are NaN."""

    step: int
    """Completed steps after this update."""
    phase: Phase
    g_loss: tuple[float, ...]
    d_loss: tuple[float, ...]
    r1: tuple[float, ...]
    supervision: float = math.nan

    def row(self, names: Sequence[str]) -> dict[str, Any]:
        row: dict[str, Any] = {"step": self.step, "phase": self.phase}
        for name, g, d, r1 in zip(names, self.g_loss, self.d_loss, self.r1, strict=True):
            row[f"g_loss_{name}"] = g
            row[f"d_loss_{name}"] = d
            row[f"r1_{name}"] = r1
        row["supervision"] = self.supervision
        return row


def log_fields(names: Sequence[str]) -> list[str]:
    """CSV columns of the training log for the given domain names."""

    fields = ["step", "phase"]
    for name in names:
        fields += [f"g_loss_{name}", f"d_loss_{name}", f"r1_{name}"]
    return [*fields, "supervision"]


@define
class TrainState:
    step: int = 0
    g_opt: AdamState = Factory(AdamState)
    d_opts: list[AdamState] = Factory(list)


@contextmanager
def _guard(step: int, term: str) -> Iterator[None]:
    try:
        yield
    except NonFiniteLossError:
        raise
    except NonFiniteError as exc:
        raise NonFiniteLossError(step, term, math.nan) from exc


def _watch(tape: GradTape, params: Mapping[str, Parameter]) -> None:
    """Watch every parameter value, giving values shared between parameters their own identity."""

    seen: set[int] = set()
    for param in params.values():
        if param.value.uid in seen:
            param.assign(Tensor(param.value))
        seen.add(param.value.uid)
    tape.watch(*(param.value for param in params.values()))


def _update(
    tape: GradTape,
    loss: Tensor,
    params: Mapping[str, Parameter],
    opt: AdamState,
    *,
    lr: float,
    betas: tuple[float, float],
) -> AdamState:
    grads = tape.gradient(loss, [param.value for param in params.values()])
    return adam_step(params, {name: grads[param.value] for name, param in params.items()}, opt, lr=lr, betas=betas)


def _nan(count: int) -> list[float]:
    return [math.nan] * count


def train_step(
    model: PMGANModel,
    discriminators: Sequence[Discriminator],
    real: Sequence[Tensor],
    config: TrainConfig,
    state: TrainState,
    *,
    weights: Sequence[float],
    frozen: FrozenParameters | None = None,
    truth_maps: Sequence[MorphMap] | None = None,
    parent_only: bool = False,
) -> StepReport:
    """One alternating update.

    Args:
        real: Real batches per domain, parent first.
        weights: Loss weight per domain, parent first; applied to both the
            generator and the discriminator terms.
        frozen: Parameters that are neither watched nor updated.
        truth_maps: Known maps of domains 1..N, used when
            `config.morph_supervision_weight` is positive.
        parent_only: Train only the parent pair (warm start).

    Raises:
        NonFiniteLossError: If any loss term becomes non-finite.
    """

    frozen = frozen or FrozenParameters()
    count = model.num_domains + 1
    if len(discriminators) != count or len(real) != count or len(weights) != count:
        raise TrainDataError(f"Expected {count} discriminators, batches and weights (parent first)")
    step = state.step
    active = (0,) if parent_only else tuple(range(count))
    batch = real[0].shape[0]
    z = rng_fill((batch, model.config.latent_dim), generator(config.seed, step, "latent"))

    with no_record(), _guard(step, "generator forward"):
        if parent_only:
            fakes: tuple[Tensor, ...] = (model.synthesize_features(model.mapping(z))[1],)
        else:
            inference = model.infer(z)
            fakes = (inference.parent, *inference.domains)

    d_losses, r1_terms, g_losses = _nan(count), _nan(count), _nan(count)
    r1_due = config.r1_gamma > 0 and step % config.r1_interval == 0
    for index in active:
        disc = discriminators[index]
        params = frozen.trainable(dict(disc.named_parameters()))
        with _guard(step, f"d_loss[{index}]"):
            with GradTape() as tape:
                _watch(tape, params)
                loss = d_loss_logistic(disc(real[index]), disc(fakes[index]))
                d_losses[index] = loss.item()
                if r1_due:
                    penalty = r1_penalty(disc, real[index], config.r1_gamma)
                    r1_terms[index] = penalty.item()
                    loss = ops.add(loss, ops.scale(penalty, config.r1_interval))
                loss = ops.scale(loss, weights[index])
            if params:
                state.d_opts[index] = _update(
                    tape, loss, params, state.d_opts[index], lr=config.d_lr, betas=config.betas
                )

    params = frozen.trainable(dict(model.named_parameters()))
    supervision = math.nan
    with _guard(step, "g_loss"):
        with GradTape() as tape:
            _watch(tape, params)
            if parent_only:
                images: tuple[Tensor, ...] = (model.synthesize_features(model.mapping(z))[1],)
                maps: tuple[MorphMap, ...] = ()
            else:
                inference = model.infer(z)
                images, maps = (inference.parent, *inference.domains), inference.maps
            total: Tensor | None = None
            for index in active:
                term = g_loss_nonsat(discriminators[index](images[index]))
                g_losses[index] = term.item()
                term = ops.scale(term, weights[index])
                total = term if total is None else ops.add(total, term)
            if config.morph_supervision_weight and truth_maps is not None and maps:
                errors = [
                    ops.mean(ops.square(ops.sub(m.values, t.values))) for m, t in zip(maps, truth_maps, strict=True)
                ]
                sup = errors[0]
                for error in errors[1:]:
                    sup = ops.add(sup, error)
                supervision = sup.item()
                total = ops.add(total, ops.scale(sup, config.morph_supervision_weight))
        assert total is not None
        state.g_opt = _update(tape, total, params, state.g_opt, lr=config.g_lr, betas=config.betas)

    state.step = step + 1
    return StepReport(
        state.step,
        "warm" if parent_only else "joint",
        tuple(g_losses),
        tuple(d_losses),
        tuple(r1_terms),
        supervision,
    )


@define(eq=False)
class Trainer:
    """Owns the model, the discriminators (parent first), optimizer state and outputs."""

    config: TrainConfig
    model: PMGANModel
    discriminators: list[Discriminator]
    data: TrainingData
    state: TrainState
    out_dir: Path | None = None

    @classmethod
    def create(cls, config: TrainConfig, data: TrainingData, out_dir: PathLike | None = None) -> Self:
        model = PMGANModel.create(config.model)
        data.check_model(model.num_domains, model.image_size)
        base = Discriminator.create(
            model.image_size,
            generator(config.seed, "init", "discriminator"),
            channels=config.disc_channels,
            max_channels=config.disc_max_channels,
        )
        discriminators = [base, *(base.clone() for _ in range(model.num_domains))]
        if not config.warm_start_steps and (config.freeze_g or config.freeze_d):
            logger.info("No warm start configured; freeze_g and freeze_d are ignored")
        state = TrainState(0, AdamState(), [AdamState() for _ in discriminators])
        return cls(config, model, discriminators, data, state, None if out_dir is None else Path(out_dir))

    @classmethod
    def resume(
        cls,
        directory: PathLike,
        data: TrainingData,
        out_dir: PathLike | None = None,
        *,
        expected: TrainConfig | None = None,
    ) -> Self:
        """Rebuild a trainer from a checkpoint written by `save`.

        An `expected` config must match the stored one except for `steps`,
        which may grow to continue training.
        """

        checkpoint = load_checkpoint(directory)
        meta = checkpoint.metadata
        try:
            config = value_deserialize(meta["train_config"], TrainConfig)
            g_step = int(meta["adam"]["g"])
            d_steps = [int(t) for t in meta["adam"]["d"]]
            step = int(meta["step"])
        except Exception as exc:
            raise CheckpointFormatError(f"Checkpoint {directory} lacks training state") from exc
        if expected is not None:
            if evolve(expected, steps=config.steps) != config:
                raise CheckpointFormatError(f"Checkpoint {directory} was trained with a different config")
            config = expected

        trainer = cls.create(config, data, out_dir)
        trainer.model.load_state_dict(checkpoint.tensors, "model")
        for index, disc in enumerate(trainer.discriminators):
            disc.load_state_dict(checkpoint.tensors, f"disc.{index}")
        trainer.state = TrainState(
            step,
            AdamState.from_tensors(checkpoint.tensors, "adam.g", g_step),
            [AdamState.from_tensors(checkpoint.tensors, f"adam.d{i}", t) for i, t in enumerate(d_steps)],
        )
        logger.warning("Resuming training from step {} ({})", step, directory)
        return trainer

    @property
    def weights(self) -> tuple[float, ...]:
        """Parent weight 1, domains weighted by size when `low_data` is set."""

        if not self.config.low_data:
            return (1.0,) * len(self.discriminators)
        sizes = self.config.domain_sizes or self.data.sizes[1:]
        return (1.0, *domain_loss_weights(sizes))

    def phase(self, step: int | None = None) -> Phase:
        step = self.state.step if step is None else step
        return "warm" if step < self.config.warm_start_steps else "joint"

    def frozen(self) -> FrozenParameters:
        """Layers frozen at the current step; empty during the warm start and in runs without one."""
        if not self.config.warm_start_steps or self.phase() == "warm":
            return FrozenParameters()
        return freeze(self.model, self.discriminators, self.config.freeze_g, self.config.freeze_d)

    def _branch_discriminators(self) -> None:
        parent = self.discriminators[0]
        for index in range(1, len(self.discriminators)):
            self.discriminators[index] = parent.clone()
            self.state.d_opts[index] = AdamState()
        logger.info("Warm start done after {} steps; domain discriminators start from the parent's", self.state.step)

    def step(self) -> StepReport:
        if self.config.warm_start_steps and self.state.step == self.config.warm_start_steps:
            self._branch_discriminators()
        real = self.data.batch(self.state.step, self.config.seed, self.config.batch_size)
        return train_step(
            self.model,
            self.discriminators,
            real,
            self.config,
            self.state,
            weights=self.weights,
            frozen=self.frozen(),
            truth_maps=self.data.truth_maps,
            parent_only=self.phase() == "warm",
        )

    def tensors(self) -> dict[str, Tensor]:
        """Discriminator and optimizer tensors stored next to the model."""

        out: dict[str, Tensor] = {}
        for index, disc in enumerate(self.discriminators):
            out.update(disc.state_dict(f"disc.{index}"))
            out.update(self.state.d_opts[index].tensors(f"adam.d{index}"))
        out.update(self.state.g_opt.tensors("adam.g"))
        return out

    def save(self, directory: PathLike | None = None) -> Path:
        if directory is None:
            if self.out_dir is None:
                raise TrainDataError("No output directory to save the checkpoint to")
            directory = self.out_dir / CHECKPOINT_DIR
        metadata = {
            "train_config": value_serialize(self.config),
            "step": self.state.step,
            "adam": {"g": self.state.g_opt.t, "d": [opt.t for opt in self.state.d_opts]},
            "domains": list(self.data.names),
        }
        save_model(directory, self.model, extra_tensors=self.tensors(), metadata=metadata)
        logger.debug("Checkpoint at step {} written to {}", self.state.step, directory)
        return Path(directory)

    def _open_log(self) -> Path | None:
        """Prepare the CSV log, dropping rows past the current step (left by an interrupted run)."""

        if self.out_dir is None:
            return None
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / LOG_NAME
        if path.exists():
            with path.open(newline="", encoding="utf-8") as file:
                rows = [row for row in csv.DictReader(file) if int(row["step"]) <= self.state.step]
            self._write_rows(path, rows, mode="w")
        return path

    def _write_rows(self, path: Path, rows: Sequence[Mapping[str, Any]], mode: str = "a") -> None:
        fields = log_fields(self.data.names)
        new = mode == "w" or not path.exists()
        with path.open(mode, newline="", encoding="utf-8") as file:
            writer = csv.DictWriter(file, fieldnames=fields)
            if new:
                writer.writeheader()
            writer.writerows(rows)

    @logger.catch(reraise=True)
    def run(self, steps: int | None = None) -> StepReport | None:
        """Train up to `config.steps` (or `steps` more), logging and checkpointing on the way."""

        target = self.config.steps if steps is None else self.state.step + steps
        log = self._open_log()
        report = None
        progress = tqdm(
            total=max(0, target - self.state.step),
            desc="train",
            disable=env.disable_progress(),
        )
        with progress:
            while self.state.step < target:
                report = self.step()
                progress.update()
                if log is not None:
                    self._write_rows(log, [report.row(self.data.names)])
                if report.step % self.config.log_every == 0:
                    logger.info(
                        "step {} [{}] g={} d={}",
                        report.step,
                        report.phase,
                        " ".join(f"{v:.4f}" for v in report.g_loss),
                        " ".join(f"{v:.4f}" for v in report.d_loss),
                    )
                every = self.config.checkpoint_every
                if self.out_dir is not None and every and report.step % every == 0:
                    self.save()
        if self.out_dir is not None:
            self.save()
        return report
