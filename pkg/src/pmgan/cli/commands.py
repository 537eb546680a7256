"""Subcommand handlers. Each returns an `Outcome` describing what it wrote."""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections.abc import Callable, Sequence
from functools import partial
from pathlib import Path
from typing import Any

import anyio
import numpy as np
from attrs import Factory, frozen
from loguru import logger

from pmgan import __version__
from pmgan.bench import alignment_eval, grad_check_suite, seg_transfer_eval
from pmgan.model import PARENT, PMGANModel, edit_transfer, invert, model_from_checkpoint, sefa_directions, style_matrix
from pmgan.morph import LabelMap, offset_map, warp_labels
from pmgan.nn import MANIFEST_NAME, Checkpoint, load_checkpoint, read_manifest
from pmgan.numeric import Tensor, load_tensor, no_record, ops, save_tensor
from pmgan.shapeworld import (
    ImageFormatError,
    default_specs,
    from_model_space,
    image_grid,
    load_specs,
    read_dataset,
    read_image,
    to_model_space,
    write_dataset,
    write_pgm,
    write_ppm,
)
from pmgan.train import CHECKPOINT_DIR, Trainer, TrainConfig, TrainingData
from pmgan.utils.config import resolve_config, write_json
from pmgan.utils.convert import value_serialize

from .exception import EXIT_NUMERIC, UsageError
from .stamp import read_stamp, replace_flag

DIRECTIONS_TENSOR = "directions.pmt"
DIRECTIONS_INFO = "directions.json"
LATENT_NAME = "latent.pmt"
TRAIN_CONFIG_NAME = "train_config.json"


@frozen
class Outcome:
    """Where a run's stamp goes and what it records beyond the command line."""

    output: Path | None = None
    seed: int | None = None
    checkpoint_hash: str | None = None
    config: dict[str, Any] | None = None
    outputs: tuple[str, ...] = Factory(tuple)
    stamp_flags: dict[str, str] = Factory(dict)
    """Flag values substituted into the stamped command line so that it reproduces this run."""
    exit_code: int = 0


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# --- shared helpers --------------------------------------------------------------


def checkpoint_dir(path: str) -> Path:
    """Accept a checkpoint directory or a training output directory holding one."""

    root = Path(path)
    for candidate in (root, root / CHECKPOINT_DIR):
        if (candidate / MANIFEST_NAME).is_file():
            return candidate
    raise FileNotFoundError(f"No checkpoint found under {root}")


def _load(path: str) -> tuple[PMGANModel, Checkpoint]:
    checkpoint = load_checkpoint(checkpoint_dir(path))
    return model_from_checkpoint(checkpoint), checkpoint


def domain_index(model: PMGANModel, checkpoint: Checkpoint, token: str, *, allow_parent: bool = False) -> int:
    """Resolve a domain given by index or by the dataset name stored at training time."""

    names = checkpoint.metadata.get("domains") or []
    if token.lstrip("-").isdigit():
        index = int(token)
    elif token in names:
        index = names.index(token)
    elif token == "parent":
        index = PARENT
    else:
        raise UsageError(f"Unknown domain `{token}`; known: {', '.join(map(str, names)) or 'indices only'}")
    model.check_domain(index, allow_parent=allow_parent)
    return index


def _pixels(image: Tensor, index: int = 0) -> np.ndarray:
    return from_model_space(ops.select(image, index))


def _model_image(model: PMGANModel, path: str) -> Tensor:
    pixels = read_image(path)
    size = model.image_size
    if pixels.shape != (3, size, size):
        raise ImageFormatError(f"{path} must be an RGB image of {size}x{size}, got shape {pixels.shape}")
    return Tensor(to_model_space(pixels))


def _parse_sets(items: Sequence[str]) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects KEY=VALUE, got `{item}`")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _levels_for(size: int) -> int | None:
    """Synthesis levels whose top resolution is `size`, or None when there is none."""
    levels = int(math.log2(size)) - 1 if size >= 4 else 0
    return levels if levels >= 1 and 2 ** (levels + 1) == size else None


# --- data and training -------------------------------------------------------------


def run_gen_data(args: argparse.Namespace) -> Outcome:
    specs = load_specs(args.spec) if args.spec else default_specs()
    manifest = anyio.run(
        partial(write_dataset, args.out, specs, args.count, args.size, args.seed, overwrite=args.overwrite)
    )
    _emit(f"wrote {sum(len(d.samples) for d in manifest.domains)} samples to {args.out}")
    return Outcome(Path(args.out), seed=args.seed, outputs=(args.out,))


def run_train(args: argparse.Namespace) -> Outcome:
    dataset = read_dataset(args.data)
    defaults: dict[str, Any] = {"model.num_domains": len(dataset.specs) - 1}
    if (levels := _levels_for(dataset.manifest.size)) is not None:
        defaults["model.levels"] = levels
    overrides = {"steps": args.steps, "seed": args.seed, **_parse_sets(args.set)}
    config = resolve_config(TrainConfig, args.config, overrides, defaults=defaults)
    data = TrainingData.from_dataset(dataset, truth_maps=config.morph_supervision_weight > 0)

    out = Path(args.out)
    existing = out / CHECKPOINT_DIR
    if (existing / MANIFEST_NAME).is_file():
        if not args.resume:
            raise UsageError(f"{existing} already holds a checkpoint; pass --resume to continue it")
        trainer = Trainer.resume(existing, data, out, expected=config)
    else:
        trainer = Trainer.create(config, data, out)

    out.mkdir(parents=True, exist_ok=True)
    config_path = out / TRAIN_CONFIG_NAME
    write_json(config_path, value_serialize(config))
    report = trainer.run()
    manifest = read_manifest(existing)
    if report is not None:
        _emit(f"step {report.step}: g={list(report.g_loss)} d={list(report.d_loss)}")
    _emit(f"checkpoint written to {existing}")

    return Outcome(
        out,
        seed=config.seed,
        checkpoint_hash=manifest.content_hash,
        config=value_serialize(config),
        outputs=(str(existing),),
        stamp_flags={"--config": str(config_path)},
    )


# --- rendering ---------------------------------------------------------------------


def run_sample(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    with no_record():
        images = model.infer(model.sample_latents(args.count, args.seed)).images
    rows = [[_pixels(image, i) for image in images] for i in range(args.count)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "samples.ppm"
    write_ppm(path, image_grid(rows))
    _emit(f"{args.count} x {len(images)} panels written to {path}")
    return Outcome(out, args.seed, checkpoint.manifest.content_hash, outputs=(str(path),))


def run_interpolate(args: argparse.Namespace) -> Outcome:
    if args.steps < 2:
        raise UsageError(f"--steps must be at least 2, got {args.steps}")
    model, checkpoint = _load(args.ckpt)
    da = domain_index(model, checkpoint, args.da)
    db = domain_index(model, checkpoint, args.db)
    z_a, z_b = model.sample_latents(1, args.za), model.sample_latents(1, args.zb)
    panels = []
    with no_record():
        for k in range(args.steps):
            t = k / (args.steps - 1)
            image = model.infer_interpolated(z_a, z_b, da, db, t, fix_map_of_a=args.fix_map_a)
            panels.append(_pixels(image))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_ppm(out, image_grid([panels]))
    return Outcome(out, checkpoint_hash=checkpoint.manifest.content_hash, outputs=(str(out),))


def run_swap_morph(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    source = domain_index(model, checkpoint, args.source)
    target = domain_index(model, checkpoint, args.target)
    z = model.sample_latents(args.count, args.seed)
    with no_record():
        plain = model.infer(z)
        swapped = model.infer_swapped(z, source, target)
    rows = [
        [_pixels(plain.domains[source - 1], i), _pixels(swapped, i), _pixels(plain.domains[target - 1], i)]
        for i in range(args.count)
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_ppm(out, image_grid(rows))
    return Outcome(out, args.seed, checkpoint.manifest.content_hash, outputs=(str(out),))


def run_seg_transfer(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    if domain_index(model, checkpoint, args.source, allow_parent=True) != PARENT:
        raise UsageError("Masks transfer from the parent domain; --source must be the parent")
    target = domain_index(model, checkpoint, args.target)
    pixels = read_image(args.mask)
    if pixels.ndim != 2:
        raise ImageFormatError(f"{args.mask} must be a PGM of class ids")
    labels = LabelMap(pixels, int(pixels.max()) + 1)

    with no_record():
        morph = model.infer(model.sample_latents(1, args.seed)).maps[target - 1].select(0)
    if args.offset is not None:
        cx, cy, dx, dy, sigma = args.offset
        morph = offset_map(morph, (cx, cy), (dx, dy), sigma)
    warped = warp_labels(labels, morph)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(out, warped.labels)
    return Outcome(out, args.seed, checkpoint.manifest.content_hash, outputs=(str(out),))


# --- inversion and editing --------------------------------------------------------------


def _invert(model: PMGANModel, checkpoint: Checkpoint, args: argparse.Namespace, out: Path) -> tuple[Tensor, int]:
    domain = domain_index(model, checkpoint, args.domain, allow_parent=True)
    result = invert(
        model,
        _model_image(model, args.image),
        domain,
        steps=args.steps,
        lr=args.lr,
        latent_weight=args.latent_weight,
    )
    out.mkdir(parents=True, exist_ok=True)
    save_tensor(out / LATENT_NAME, result.w)
    write_json(
        out / "inversion.json",
        {"domain": domain, "initial_loss": result.initial_loss, "loss": result.loss, "steps": len(result.history)},
    )
    _emit(f"inversion loss {result.initial_loss:.4e} -> {result.loss:.4e}")
    return result.w, domain


def run_invert(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    out = Path(args.out)
    w, domain = _invert(model, checkpoint, args, out)
    with no_record():
        image = model.render(w, domain)
    path = out / "reconstruction.ppm"
    write_ppm(path, _pixels(image))
    return Outcome(out, checkpoint_hash=checkpoint.manifest.content_hash, outputs=(str(out / LATENT_NAME), str(path)))


def run_translate(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    out = Path(args.out)
    if args.image is not None:
        if args.domain is None:
            raise UsageError("--image needs --domain")
        w, _ = _invert(model, checkpoint, args, out)
    else:
        w = load_tensor(args.latent)
        if w.shape != (1, model.config.latent_dim):
            raise UsageError(f"Latent must have shape (1, {model.config.latent_dim}), got {w.shape}")
    with no_record():
        images = model.render_all(w)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "translated.ppm"
    write_ppm(path, image_grid([[_pixels(image) for image in images]]))
    return Outcome(out, checkpoint_hash=checkpoint.manifest.content_hash, outputs=(str(path),))


def run_edit_dirs(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    result = sefa_directions(style_matrix(model, args.layer or None), args.k, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_tensor(out / DIRECTIONS_TENSOR, Tensor(result.directions))
    write_json(
        out / DIRECTIONS_INFO,
        {"layers": args.layer or list(model.core.style_layers()), "eigenvalues": result.eigenvalues.tolist()},
    )
    for index, value in enumerate(result.eigenvalues):
        _emit(f"direction {index}: eigenvalue {value:.6f}")
    return Outcome(out, args.seed, checkpoint.manifest.content_hash, outputs=(str(out / DIRECTIONS_TENSOR),))


def run_edit(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    directions = load_tensor(Path(args.dirs) / DIRECTIONS_TENSOR).data
    if directions.ndim != 2 or directions.shape[1] != model.config.latent_dim:
        raise UsageError(f"Directions of shape {directions.shape} do not fit latent size {model.config.latent_dim}")
    if not 0 <= args.dir < directions.shape[0]:
        raise UsageError(f"--dir must lie in [0, {directions.shape[0]}), got {args.dir}")

    with no_record():
        w = model.mapping(model.sample_latents(1, args.seed))
        rows = [
            [_pixels(image) for image in edit_transfer(model, w, directions[args.dir], alpha)]
            for alpha in (-args.scale, 0.0, args.scale)
        ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_ppm(out, image_grid(rows))
    return Outcome(out, args.seed, checkpoint.manifest.content_hash, outputs=(str(out),))


# --- verification and evaluation ----------------------------------------------------


def _report(args: argparse.Namespace, table: str, payload: str) -> Path | None:
    _emit(table)
    if args.json is None:
        return None
    path = Path(args.json)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload, encoding="utf-8")
    return path


def run_grad_check(args: argparse.Namespace) -> Outcome:
    report = grad_check_suite(seed=args.seed, names=args.case or None)
    path = _report(args, report.table(), report.to_json())
    return Outcome(path, args.seed, exit_code=0 if report.passed else EXIT_NUMERIC)


def run_eval_seg(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    report = seg_transfer_eval(model, read_dataset(args.data), count=args.count, seed=args.seed)
    path = _report(args, report.table(), report.to_json())
    return Outcome(path, args.seed, checkpoint.manifest.content_hash)


def run_eval_align(args: argparse.Namespace) -> Outcome:
    model, checkpoint = _load(args.ckpt)
    report = alignment_eval(model, args.count, args.seed)
    path = _report(args, report.table(), report.to_json())
    return Outcome(path, args.seed, checkpoint.manifest.content_hash)


def run_replay(args: argparse.Namespace) -> Outcome:
    from .main import main

    stamp = read_stamp(args.stamp)
    argv = stamp.argv
    if args.out is not None:
        if not any(arg == "--out" or arg.startswith("--out=") for arg in argv):
            raise UsageError(f"The stamped `{stamp.command}` command has no --out to redirect")
        argv = replace_flag(argv, "--out", args.out)
    if stamp.version != __version__:
        logger.warning("Stamp was written by version {}, running {}", stamp.version, __version__)
    logger.info("Replaying `{}`", " ".join(argv))
    return Outcome(exit_code=main(list(argv)))


HANDLERS: dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "gen-data": run_gen_data,
    "train": run_train,
    "sample": run_sample,
    "interpolate": run_interpolate,
    "swap-morph": run_swap_morph,
    "seg-transfer": run_seg_transfer,
    "invert": run_invert,
    "translate": run_translate,
    "edit-dirs": run_edit_dirs,
    "edit": run_edit,
    "grad-check": run_grad_check,
    "eval-seg": run_eval_seg,
    "eval-align": run_eval_align,
    "replay": run_replay,
}
