from __future__ import annotations

import argparse

from pmgan import __version__, env
from pmgan.model.invert import DEFAULT_LR, DEFAULT_STEPS

from . import commands


def _offset(raw: str) -> tuple[float, float, float, float, float]:
    try:
        values = tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"offset needs five numbers, got `{raw}`") from exc
    if len(values) != 5:
        raise argparse.ArgumentTypeError(f"offset needs cx,cy,dx,dy,sigma, got `{raw}`")
    return values  # type: ignore[return-value]


def _positive(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _ckpt(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ckpt", required=True, help="checkpoint directory, or a training output directory")


def _seed(parser: argparse.ArgumentParser, default: int = 0) -> None:
    parser.add_argument("--seed", type=int, default=default, help="latent seed (default: %(default)s)")


def _json(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", help="also write the report as JSON to this file")


def _inversion(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=_positive, default=DEFAULT_STEPS, help="optimization steps")
    parser.add_argument("--lr", type=float, default=DEFAULT_LR, help="Adam learning rate")
    parser.add_argument("--latent-weight", type=float, default=0.0, help="L2 pull towards the starting latent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmgan",
        description="Train and use a multi-domain GAN with learned morph maps.",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=env.log_level(),
        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"],
        type=str.upper,
        help="stderr log level (default: $PMGAN_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, summary: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=summary, description=summary, allow_abbrev=False)
        p.set_defaults(handler=commands.HANDLERS[name])
        return p

    p = command("gen-data", "render a procedural multi-domain shape dataset")
    p.add_argument("--spec", help="domain specs JSON (default: built-in parent, squash and bulge domains)")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--count", type=_positive, required=True, help="samples per domain")
    p.add_argument("--size", type=_positive, required=True, help="image side in pixels")
    _seed(p)
    p.add_argument("--overwrite", action="store_true", help="replace an existing dataset directory")

    p = command("train", "train a model on a dataset")
    p.add_argument("--config", help="training config JSON (default: built-in defaults)")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output directory for the checkpoint and log")
    p.add_argument("--steps", type=int, help="override config `steps`")
    p.add_argument("--seed", type=int, help="override config `seed`")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value by dotted key, e.g. model.eta=3 (repeatable)",
    )
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint in --out if present")

    p = command("sample", "render aligned samples: one row per latent, one column per domain, parent last")
    _ckpt(p)
    _seed(p)
    p.add_argument("--count", type=_positive, default=8, help="number of latents")
    p.add_argument("--out", required=True, help="output directory")

    p = command("interpolate", "interpolate latent and domain-specific layers between two (latent, domain) pairs")
    _ckpt(p)
    p.add_argument("--za", type=int, required=True, help="seed of the first latent")
    p.add_argument("--zb", type=int, required=True, help="seed of the second latent")
    p.add_argument("--da", required=True, help="first domain (index or name)")
    p.add_argument("--db", required=True, help="second domain (index or name)")
    p.add_argument("--steps", type=int, default=8, help="panels in the strip, at least 2")
    p.add_argument("--fix-map-a", action="store_true", help="keep the first pair's morph map throughout")
    p.add_argument("--out", required=True, help="output PPM strip")

    p = command("swap-morph", "render one domain with another domain's morph map")
    _ckpt(p)
    p.add_argument("--source", required=True, help="domain whose render layers are used")
    p.add_argument("--target", required=True, help="domain whose morph map is used")
    _seed(p)
    p.add_argument("--count", type=_positive, default=4, help="number of latents")
    p.add_argument("--out", required=True, help="output PPM grid: source, swapped, target per row")

    p = command("seg-transfer", "warp a parent part mask into a domain with its predicted morph map")
    _ckpt(p)
    p.add_argument("--mask", required=True, help="input PGM of class ids")
    p.add_argument("--source", default="0", help="domain of the mask; only the parent (0) is supported")
    p.add_argument("--target", required=True, help="target domain (index or name)")
    _seed(p)
    p.add_argument("--offset", type=_offset, help="add a Gaussian displacement cx,cy,dx,dy,sigma to the map")
    p.add_argument("--out", required=True, help="output PGM")

    p = command("invert", "find the latent that renders a given image in one domain")
    _ckpt(p)
    p.add_argument("--image", required=True, help="input PPM at the model resolution")
    p.add_argument("--domain", required=True, help="domain of the image (index or name, 0 = parent)")
    _inversion(p)
    p.add_argument("--out", required=True, help="output directory")

    p = command("translate", "render an image's latent in every domain")
    _ckpt(p)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--image", help="input PPM to invert first")
    source.add_argument("--latent", help="latent written by `invert`")
    p.add_argument("--domain", help="domain of --image (index or name, 0 = parent)")
    _inversion(p)
    p.add_argument("--out", required=True, help="output directory")

    p = command("edit-dirs", "closed-form semantic directions from the style projections")
    _ckpt(p)
    p.add_argument("--layer", action="append", default=[], help="style layer name (repeatable; default: all)")
    p.add_argument("--k", type=_positive, default=5, help="number of directions")
    _seed(p)
    p.add_argument("--out", required=True, help="output directory")

    p = command("edit", "apply one direction to a latent and render every domain")
    _ckpt(p)
    p.add_argument("--dirs", required=True, help="directory written by edit-dirs")
    p.add_argument("--dir", type=int, required=True, help="direction index")
    p.add_argument("--scale", type=float, required=True, help="edit strength; rows show -scale, 0 and +scale")
    _seed(p)
    p.add_argument("--out", required=True, help="output PPM grid")

    p = command("grad-check", "compare tape gradients with finite differences for every differentiable op")
    _seed(p)
    p.add_argument("--case", action="append", default=[], help="run only this case (repeatable)")
    _json(p)

    p = command("eval-seg", "mIoU of morph-transferred parent masks against a no-morph baseline")
    _ckpt(p)
    p.add_argument("--data", required=True, help="dataset directory matching the model")
    p.add_argument("--count", type=_positive, default=64, help="generated samples to score")
    _seed(p)
    _json(p)

    p = command("eval-align", "cross-domain centroid alignment, shared versus independent latents")
    _ckpt(p)
    p.add_argument("--count", type=_positive, default=64, help="number of latents")
    _seed(p)
    _json(p)

    p = command("replay", "rerun a command from its stamp.json")
    p.add_argument("--stamp", required=True, help="stamp file")
    p.add_argument("--out", help="write outputs here instead of the stamped location")

    return parser
