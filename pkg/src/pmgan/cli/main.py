from __future__ import annotations

import sys
from collections.abc import Sequence

from loguru import logger

from pmgan import __version__, enable_logging

from .exception import EXIT_OK, exit_code
from .parser import build_parser
from .stamp import Stamp, replace_flag, write_stamp


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level, format="<level>{level: <8}</level> {name}: {message}")
    enable_logging()


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""

    args_list = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(args_list)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    configure_logging(args.log_level)
    try:
        outcome = args.handler(args)
    except Exception as exc:
        if (code := exit_code(exc)) is None:
            raise
        logger.opt(exception=exc).debug("{} failed", args.command)
        sys.stderr.write(f"pmgan {args.command}: {exc}\n")
        return code

    if outcome.output is not None:
        stamped = tuple(args_list)
        for flag, value in outcome.stamp_flags.items():
            stamped = replace_flag(stamped, flag, value)
        flags = {key: value for key, value in vars(args).items() if key != "handler"}
        stamp = Stamp(
            command=args.command,
            argv=stamped,
            flags=flags,
            version=__version__,
            seed=outcome.seed,
            checkpoint_hash=outcome.checkpoint_hash,
            config=outcome.config,
            outputs=outcome.outputs,
        )
        logger.debug("Stamp written to {}", write_stamp(outcome.output, stamp))
    return outcome.exit_code
