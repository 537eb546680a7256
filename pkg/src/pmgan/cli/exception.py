from __future__ import annotations

from cattrs.errors import BaseValidationError

from pmgan.bench import BenchError
from pmgan.exception import PMGANError
from pmgan.model import ConvergenceError
from pmgan.morph import MorphFileError
from pmgan.nn import CheckpointError
from pmgan.numeric import NonFiniteError, TensorFormatError
from pmgan.shapeworld import DegenerateSpecError, ShapeworldError
from pmgan.train import TrainDataError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(PMGANError):
    """Raised for flag combinations argparse cannot reject on its own."""


def exit_code(exc: BaseException) -> int | None:
    """Process exit code for an expected failure, None for a bug."""

    match exc:
        case BaseExceptionGroup() if len(exc.exceptions) == 1:
            return exit_code(exc.exceptions[0])
        case NonFiniteError() | ConvergenceError():
            return EXIT_NUMERIC
        case DegenerateSpecError() | UsageError() | BaseValidationError():
            return EXIT_USAGE
        case (
            OSError()
            | CheckpointError()
            | ShapeworldError()
            | TrainDataError()
            | MorphFileError()
            | TensorFormatError()
            | BenchError()
        ):
            return EXIT_DATA
        case ValueError() | PMGANError():
            return EXIT_USAGE
    return None
