"""The `pmgan` command line."""

from __future__ import annotations

from .exception import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, UsageError, exit_code
from .main import main
from .stamp import STAMP_NAME, Stamp, read_stamp

__all__ = [
    "EXIT_DATA",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "EXIT_USAGE",
    "STAMP_NAME",
    "Stamp",
    "UsageError",
    "exit_code",
    "main",
    "read_stamp",
]
