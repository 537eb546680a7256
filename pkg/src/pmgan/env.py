from __future__ import annotations

import os


def log_level() -> str:
    return os.getenv("PMGAN_LOG_LEVEL", "INFO").upper()


def disable_progress() -> bool:
    return os.getenv("PMGAN_DISABLE_PROGRESS") is not None


def worker_count() -> int:
    """Thread cap for dataset generation; defaults to the CPU count."""

    if (raw := os.getenv("PMGAN_WORKERS")) is not None:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
