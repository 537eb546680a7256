from __future__ import annotations


class PMGANError(Exception):
    """Base exception for all pmgan errors."""
