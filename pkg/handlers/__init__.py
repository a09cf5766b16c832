"""Command handlers for the CLI entry point."""

from .solve import handle_solve
from .sweep import handle_sweep
from .check import handle_check

__all__ = [
    "handle_solve",
    "handle_sweep",
    "handle_check"
]
