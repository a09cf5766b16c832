"""Utility helper functions: unit conversions and display formatting."""

import math
from typing import Sequence

import numpy as np


def dbm_to_watts(dbm: float) -> float:
    """Convert a power level in dBm to linear watts (0 dBm = 1 mW)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert linear watts to dBm."""
    if watts <= 0:
        raise ValueError(f"Power must be positive, got {watts}")
    return 10.0 * math.log10(watts) + 30.0


def format_duration(seconds: float) -> str:
    """Format a duration in human-readable units."""
    if seconds < 1e-3:
        return f"{seconds * 1e6:.1f} µs"
    elif seconds < 1.0:
        return f"{seconds * 1e3:.2f} ms"
    else:
        return f"{seconds:.2f} s"


def format_complex_vector(values: Sequence[complex], precision: int = 4) -> str:
    """Format a complex vector as a bracketed list of a+bj entries."""
    entries = []
    for value in np.asarray(values, dtype=complex):
        sign = "+" if value.imag >= 0 else "-"
        entries.append(
            f"{value.real:.{precision}f}{sign}{abs(value.imag):.{precision}f}j"
        )
    return "[" + ", ".join(entries) + "]"
