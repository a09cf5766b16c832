"""Timing and trend diagnostics over sweep records."""

from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .models import SweepRecord
from ..utils.errors import InsufficientDataError


def loglog_slope(n_tx: Sequence[float], seconds: Sequence[float]) -> float:
    """
    Least-squares slope of log(seconds) against log(n_tx).

    A per-iteration cost of O(N_t^3) shows up as a slope near 3.

    Raises:
        InsufficientDataError: With fewer than two distinct sizes
        ValueError: If any value is not positive
    """
    x = np.asarray(n_tx, dtype=float)
    y = np.asarray(seconds, dtype=float)
    if x.shape != y.shape:
        raise ValueError("n_tx and seconds must have the same length")
    if np.unique(x).size < 2:
        raise InsufficientDataError("Need at least two distinct sizes for a slope")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_slope needs positive sizes and times")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def median_by_point(
    records: Sequence[SweepRecord],
    field: str = "crb_trace",
) -> Dict[Tuple[str, int, float], float]:
    """Median of a record field per (solver, n_tx, power_dbm); failed rows are skipped."""
    groups: Dict[Tuple[str, int, float], List[float]] = defaultdict(list)
    for record in records:
        value = getattr(record, field)
        if value is None:
            continue
        groups[(record.solver, record.n_tx, record.power_dbm)].append(float(value))
    return {key: float(np.median(values)) for key, values in groups.items()}


def per_iteration_ms(records: Sequence[SweepRecord]) -> Dict[Tuple[str, int, float], float]:
    """Median wall time per iteration (ms) per sweep point."""
    groups: Dict[Tuple[str, int, float], List[float]] = defaultdict(list)
    for record in records:
        if record.iterations > 0 and record.crb_trace is not None:
            groups[(record.solver, record.n_tx, record.power_dbm)].append(
                record.wall_time_ms / record.iterations
            )
    return {key: float(np.median(values)) for key, values in groups.items()}


def is_strictly_decreasing(values: Sequence[float]) -> bool:
    return all(after < before for before, after in zip(values[:-1], values[1:]))


def scaling_slopes(records: Sequence[SweepRecord]) -> Dict[Tuple[str, float], float]:
    """
    Log-log per-iteration time slope over n_tx, per (solver, power_dbm).

    Only groups with at least two sizes get a slope.
    """
    timings = per_iteration_ms(records)
    by_line: Dict[Tuple[str, float], List[Tuple[int, float]]] = defaultdict(list)
    for (solver, n_tx, power_dbm), ms in timings.items():
        by_line[(solver, power_dbm)].append((n_tx, ms))

    slopes = {}
    for key, points in by_line.items():
        points.sort()
        sizes = [n for n, _ in points]
        times = [ms for _, ms in points]
        if len(set(sizes)) >= 2 and all(t > 0 for t in times):
            slopes[key] = loglog_slope(sizes, times)
    return slopes
