"""Handler for parameter sweeps."""

from typing import Any, Callable, Dict


def handle_sweep(
    settings: Dict[str, Any],
    options: Dict[str, Any],
    progress_callback: Callable[[int, str], None]
) -> Dict[str, Any]:
    """
    Run an experiment sweep and summarize it.

    Returns:
        {"records": N, "failed": N, "out": path or None,
         "medians": [...], "slopes": [...]}
    """
    from src.harness.analysis import median_by_point, scaling_slopes
    from src.harness.models import ExperimentConfig
    from src.harness.sweep import run_sweep

    config = ExperimentConfig.from_settings(settings)
    progress_callback(0, f"Sweeping {len(config.n_tx)} array size(s) x {len(config.power_levels_dbm())} power level(s) x {config.trials} trial(s)")

    records = run_sweep(config, progress_callback, verbose=not options.get("quiet", False))
    failed = [r for r in records if r.crb_trace is None]

    medians = [
        {"solver": solver, "n_tx": n_tx, "power_dbm": power_dbm, "crb_trace": value}
        for (solver, n_tx, power_dbm), value in sorted(median_by_point(records).items())
    ]
    slopes = [
        {"solver": solver, "power_dbm": power_dbm, "slope": slope}
        for (solver, power_dbm), slope in sorted(scaling_slopes(records).items())
    ]

    return {
        "records": len(records),
        "failed": len(failed),
        "out": config.out,
        "format": config.format,
        "medians": medians,
        "slopes": slopes,
    }
