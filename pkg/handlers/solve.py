"""Handler for single-scenario solves."""

from typing import Any, Callable, Dict


def handle_solve(
    settings: Dict[str, Any],
    options: Dict[str, Any],
    progress_callback: Callable[[int, str], None]
) -> Dict[str, Any]:
    """
    Solve one scenario with the configured solver(s).

    options format:
    {
        "debug": false,   # keep iterates, report late convergence ratios
        "quiet": false
    }

    Returns:
        {"n_tx": N, "power_dbm": X, "ok": bool, "results": [...]}

    Raises:
        ConfigError: If the settings name more than one n_tx or power level
    """
    import math
    import time

    from src.harness.models import ExperimentConfig
    from src.harness.sweep import trial_rng
    from src.radar.fim import build_fim, crb_per_parameter, crb_trace
    from src.solvers.baseline import pgd_multistart, pgd_solve
    from src.solvers.lpm import initialize, late_convergence_ratios, solve
    from src.solvers.trace import SolverStatus
    from src.utils.errors import ConfigError, InsufficientDataError
    from src.utils.helpers import watts_to_dbm

    debug = bool(options.get("debug", False))
    quiet = bool(options.get("quiet", False))

    config = ExperimentConfig.from_settings(settings)
    powers = config.power_levels_dbm()
    if len(config.n_tx) != 1 or len(powers) != 1:
        raise ConfigError("solve takes a single n_tx and a single power level; use sweep for lists")

    n_tx, power_dbm = config.n_tx[0], powers[0]
    scenario = config.scenario(n_tx, power_dbm)

    results = []
    solvers = config.solvers()
    for i, solver in enumerate(solvers):
        progress_callback(int(i / len(solvers) * 100), f"Running {solver} (n_tx={n_tx}, P={power_dbm:g} dBm)")

        started = time.perf_counter()
        if solver == "lpm":
            p, trace = solve(scenario, config.lpm_config(verbose=not quiet, keep_iterates=debug))
        elif config.pgd_restarts > 0:
            rng = trial_rng(config.seed, n_tx, 0, 0, stream=1)
            p, trace = pgd_multistart(scenario, config.pgd_config(), initialize(scenario), config.pgd_restarts, rng)
        else:
            p, trace = pgd_solve(scenario, config.pgd_config())
        elapsed = time.perf_counter() - started

        fim = build_fim(scenario, p)
        entry = {
            "solver": solver,
            "status": trace.status.value,
            "message": trace.message,
            "iterations": trace.iterations,
            "crb_trace": crb_trace(fim),
            "initial_crb_trace": trace.initial_objective,
            "per_parameter": crb_per_parameter(fim),
            "lambda": float(trace.records[-1].lam) if trace.records else 0.0,
            "weights": p.weights.tolist(),
            "power": p.power,
            "power_out_dbm": watts_to_dbm(p.power),
            "wall_time_ms": elapsed * 1e3,
        }

        if debug and trace.iterates is not None:
            try:
                entry["convergence_ratios"] = late_convergence_ratios(scenario, trace)
            except InsufficientDataError as e:
                entry["convergence_ratios"] = []
                entry["message"] = f"{entry['message']} ({e})".strip()

        results.append(entry)

    progress_callback(100, "Solve complete")

    return {
        "n_tx": n_tx,
        "power_dbm": power_dbm,
        "snr_db": 10.0 * math.log10(scenario.snr),
        "ok": all(r["status"] != SolverStatus.NUMERICAL_FAILURE.value for r in results),
        "results": results,
    }
