"""Sweep orchestration over transmit-array sizes, power levels and trials."""

import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .models import ExperimentConfig, SweepRecord
from ..radar.fim import build_fim, crb_trace
from ..radar.scenario import Beamformer, RadarScenario
from ..solvers.baseline import pgd_multistart, pgd_solve
from ..solvers.lpm import initialize, perturbed_initialize, solve
from ..solvers.trace import SolverTrace
from ..storage.results import emit
from ..utils.config import INIT_PERTURBATION
from ..utils.errors import CrbLpmError, PenaltyTooSmallError, SingularFimError

ProgressCallback = Callable[[int, str], None]


@dataclass(frozen=True)
class SweepTask:
    """One (solver, sweep point, trial) unit of work."""

    solver: str
    n_tx: int
    power_index: int
    power_dbm: float
    trial: int


def trial_rng(seed: int, n_tx: int, power_index: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator keyed on the task so results do not depend on scheduling."""
    key = [seed, n_tx, power_index, trial]
    if stream:
        key.append(stream)
    return np.random.default_rng(key)


def initial_beamformer(scenario: RadarScenario, seed: int, power_index: int, trial: int) -> Beamformer:
    """Trial 0 starts from the steering vector; later trials from a seeded perturbation of it."""
    if trial == 0:
        return initialize(scenario)
    rng = trial_rng(seed, scenario.n_tx, power_index, trial)
    return perturbed_initialize(scenario, rng, INIT_PERTURBATION)


def _error_status(error: CrbLpmError) -> str:
    if isinstance(error, SingularFimError):
        return "singular-fim"
    if isinstance(error, PenaltyTooSmallError):
        return "penalty-too-small"
    return "numerical-failure"


def _run_solver(
    config: ExperimentConfig,
    task: SweepTask,
    scenario: RadarScenario,
    p0: Beamformer,
    verbose: bool,
) -> Tuple[Beamformer, SolverTrace]:
    if task.solver == "lpm":
        return solve(scenario, config.lpm_config(verbose=verbose), p0)
    if config.pgd_restarts > 0:
        rng = trial_rng(config.seed, task.n_tx, task.power_index, task.trial, stream=1)
        return pgd_multistart(scenario, config.pgd_config(), p0, config.pgd_restarts, rng)
    return pgd_solve(scenario, config.pgd_config(), p0)


def run_task(config: ExperimentConfig, task: SweepTask, verbose: bool = False) -> SweepRecord:
    """
    Solve one sweep cell and turn the outcome into a record.

    Solver failures become the row status; crb_trace is then left empty.
    Only the solver call is timed.
    """
    row = dict(
        solver=task.solver,
        n_tx=task.n_tx,
        power_dbm=task.power_dbm,
        trial=task.trial,
        seed=config.seed,
    )
    elapsed = 0.0
    try:
        scenario = config.scenario(task.n_tx, task.power_dbm)
        p0 = initial_beamformer(scenario, config.seed, task.power_index, task.trial)
        started = time.perf_counter()
        p, trace = _run_solver(config, task, scenario, p0, verbose)
        elapsed = time.perf_counter() - started
        value = crb_trace(build_fim(scenario, p))
    except CrbLpmError as e:
        return SweepRecord(
            **row,
            crb_trace=None,
            iterations=0,
            wall_time_ms=elapsed * 1e3,
            status=_error_status(e),
        )

    status = trace.status.value
    if not math.isfinite(value) or value <= 0:
        value, status = None, "numerical-failure"
    return SweepRecord(
        **row,
        crb_trace=value,
        iterations=trace.iterations,
        wall_time_ms=elapsed * 1e3,
        status=status,
    )


def build_tasks(config: ExperimentConfig) -> List[SweepTask]:
    return [
        SweepTask(solver, n_tx, power_index, power_dbm, trial)
        for solver in config.solvers()
        for n_tx in config.n_tx
        for power_index, power_dbm in enumerate(config.power_levels_dbm())
        for trial in range(config.trials)
    ]


def run_sweep(
    config: ExperimentConfig,
    progress_callback: Optional[ProgressCallback] = None,
    verbose: bool = False,
) -> List[SweepRecord]:
    """
    Run every (solver, n_tx, power, trial) combination of a config.

    Args:
        config: Validated experiment config
        progress_callback: Optional (percent, message) hook
        verbose: Let solvers print recoverable events (penalty backoff)

    Returns:
        Records sorted by (solver, n_tx, power_dbm, trial); written to
        config.out in config.format before returning when out is set
    """
    tasks = build_tasks(config)
    total = len(tasks)
    records: List[SweepRecord] = []

    def report(done: int, task: SweepTask):
        if progress_callback:
            progress_callback(
                int(done / total * 100),
                f"{task.solver} n_tx={task.n_tx} P={task.power_dbm:g} dBm trial {task.trial}",
            )

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(run_task, config, task, verbose): task for task in tasks}
            for done, future in enumerate(as_completed(futures), 1):
                records.append(future.result())
                report(done, futures[future])
    else:
        for done, task in enumerate(tasks, 1):
            records.append(run_task(config, task, verbose))
            report(done, task)

    records.sort(key=SweepRecord.sort_key)

    if config.out:
        emit(records, config.format, config.out)
    return records
