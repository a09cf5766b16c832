"""Per-iteration solver records shared by the LPM and the baselines."""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np


class SolverStatus(str, Enum):
    """Terminal status of an iterative solve."""

    RUNNING = "running"
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    NUMERICAL_FAILURE = "numerical-failure"
    STALLED = "stalled"


@dataclass(frozen=True)
class IterationRecord:
    """
    One accepted iteration.

    Attributes:
        objective: tr(F(p^{k+1})^-1)
        lam: Dual variable (LPM) or multiplier estimate (PGD)
        step_norm: ||p^{k+1} - p^k||
        wall_time: Seconds spent in this iteration
        rho: Penalty in force (LPM) or accepted step length (PGD)
        constraint_residual: Relative residual of the linearized power
            constraint (LPM) or of ||p||^2 = P_t (PGD)
    """

    objective: float
    lam: float
    step_norm: float
    wall_time: float
    rho: float = float("nan")
    constraint_residual: float = 0.0


@dataclass
class SolverTrace:
    """Iteration history and terminal status of one solve."""

    solver: str
    initial_objective: float
    records: List[IterationRecord] = field(default_factory=list)
    status: SolverStatus = SolverStatus.RUNNING
    message: str = ""
    # Only filled in debug mode; iterates[0] is the starting point
    iterates: Optional[List[np.ndarray]] = None

    def append(self, record: IterationRecord, iterate: Optional[np.ndarray] = None):
        self.records.append(record)
        if self.iterates is not None and iterate is not None:
            self.iterates.append(np.array(iterate, dtype=complex))

    def finish(self, status: SolverStatus, message: str = ""):
        self.status = status
        self.message = message

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.records])

    @property
    def step_norms(self) -> np.ndarray:
        return np.array([r.step_norm for r in self.records])

    @property
    def final_objective(self) -> float:
        if not self.records:
            return self.initial_objective
        return self.records[-1].objective

    @property
    def total_time(self) -> float:
        return float(sum(r.wall_time for r in self.records))

    @property
    def median_iteration_time(self) -> float:
        if not self.records:
            return 0.0
        return float(np.median([r.wall_time for r in self.records]))
