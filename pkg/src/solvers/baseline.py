"""Independent reference solvers for tr(F^-1) under a power budget.

`pgd_solve` is projected gradient descent on the sphere ||p||^2 = P_t with
a backtracking Armijo line search; `grid_oracle_2tx` exhaustively scans
the two-antenna beamformers. Both evaluate the FIM through
`FimQuadraticForms`, independently of the LPM's Theta construction.
"""

import math
import time
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .lpm import initialize, perturbed_initialize
from .trace import IterationRecord, SolverStatus, SolverTrace
from ..radar.fim import (
    FimQuadraticForms,
    crb_trace,
    fim_quadratic_forms,
    fim_weight_matrix,
)
from ..radar.scenario import Beamformer, RadarScenario
from ..utils.config import (
    DEFAULT_PGD_ARMIJO,
    DEFAULT_PGD_BACKTRACK,
    DEFAULT_PGD_MAX_ITERS,
    DEFAULT_PGD_STEP,
    DEFAULT_PGD_TOLERANCE,
    INIT_PERTURBATION,
    PGD_MAX_HALVINGS,
    SINGULAR_FIM_RTOL,
)
from ..utils.errors import SingularFimError, UnsupportedDimensionError


class PgdConfig(BaseModel):
    """
    Projected-gradient settings.

    step_init is measured in units of the sphere radius sqrt(P_t): a unit
    step moves p by sqrt(P_t) along the normalized descent direction.
    """

    model_config = ConfigDict(frozen=True)

    step_init: float = Field(default=DEFAULT_PGD_STEP, gt=0)
    backtrack_factor: float = Field(default=DEFAULT_PGD_BACKTRACK, gt=0, lt=1)
    armijo_c: float = Field(default=DEFAULT_PGD_ARMIJO, gt=0, lt=1)
    tolerance: float = Field(default=DEFAULT_PGD_TOLERANCE, gt=0, description="Relative objective change")
    max_iters: int = Field(default=DEFAULT_PGD_MAX_ITERS, ge=1)


def crb_gradient(forms: FimQuadraticForms, p: Beamformer) -> Tuple[float, np.ndarray]:
    """
    Objective tr(F(p)^-1) and its gradient with respect to conj(p).

    With F_ij = Re(p^H M_ij p) the gradient is -sum_ij [F^-2]_ij M_ji p;
    the gradient with respect to [Re p; Im p] is twice its stacked real
    and imaginary parts.

    Raises:
        SingularFimError: If F(p) is singular
    """
    fim = forms.evaluate(p)
    objective = crb_trace(fim)
    weights = fim_weight_matrix(fim)
    gradient = -forms.weighted_sum(weights) @ p.weights
    return objective, gradient


def _project(weights: np.ndarray, power_budget: float) -> np.ndarray:
    return weights * math.sqrt(power_budget) / np.linalg.norm(weights)


def _objective_or_inf(forms: FimQuadraticForms, weights: np.ndarray) -> float:
    try:
        return crb_trace(forms.evaluate(weights))
    except SingularFimError:
        return math.inf


def pgd_solve(
    scenario: RadarScenario,
    config: Optional[PgdConfig] = None,
    p0: Optional[Beamformer] = None,
) -> Tuple[Beamformer, SolverTrace]:
    """
    Projected gradient descent on ||p||^2 = P_t.

    Each step moves along the tangent-projected negative gradient, then
    renormalizes; the step length backtracks until the Armijo condition
    f(p_new) <= f(p) + c * 2 Re(g^H (p_new - p)) holds.

    Args:
        scenario: Radar scenario
        config: Solver settings
        p0: Starting point; rescaled onto the sphere if needed

    Returns:
        (beamformer, trace); a failed line search ends with status stalled
    """
    config = config or PgdConfig()
    budget = scenario.power_budget
    forms = fim_quadratic_forms(scenario)
    p = (p0 if p0 is not None else initialize(scenario)).rescaled()

    objective, gradient = crb_gradient(forms, p)
    trace = SolverTrace(solver="pgd", initial_objective=objective)
    radius = math.sqrt(budget)

    for _ in range(config.max_iters):
        started = time.perf_counter()
        w = p.weights
        radial = np.real(np.vdot(w, gradient)) / budget
        tangent = gradient - radial * w
        tangent_norm = float(np.linalg.norm(tangent))
        if tangent_norm <= 1e-14 * max(float(np.linalg.norm(gradient)), 1e-300):
            trace.finish(SolverStatus.CONVERGED, "Stationary point")
            break

        direction = -radius * tangent / tangent_norm
        step = config.step_init
        accepted = None
        for _ in range(PGD_MAX_HALVINGS):
            candidate = _project(w + step * direction, budget)
            decrease = 2.0 * np.real(np.vdot(gradient, candidate - w))
            value = _objective_or_inf(forms, candidate)
            if value <= objective + config.armijo_c * decrease and value < objective:
                accepted = (candidate, value)
                break
            step *= config.backtrack_factor
        if accepted is None:
            trace.finish(SolverStatus.STALLED, f"Line search failed after {PGD_MAX_HALVINGS} halvings")
            break

        candidate, value = accepted
        p_next = p.with_weights(candidate)
        relative_change = (objective - value) / objective
        trace.append(
            IterationRecord(
                objective=value,
                lam=radial,
                step_norm=float(np.linalg.norm(candidate - w)),
                wall_time=time.perf_counter() - started,
                rho=step,
                constraint_residual=(p_next.power - budget) / budget,
            )
        )
        p, objective = p_next, value
        _, gradient = crb_gradient(forms, p)
        if relative_change <= config.tolerance:
            trace.finish(SolverStatus.CONVERGED)
            break
    else:
        trace.finish(SolverStatus.MAX_ITERS)

    return p, trace


def pgd_multistart(
    scenario: RadarScenario,
    config: Optional[PgdConfig],
    p0: Beamformer,
    restarts: int,
    rng: np.random.Generator,
) -> Tuple[Beamformer, SolverTrace]:
    """
    Best of PGD from p0 and from `restarts` perturbed steering starts.

    The returned trace is the winning run's; its message notes how many
    starts were tried.
    """
    best = pgd_solve(scenario, config, p0)
    for _ in range(restarts):
        start = perturbed_initialize(scenario, rng, spread=10 * INIT_PERTURBATION)
        candidate = pgd_solve(scenario, config, start)
        if candidate[1].final_objective < best[1].final_objective:
            best = candidate
    best[1].message = (best[1].message + f" (best of {restarts + 1} starts)").strip()
    return best


def _batch_crb(fims: np.ndarray) -> np.ndarray:
    """tr(F^-1) for a stack of FIMs; inf where F is not positive definite."""
    eigs = np.linalg.eigvalsh(fims)
    scale = np.maximum(np.abs(eigs[..., 0]), np.abs(eigs[..., -1]))
    valid = eigs[..., 0] > SINGULAR_FIM_RTOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.sum(1.0 / eigs, axis=-1)
    return np.where(valid, values, np.inf)


def grid_oracle_2tx(
    scenario: RadarScenario,
    amp_steps: int,
    phase_steps: int,
    chunk_rows: int = 64,
) -> Tuple[Beamformer, float]:
    """
    Exhaustive search over two-antenna beamformers on the power sphere.

    p = sqrt(P_t) [cos t, sin t exp(j phi)] with t = (pi/2) i / amp_steps,
    i = 0..amp_steps, and phi = 2 pi k / phase_steps, k < phase_steps. The
    global phase is fixed because tr(F^-1) ignores it. Multiplying both
    step counts by an integer keeps every old grid point, so refinement
    never raises the best value.

    Args:
        scenario: Radar scenario with n_tx = 2
        amp_steps: Amplitude-split resolution (>= 100)
        phase_steps: Relative-phase resolution (>= 100)
        chunk_rows: Amplitude rows evaluated per vectorized batch

    Returns:
        (best beamformer, best tr(F^-1))

    Raises:
        UnsupportedDimensionError: If scenario.n_tx != 2
    """
    if scenario.n_tx != 2:
        raise UnsupportedDimensionError(f"Grid oracle needs n_tx = 2, got {scenario.n_tx}")
    if amp_steps < 100 or phase_steps < 100:
        raise ValueError("Grid oracle needs at least 100 steps per axis")

    forms = fim_quadratic_forms(scenario)
    radius = math.sqrt(scenario.power_budget)
    splits = (np.pi / 2.0) * np.arange(amp_steps + 1) / amp_steps
    phases = np.exp(1j * 2.0 * np.pi * np.arange(phase_steps) / phase_steps)

    best_value = math.inf
    best_weights = None
    for start in range(0, splits.size, chunk_rows):
        t = splits[start:start + chunk_rows, None]
        weights = np.empty((t.shape[0], phase_steps, 2), dtype=complex)
        weights[..., 0] = radius * np.cos(t)
        weights[..., 1] = radius * np.sin(t) * phases[None, :]
        values = _batch_crb(forms.evaluate_batch(weights))
        idx = np.unravel_index(np.argmin(values), values.shape)
        if values[idx] < best_value:
            best_value = float(values[idx])
            best_weights = weights[idx]

    if best_weights is None:
        raise SingularFimError(0.0, "FIM singular at every grid point")
    return Beamformer(best_weights, scenario.power_budget), best_value
