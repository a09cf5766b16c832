"""Linear-Proximal Method for CRB-minimizing transmit beamforming.

Each iteration linearizes tr(F^-1) around p^k, linearizes the power
constraint (SQP), adds a proximal term rho/2 ||p - p^k||^2 and solves the
resulting equality-constrained quadratic subproblem in closed form:

    Q^k = -(1/sigma^2) Theta + 2 lambda^k I + rho I
    lambda^{k+1} = rho/2 - (P_t + ||p^k||^2) / (4 p^kH (Q^k)^-1 p^k)
    p^{k+1} = (rho - 2 lambda^{k+1}) (Q^k)^-1 p^k

All solves go through a Cholesky factorization of Q^k.
"""

import math
import time
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from .trace import IterationRecord, SolverStatus, SolverTrace
from ..radar.fim import build_fim, crb_trace, fim_weight_matrix
from ..radar.scenario import (
    Beamformer,
    RadarScenario,
    channel_matrix,
    channel_matrix_deriv,
    steering_tx,
)
from ..utils.config import (
    DEFAULT_MAX_ITERS,
    DEFAULT_PENALTY_SCALING,
    DEFAULT_RHO,
    DEFAULT_TOLERANCE,
    DEFAULT_TOLERANCE_MODE,
    INIT_PERTURBATION,
    RATIO_WINDOW,
    REFINE_MAX_ITERS,
    REFINE_TOLERANCE,
    RHO_BACKOFF_CAP,
)
from ..utils.errors import (
    DegenerateInputError,
    InsufficientDataError,
    NumericalFailureError,
    PenaltyTooSmallError,
    SingularFimError,
)


class LpmConfig(BaseModel):
    """Linear-Proximal Method settings."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(default=DEFAULT_RHO, gt=0, description="Proximal penalty")
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0, description="Stopping tolerance on the objective change")
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    final_rescale: bool = Field(default=True, description="Project the result onto ||p||^2 = P_t")
    tolerance_mode: Literal["absolute", "relative"] = DEFAULT_TOLERANCE_MODE
    penalty_scaling: Literal["absolute", "curvature"] = DEFAULT_PENALTY_SCALING
    keep_iterates: bool = Field(default=False, description="Record every p^k (debug mode)")
    verbose: bool = True


@dataclass(frozen=True, eq=False)
class ThetaMatrix:
    """Hermitian n_tx x n_tx matrix Theta with sum_ij a_ij F_ji = p^H Theta p / sigma^2."""

    entries: np.ndarray


def theta_coefficients(
    scenario: RadarScenario,
    weights: np.ndarray,
) -> Tuple[float, complex, complex, float]:
    """
    Scalar coefficients (b, c, d, e) of Theta for weights a = (F^k)^-2.

    Indices below are 1-based in the names (a11 = weights[0, 0]).

    Args:
        scenario: Radar scenario
        weights: Real symmetric 4x4 matrix a_ij

    Returns:
        Tuple (b, c, d, e); b and e are real, d = conj(c) for symmetric a
    """
    a = np.asarray(weights, dtype=float)
    L = scenario.n_blocks
    beta = scenario.beta
    beta_c = np.conj(beta)
    beta_sq = abs(beta) ** 2
    ramp = np.pi * (L + 1)

    a11, a12, a13, a14 = a[0]
    a21, a22, _, a24 = a[1]
    a31, _, a33, a34 = a[2]
    a41, a42, a43, a44 = a[3]

    b = 2 * L * beta_sq * a11
    c = (
        L * beta * a21 - L * beta * a31 * 1j - ramp * beta_sq * a41 * 1j
        + L * beta * a12 - L * beta * a13 * 1j - ramp * beta_sq * a14 * 1j
    )
    d = (
        L * beta_c * a21 + L * beta_c * a31 * 1j + ramp * beta_sq * a41 * 1j
        + L * beta_c * a12 + L * beta_c * a13 * 1j + ramp * beta_sq * a14 * 1j
    )
    e = (
        2 * L * a22
        + ramp * (beta - beta_c) * a42 * 1j
        + ramp * (beta + beta_c) * a43
        + ramp * (beta - beta_c) * a24 * 1j
        + ramp * (beta + beta_c) * a34
        + 2 * L * a33
        + (4 * np.pi ** 2 / L) * (L + 1) * (2 * L + 1) / 3 * beta_sq * a44
    )
    return float(b), complex(c), complex(d), float(np.real(e))


def assemble_theta(
    scenario: RadarScenario,
    b: float,
    c: complex,
    d: complex,
    e: float,
) -> ThetaMatrix:
    """Theta = b dA^H dA + c A^H dA + d dA^H A + e A^H A."""
    a = channel_matrix(scenario)
    da = channel_matrix_deriv(scenario)
    a_h = a.conj().T
    da_h = da.conj().T
    entries = b * (da_h @ da) + c * (a_h @ da) + d * (da_h @ a) + e * (a_h @ a)
    return ThetaMatrix(entries)


def theta_matrix(scenario: RadarScenario, weights: np.ndarray) -> ThetaMatrix:
    """
    Gradient-structure matrix Theta of the linearized CRB objective.

    Args:
        scenario: Radar scenario
        weights: a_ij from `fim_weight_matrix`

    Returns:
        ThetaMatrix (Hermitian for symmetric weights)
    """
    return assemble_theta(scenario, *theta_coefficients(scenario, weights))


def q_matrix(
    theta: ThetaMatrix,
    lambda_k: float,
    rho: float,
    noise_power: float,
) -> np.ndarray:
    """
    Q^k = -(1/sigma^2) Theta + (2 lambda^k + rho) I.

    Positive definiteness is not checked here; `factor_q` does that before
    any solve.
    """
    entries = theta.entries
    q = -entries / noise_power + (2.0 * lambda_k + rho) * np.eye(entries.shape[0])
    return 0.5 * (q + q.conj().T)


def factor_q(q: np.ndarray, rho: float):
    """
    Cholesky factor of Q^k.

    Raises:
        PenaltyTooSmallError: If Q^k is not positive definite; carries the
            offending eigenvalue so the caller can raise rho
    """
    try:
        return cho_factor(q)
    except np.linalg.LinAlgError:
        raise PenaltyTooSmallError(float(eigvalsh(q)[0]), rho)


def lambda_update(
    p_k: Beamformer,
    q: np.ndarray,
    rho: float,
    power_budget: float,
    factor=None,
) -> float:
    """
    Closed-form dual update lambda^{k+1}.

    Args:
        p_k: Current beamformer
        q: Q^k
        rho: Proximal penalty
        power_budget: P_t in watts
        factor: Optional precomputed `factor_q(q, rho)`

    Returns:
        lambda^{k+1}

    Raises:
        PenaltyTooSmallError: If Q^k is not positive definite
        NumericalFailureError: If p^kH (Q^k)^-1 p^k is not positive
    """
    factor = factor_q(q, rho) if factor is None else factor
    w = p_k.weights
    if not np.any(w):
        raise DegenerateInputError("lambda update needs a nonzero beamformer")
    denom = float(np.real(np.vdot(w, cho_solve(factor, w))))
    if not math.isfinite(denom) or denom <= 0:
        raise NumericalFailureError(f"p^H Q^-1 p = {denom} is not positive")
    power = float(np.real(np.vdot(w, w)))
    return rho / 2.0 - (power_budget + power) / (4.0 * denom)


def p_update(
    p_k: Beamformer,
    q: np.ndarray,
    lambda_next: float,
    rho: float,
    factor=None,
) -> Beamformer:
    """
    Closed-form primal update p^{k+1} = (rho - 2 lambda^{k+1}) (Q^k)^-1 p^k.

    Satisfies ||p^k||^2 + 2 Re(p^kH (p^{k+1} - p^k)) = P_t exactly when
    lambda_next comes from `lambda_update` with the same Q^k.
    """
    factor = factor_q(q, rho) if factor is None else factor
    weights = (rho - 2.0 * lambda_next) * cho_solve(factor, p_k.weights)
    if not np.all(np.isfinite(weights)):
        raise NumericalFailureError("Primal update produced non-finite weights")
    return p_k.with_weights(weights)


def initialize(scenario: RadarScenario) -> Beamformer:
    """Steering-vector start p^0 = sqrt(P_t) a_t(theta) / ||a_t(theta)||."""
    a_t = steering_tx(scenario.theta, scenario.n_tx)
    weights = math.sqrt(scenario.power_budget) * a_t / np.linalg.norm(a_t)
    return Beamformer(weights, scenario.power_budget)


def perturbed_initialize(
    scenario: RadarScenario,
    rng: np.random.Generator,
    spread: float = INIT_PERTURBATION,
) -> Beamformer:
    """
    Randomized start normalize(a_t + delta) on the power sphere.

    delta is circular complex Gaussian with per-element standard deviation
    spread * ||a_t|| / sqrt(N_t).
    """
    a_t = steering_tx(scenario.theta, scenario.n_tx)
    sigma = spread * np.linalg.norm(a_t) / math.sqrt(scenario.n_tx)
    noise = rng.standard_normal(scenario.n_tx) + 1j * rng.standard_normal(scenario.n_tx)
    weights = a_t + sigma * noise / math.sqrt(2.0)
    return Beamformer(weights, scenario.power_budget).rescaled()


def _linearized_residual(p_k: np.ndarray, p_next: np.ndarray, power_budget: float) -> float:
    power = np.real(np.vdot(p_k, p_k))
    value = power + 2.0 * np.real(np.vdot(p_k, p_next - p_k))
    return float((value - power_budget) / power_budget)


def curvature_scale(scenario: RadarScenario, p: Beamformer) -> float:
    """Spectral norm of Theta/sigma^2 at p, the scale of the linearized objective's curvature."""
    weights = fim_weight_matrix(build_fim(scenario, p))
    theta = theta_matrix(scenario, weights).entries / scenario.noise_power
    theta = 0.5 * (theta + theta.conj().T)
    return float(np.max(np.abs(eigvalsh(theta))))


def solve(
    scenario: RadarScenario,
    config: Optional[LpmConfig] = None,
    p0: Optional[Beamformer] = None,
) -> Tuple[Beamformer, SolverTrace]:
    """
    Run the Linear-Proximal Method to convergence.

    Args:
        scenario: Radar scenario
        config: Solver settings (defaults to LpmConfig())
        p0: Starting beamformer (defaults to `initialize(scenario)`)

    Returns:
        (beamformer, trace); max-iterations and mid-run numerical failures
        are reported through trace.status

    Raises:
        SingularFimError: If F(p0) is singular (unobservable parameters)
        PenaltyTooSmallError: If doubling rho up to its cap never makes
            Q^k positive definite
    """
    config = config or LpmConfig()
    p = p0 if p0 is not None else initialize(scenario)
    if p.n_tx != scenario.n_tx:
        raise DegenerateInputError(f"p0 has {p.n_tx} weights, scenario has n_tx={scenario.n_tx}")
    sigma2 = scenario.noise_power
    budget = scenario.power_budget

    fim = build_fim(scenario, p)
    objective = crb_trace(fim)

    rho = config.rho
    if config.penalty_scaling == "curvature":
        curvature = curvature_scale(scenario, p)
        if curvature > 0:
            rho *= curvature
    rho_cap = rho * RHO_BACKOFF_CAP

    trace = SolverTrace(solver="lpm", initial_objective=objective)
    if config.keep_iterates:
        trace.iterates = [np.array(p.weights)]

    lam = 0.0
    for _ in range(config.max_iters):
        started = time.perf_counter()
        theta = theta_matrix(scenario, fim_weight_matrix(fim))

        while True:
            q = q_matrix(theta, lam, rho, sigma2)
            try:
                factor = factor_q(q, rho)
                break
            except PenaltyTooSmallError as e:
                if rho * 2 > rho_cap:
                    raise
                if config.verbose:
                    print(f"⚠️ {e}; retrying with rho={rho * 2:g}", flush=True)
                rho *= 2

        try:
            lam_next = lambda_update(p, q, rho, budget, factor)
            p_next = p_update(p, q, lam_next, rho, factor)
            fim_next = build_fim(scenario, p_next)
            objective_next = crb_trace(fim_next)
        except (NumericalFailureError, SingularFimError, DegenerateInputError) as e:
            trace.finish(SolverStatus.NUMERICAL_FAILURE, str(e))
            break

        if not math.isfinite(lam_next) or not math.isfinite(objective_next):
            trace.finish(SolverStatus.NUMERICAL_FAILURE, "Non-finite objective or dual variable")
            break

        change = abs(objective_next - objective)
        threshold = config.tolerance
        if config.tolerance_mode == "relative":
            threshold *= abs(objective)

        trace.append(
            IterationRecord(
                objective=objective_next,
                lam=lam_next,
                step_norm=float(np.linalg.norm(p_next.weights - p.weights)),
                wall_time=time.perf_counter() - started,
                rho=rho,
                constraint_residual=_linearized_residual(p.weights, p_next.weights, budget),
            ),
            iterate=p_next.weights,
        )
        p, fim, objective, lam = p_next, fim_next, objective_next, lam_next

        if change <= threshold:
            trace.finish(SolverStatus.CONVERGED)
            break
    else:
        trace.finish(SolverStatus.MAX_ITERS)

    if config.final_rescale:
        p = p.rescaled()
    return p, trace


def _distance(x: np.ndarray, reference: np.ndarray, align_phase: bool) -> float:
    if align_phase:
        # tr(F^-1) ignores a global phase, so compare against the closest rotation
        reference = reference * np.exp(1j * np.angle(np.vdot(reference, x)))
    return float(np.linalg.norm(x - reference))


def convergence_ratio(
    trace: SolverTrace,
    p_star: Beamformer,
    align_phase: bool = False,
) -> List[Optional[float]]:
    """
    Ratios ||p^{k+1} - p*|| / ||p^k - p*|| over the recorded iterates.

    A ratio is None when ||p^k - p*|| < 1e-12 (the iterate already equals
    p*, so the ratio is 0/0).

    Args:
        trace: Trace from a solve with keep_iterates=True
        p_star: Reference point, normally the terminal iterate
        align_phase: Measure distances to the closest global-phase
            rotation of p*

    Raises:
        InsufficientDataError: If fewer than 3 iterates were recorded
    """
    if trace.iterates is None or len(trace.iterates) < 3:
        count = 0 if trace.iterates is None else len(trace.iterates)
        raise InsufficientDataError(f"Need at least 3 recorded iterates, have {count}")
    reference = p_star.weights
    distances = [_distance(x, reference, align_phase) for x in trace.iterates]
    ratios: List[Optional[float]] = []
    for before, after in zip(distances[:-1], distances[1:]):
        ratios.append(None if before < 1e-12 else after / before)
    return ratios


def refine_reference(
    scenario: RadarScenario,
    p: Beamformer,
    tolerance: float = REFINE_TOLERANCE,
    max_iters: int = REFINE_MAX_ITERS,
) -> Beamformer:
    """
    Continue from p to a tightly converged point for convergence diagnostics.

    Uses the curvature-scaled penalty whatever the run being diagnosed used,
    so a slowly contracting run still gets an accurate reference.
    """
    config = LpmConfig(
        tolerance=tolerance,
        tolerance_mode="relative",
        penalty_scaling="curvature",
        max_iters=max_iters,
        final_rescale=False,
        verbose=False,
    )
    p_star, _ = solve(scenario, config, p)
    return p_star


def late_convergence_ratios(
    scenario: RadarScenario,
    trace: SolverTrace,
    window: int = RATIO_WINDOW,
) -> List[Optional[float]]:
    """
    Contraction ratios over the last `window` iterations of a recorded run.

    The terminal iterate makes a poor p* here: with a contraction rate r
    close to 1 the ratios against it fall off as j/(j+1) towards the end of
    the run. The reference is instead refined from the terminal iterate,
    and distances ignore the global phase.

    Raises:
        InsufficientDataError: If the trace holds fewer than window + 1 iterates
    """
    count = 0 if trace.iterates is None else len(trace.iterates)
    if count < max(window + 1, 3):
        raise InsufficientDataError(f"Need at least {window + 1} recorded iterates, have {count}")
    terminal = Beamformer(trace.iterates[-1], scenario.power_budget)
    p_star = refine_reference(scenario, terminal)
    return convergence_ratio(trace, p_star, align_phase=True)[-window:]
