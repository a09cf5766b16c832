"""Fisher information of the target parameters xi = [theta, beta_re, beta_im, F_D].

F is linear in the transmit covariance P = p p^H, so every entry is a
Hermitian form in p: F_ij = Re(p^H M_ij p). `build_fim` evaluates the closed
forms directly; `fim_quadratic_forms` exposes the M_ij for gradients and
batched evaluation; `fim_numeric_oracle` is a brute-force finite-difference
check used only by tests and the oracle suite.
"""

from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from .scenario import (
    Beamformer,
    RadarScenario,
    channel_matrix,
    channel_matrix_deriv,
)
from ..utils.config import FD_STEP, SINGULAR_FIM_RTOL
from ..utils.errors import DegenerateInputError, SingularFimError

PARAMETER_NAMES = ("theta", "beta_re", "beta_im", "doppler")

# Upper-triangle index pairs, in storage order of FimQuadraticForms.m
FORM_PAIRS: Tuple[Tuple[int, int], ...] = tuple(
    (i, j) for i in range(4) for j in range(i, 4)
)

BeamformerLike = Union[Beamformer, np.ndarray]


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Real symmetric 4x4 FIM over [theta, beta_re, beta_im, F_D]."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.shape != (4, 4):
            raise ValueError(f"FIM must be 4x4, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.entries)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def is_positive_definite(self, rtol: float = SINGULAR_FIM_RTOL) -> bool:
        eigs = self.eigenvalues
        return bool(eigs[0] > rtol * max(abs(eigs[-1]), abs(eigs[0])))


@dataclass(frozen=True, eq=False)
class FimQuadraticForms:
    """
    Hermitian matrices M_ij with F_ij = Re(p^H M_ij p), upper triangle only.

    Attributes:
        m: Array of shape (10, n_tx, n_tx) ordered as FORM_PAIRS
    """

    m: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.m.shape[-1]

    def form(self, i: int, j: int) -> np.ndarray:
        """Return M_ij for any (i, j); M_ji = M_ij."""
        if i > j:
            i, j = j, i
        return self.m[FORM_PAIRS.index((i, j))]

    def evaluate_batch(self, weights: np.ndarray) -> np.ndarray:
        """
        Evaluate the FIM for many beamformers at once.

        Args:
            weights: Complex array of shape (..., n_tx)

        Returns:
            Real array of shape (..., 4, 4)
        """
        weights = np.asarray(weights, dtype=complex)
        values = np.real(np.einsum("...i,kij,...j->...k", weights.conj(), self.m, weights))
        fim = np.empty(values.shape[:-1] + (4, 4))
        for idx, (i, j) in enumerate(FORM_PAIRS):
            fim[..., i, j] = values[..., idx]
            fim[..., j, i] = values[..., idx]
        return fim

    def evaluate(self, p: BeamformerLike) -> FisherMatrix:
        return FisherMatrix(self.evaluate_batch(_weights(p)))

    def weighted_sum(self, a: np.ndarray) -> np.ndarray:
        """Sum_ij a_ij M_ji for a real 4x4 weight matrix a."""
        total = np.zeros((self.n_tx, self.n_tx), dtype=complex)
        for idx, (i, j) in enumerate(FORM_PAIRS):
            coeff = a[i, i] if i == j else a[i, j] + a[j, i]
            total += coeff * self.m[idx]
        return total


def _weights(p: BeamformerLike) -> np.ndarray:
    if isinstance(p, Beamformer):
        return p.weights
    return np.asarray(p, dtype=complex).reshape(-1)


def _block_sums(n_blocks: int) -> Tuple[float, float]:
    """Sum of l and of l^2 over l = 1..L."""
    L = n_blocks
    return L * (L + 1) / 2.0, L * (L + 1) * (2 * L + 1) / 6.0


def _hermitian_part(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def build_fim(scenario: RadarScenario, p: BeamformerLike) -> FisherMatrix:
    """
    Analytic FIM for beamformer p.

    Uses mu[l] = beta exp(j 2 pi nu l / L) A(theta) p, l = 1..L, and the
    Hermitian form F_ij = (2/sigma^2) Re sum_l (dmu/dxi_i)^H (dmu/dxi_j).
    The Doppler phases cancel, so only sums of l and l^2 survive.

    Args:
        scenario: Radar scenario
        p: Beamformer or raw weight vector

    Returns:
        FisherMatrix

    Raises:
        DegenerateInputError: If p is the zero vector
    """
    w = _weights(p)
    if not np.any(w):
        raise DegenerateInputError("Zero beamformer carries no information")

    L = scenario.n_blocks
    beta = scenario.beta
    beta_sq = abs(beta) ** 2
    sum_l, sum_l2 = _block_sums(L)
    ramp = 2.0 * np.pi * sum_l / L  # = pi (L + 1)

    u = channel_matrix(scenario) @ w
    v = channel_matrix_deriv(scenario) @ w
    uu = float(np.real(np.vdot(u, u)))
    vv = float(np.real(np.vdot(v, v)))
    vu = np.vdot(v, u)
    cross = np.conj(beta) * vu

    fim = np.zeros((4, 4))
    fim[0, 0] = L * beta_sq * vv
    fim[0, 1] = L * cross.real
    fim[0, 2] = -L * cross.imag
    fim[0, 3] = -ramp * beta_sq * vu.imag
    fim[1, 1] = L * uu
    fim[1, 2] = 0.0
    fim[1, 3] = -ramp * beta.imag * uu
    fim[2, 2] = L * uu
    fim[2, 3] = ramp * beta.real * uu
    fim[3, 3] = (2.0 * np.pi / L) ** 2 * sum_l2 * beta_sq * uu

    fim = np.triu(fim) + np.triu(fim, 1).T
    return FisherMatrix(fim * (2.0 / scenario.noise_power))


def fim_quadratic_forms(scenario: RadarScenario) -> FimQuadraticForms:
    """
    Hermitian matrices M_ij such that build_fim(p)_ij = Re(p^H M_ij p).

    Mirrors `build_fim` with u = A p and v = (dA/dtheta) p lifted to
    matrices; Re(p^H X p) is replaced by p^H herm(X) p.
    """
    L = scenario.n_blocks
    beta = scenario.beta
    beta_sq = abs(beta) ** 2
    sum_l, sum_l2 = _block_sums(L)
    ramp = 2.0 * np.pi * sum_l / L
    scale = 2.0 / scenario.noise_power

    a = channel_matrix(scenario)
    da = channel_matrix_deriv(scenario)
    aa = a.conj().T @ a
    dd = da.conj().T @ da
    da_a = da.conj().T @ a  # v^H u = p^H (dA^H A) p

    forms = {
        (0, 0): L * beta_sq * dd,
        (0, 1): L * _hermitian_part(np.conj(beta) * da_a),
        (0, 2): L * _hermitian_part(1j * np.conj(beta) * da_a),
        (0, 3): ramp * beta_sq * _hermitian_part(1j * da_a),
        (1, 1): L * aa,
        (1, 2): np.zeros_like(aa),
        (1, 3): -ramp * beta.imag * aa,
        (2, 2): L * aa,
        (2, 3): ramp * beta.real * aa,
        (3, 3): (2.0 * np.pi / L) ** 2 * sum_l2 * beta_sq * aa,
    }
    m = np.stack([scale * forms[pair] for pair in FORM_PAIRS])
    return FimQuadraticForms(m)


def _signal_mean(scenario: RadarScenario, w: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """mu[l] for l = 1..L as an (L, n_rx) array at xi = [theta, b_re, b_im, nu]."""
    theta, beta_re, beta_im, nu = xi
    beta = beta_re + 1j * beta_im
    L = scenario.n_blocks
    blocks = np.arange(1, L + 1)
    phases = np.exp(1j * 2.0 * np.pi * nu * blocks / L)
    echo = channel_matrix(scenario, theta=theta) @ w
    return beta * phases[:, None] * echo[None, :]


def fim_numeric_oracle(
    scenario: RadarScenario,
    p: BeamformerLike,
    step: float = FD_STEP,
) -> FisherMatrix:
    """
    Brute-force FIM by central finite differences of mu[l] on xi.

    Sums the L block terms literally; intended for L <= 4096, N_t <= 64.

    Args:
        scenario: Radar scenario
        p: Beamformer or raw weight vector
        step: Finite-difference step on every parameter

    Returns:
        FisherMatrix
    """
    w = _weights(p)
    xi = np.array([
        scenario.theta,
        scenario.beta.real,
        scenario.beta.imag,
        scenario.doppler_norm,
    ])
    partials = []
    for k in range(4):
        offset = np.zeros(4)
        offset[k] = step
        plus = _signal_mean(scenario, w, xi + offset)
        minus = _signal_mean(scenario, w, xi - offset)
        partials.append(((plus - minus) / (2.0 * step)).reshape(-1))
    stacked = np.stack(partials)
    gram = stacked.conj() @ stacked.T
    fim = (2.0 / scenario.noise_power) * np.real(gram)
    return FisherMatrix(0.5 * (fim + fim.T))


def _factor(f: FisherMatrix):
    """Cholesky factor of F after the singularity check."""
    if not f.is_positive_definite():
        raise SingularFimError(f.min_eigenvalue)
    try:
        return cho_factor(f.entries)
    except np.linalg.LinAlgError:
        raise SingularFimError(f.min_eigenvalue)


def crb_trace(f: FisherMatrix) -> float:
    """
    CRB objective tr(F^-1) through a Cholesky solve.

    Raises:
        SingularFimError: If F is not positive definite (min eigenvalue
            at or below 1e-12 times the spectral norm)
    """
    inverse = cho_solve(_factor(f), np.eye(4))
    return float(np.trace(inverse))


def crb_per_parameter(f: FisherMatrix) -> Dict[str, float]:
    """Per-parameter CRBs, the diagonal of F^-1."""
    inverse = cho_solve(_factor(f), np.eye(4))
    return {name: float(inverse[k, k]) for k, name in enumerate(PARAMETER_NAMES)}


def fim_weight_matrix(f: FisherMatrix) -> np.ndarray:
    """
    Weights a_ij of the linearized objective: A = F^-1 F^-1 = F^-2.

    Obtained by two Cholesky solves; never forms an explicit inverse.
    """
    factor = _factor(f)
    inverse = cho_solve(factor, np.eye(4))
    weights = cho_solve(factor, inverse)
    return 0.5 * (weights + weights.T)
