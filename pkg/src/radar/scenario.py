"""Monostatic MIMO radar model: scenario parameters, steering vectors, channel."""

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..utils.config import SPEED_OF_LIGHT
from ..utils.errors import InvalidDimensionError, ScenarioError
from ..utils.helpers import dbm_to_watts


@dataclass(frozen=True)
class RadarScenario:
    """
    Physical and experiment parameters of a single-target monostatic radar.

    All quantities are in linear units; dBm and degrees are converted once
    by `from_physical`.

    Attributes:
        n_tx: Transmit antennas N_t
        n_rx: Receive antennas N_r
        n_blocks: Pulse blocks per coherent processing interval L
        theta: Target direction (DoD = DoA) in radians
        beta: Complex reflection coefficient
        doppler_norm: Normalized Doppler per block
        noise_power: Receiver noise power in watts
        power_budget: Transmit power budget in watts
    """

    n_tx: int
    n_rx: int
    n_blocks: int
    theta: float
    beta: complex
    doppler_norm: float
    noise_power: float
    power_budget: float

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_blocks"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise InvalidDimensionError(f"{name} must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "beta", complex(self.beta))
        if not -math.pi / 2 < self.theta < math.pi / 2:
            raise ScenarioError(f"theta must lie in (-pi/2, pi/2), got {self.theta}")
        if not self.noise_power > 0:
            raise ScenarioError(f"noise_power must be positive, got {self.noise_power}")
        if not self.power_budget > 0:
            raise ScenarioError(f"power_budget must be positive, got {self.power_budget}")

    @classmethod
    def from_physical(
        cls,
        n_tx: int,
        n_rx: int,
        n_blocks: int,
        theta_deg: float,
        beta: complex,
        noise_dbm: float,
        power_dbm: float,
        doppler_norm: float = 0.0,
    ) -> "RadarScenario":
        """
        Build a scenario from CLI/config units.

        Args:
            theta_deg: Target angle in degrees
            noise_dbm: Noise power in dBm
            power_dbm: Transmit power budget in dBm

        Returns:
            RadarScenario in linear units
        """
        return cls(
            n_tx=n_tx,
            n_rx=n_rx,
            n_blocks=n_blocks,
            theta=math.radians(theta_deg),
            beta=beta,
            doppler_norm=doppler_norm,
            noise_power=dbm_to_watts(noise_dbm),
            power_budget=dbm_to_watts(power_dbm),
        )

    def replace(self, **changes) -> "RadarScenario":
        """Return a copy with some fields changed (re-validated)."""
        return dataclasses.replace(self, **changes)

    @property
    def snr(self) -> float:
        """Radar SNR |beta|^2 P_t / sigma_r^2 (linear)."""
        return abs(self.beta) ** 2 * self.power_budget / self.noise_power


@dataclass(frozen=True, eq=False)
class Beamformer:
    """
    Transmit beamforming vector p with its power budget (P = p p^H).

    The weights array is copied and frozen on construction.
    """

    weights: np.ndarray
    power_budget: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=complex).reshape(-1)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        if weights.size == 0:
            raise InvalidDimensionError("Beamformer needs at least one weight")

    @property
    def n_tx(self) -> int:
        return self.weights.size

    @property
    def power(self) -> float:
        """Radiated power ||p||^2."""
        return float(np.real(np.vdot(self.weights, self.weights)))

    def is_feasible(self, rel_tol: float = 1e-6) -> bool:
        """Check ||p||^2 <= P_t (1 + rel_tol)."""
        return self.power <= self.power_budget * (1.0 + rel_tol)

    def rescaled(self) -> "Beamformer":
        """Project onto the power sphere ||p||^2 = P_t."""
        power = self.power
        if power == 0:
            return self
        scale = math.sqrt(self.power_budget / power)
        return Beamformer(self.weights * scale, self.power_budget)

    def with_weights(self, weights: np.ndarray) -> "Beamformer":
        return Beamformer(weights, self.power_budget)


def _check_size(n: int, name: str):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidDimensionError(f"{name} must be a positive integer, got {n}")


def _steering(theta: float, n: int) -> np.ndarray:
    return np.exp(1j * np.pi * np.arange(n) * np.sin(theta))


def _steering_deriv(theta: float, n: int) -> np.ndarray:
    m = np.arange(n)
    return 1j * np.pi * m * np.cos(theta) * np.exp(1j * np.pi * m * np.sin(theta))


def steering_tx(theta: float, n_tx: int) -> np.ndarray:
    """
    Transmit steering vector a_t(theta) of a half-wavelength ULA.

    Element m (0-indexed) is exp(j*pi*m*sin(theta)), so element 0 is 1.

    Args:
        theta: Angle in radians
        n_tx: Number of transmit antennas

    Returns:
        Complex column vector of length n_tx

    Raises:
        InvalidDimensionError: If n_tx < 1
    """
    _check_size(n_tx, "n_tx")
    return _steering(theta, int(n_tx))


def steering_rx(theta: float, n_rx: int) -> np.ndarray:
    """Receive steering vector a_r(theta); same form as `steering_tx`."""
    _check_size(n_rx, "n_rx")
    return _steering(theta, int(n_rx))


def steering_tx_deriv(theta: float, n_tx: int) -> np.ndarray:
    """Derivative of a_t(theta) with respect to theta."""
    _check_size(n_tx, "n_tx")
    return _steering_deriv(theta, int(n_tx))


def steering_rx_deriv(theta: float, n_rx: int) -> np.ndarray:
    """Derivative of a_r(theta) with respect to theta."""
    _check_size(n_rx, "n_rx")
    return _steering_deriv(theta, int(n_rx))


def channel_matrix(scenario: RadarScenario, theta: Optional[float] = None) -> np.ndarray:
    """
    Rank-one round-trip channel A(theta) = a_r(theta) a_t(theta)^H.

    Args:
        scenario: Radar scenario (supplies antenna counts and theta)
        theta: Optional angle overriding scenario.theta

    Returns:
        Complex n_rx x n_tx matrix
    """
    theta = scenario.theta if theta is None else theta
    a_t = _steering(theta, scenario.n_tx)
    a_r = _steering(theta, scenario.n_rx)
    return np.outer(a_r, a_t.conj())


def channel_matrix_deriv(scenario: RadarScenario) -> np.ndarray:
    """dA/dtheta by the product rule: da_r a_t^H + a_r da_t^H."""
    theta = scenario.theta
    a_t = _steering(theta, scenario.n_tx)
    a_r = _steering(theta, scenario.n_rx)
    da_t = _steering_deriv(theta, scenario.n_tx)
    da_r = _steering_deriv(theta, scenario.n_rx)
    return np.outer(da_r, a_t.conj()) + np.outer(a_r, da_t.conj())


def doppler_norm_from_velocity(
    velocity: float,
    carrier_hz: float,
    block_period_s: float,
    speed_of_light: float = SPEED_OF_LIGHT,
) -> float:
    """
    Normalized Doppler nu = F_D * T with F_D = 2 v f_c / c.

    Args:
        velocity: Radial target velocity in m/s
        carrier_hz: Carrier frequency in Hz
        block_period_s: Block (pulse repetition) period T in seconds

    Returns:
        Dimensionless Doppler phase ramp per block
    """
    return 2.0 * velocity * carrier_hz / speed_of_light * block_period_s
