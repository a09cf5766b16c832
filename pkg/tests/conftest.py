"""Shared desk-scale fixtures.

Desk scale means a few antennas, L = 8 blocks, sigma^2 = 30 dBm and
P_t = 20 dBm, where tr(F^-1) is of order one and every solve is fast.
"""

import numpy as np
import pytest

from src.radar.scenario import Beamformer, RadarScenario
from src.solvers.lpm import LpmConfig, perturbed_initialize


def make_scenario(n_tx=4, n_rx=4, n_blocks=8, theta_deg=45.0, beta=1.0, noise_dbm=30.0, power_dbm=20.0, doppler_norm=0.0):
    return RadarScenario.from_physical(
        n_tx=n_tx,
        n_rx=n_rx,
        n_blocks=n_blocks,
        theta_deg=theta_deg,
        beta=beta,
        noise_dbm=noise_dbm,
        power_dbm=power_dbm,
        doppler_norm=doppler_norm,
    )


def random_beamformer(rng, scenario):
    weights = rng.standard_normal(scenario.n_tx) + 1j * rng.standard_normal(scenario.n_tx)
    return Beamformer(weights, scenario.power_budget).rescaled()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def desk_scenario():
    return make_scenario()


@pytest.fixture
def desk_start(desk_scenario):
    """Perturbed steering start; the plain steering vector is stationary at desk scale."""
    return perturbed_initialize(desk_scenario, np.random.default_rng(2024), spread=0.3)


@pytest.fixture
def two_tx_scenario():
    return make_scenario(n_tx=2, n_rx=2)


@pytest.fixture
def large_scenario():
    """N_t = 16, N_r = 9, L = 1024, sigma^2 = 0 dBm, SNR 10 dB."""
    return make_scenario(n_tx=16, n_rx=9, n_blocks=1024, noise_dbm=0.0, power_dbm=10.0)


@pytest.fixture
def tight_config():
    return LpmConfig(
        tolerance=1e-12,
        tolerance_mode="relative",
        penalty_scaling="curvature",
        max_iters=20000,
        verbose=False,
    )
