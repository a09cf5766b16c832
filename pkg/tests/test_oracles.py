import math
import re

import pytest

from src.harness.oracles import (
    CHECK_DEFAULTS,
    GRID_RX_SIZES,
    check_config,
    check_fim_oracle,
    check_grid_oracle,
    check_linearized_constraint,
    check_pgd_agreement,
    check_start,
    check_subproblem,
    check_theta_gradient,
    run_checks,
)
from src.harness.models import ExperimentConfig
from src.solvers.lpm import assemble_theta, solve, theta_coefficients
from src.utils.errors import ConfigError


def flipped_c_theta(scenario, weights):
    b, c, d, e = theta_coefficients(scenario, weights)
    return assemble_theta(scenario, b, -c, d, e)


@pytest.fixture
def config():
    return check_config()


def test_check_config_defaults_and_overrides():
    config = check_config({"n_tx": [2, 3], "seed": 4})
    assert config.n_tx == [2, 3]
    assert config.seed == 4
    assert config.n_blocks == CHECK_DEFAULTS["n_blocks"]
    assert check_config({"snr_db": 15.0}).power_levels_dbm() == [pytest.approx(45.0)]


def test_fim_oracle_check_passes(config):
    result = check_fim_oracle(config)
    assert result.passed
    assert result.measured <= 1e-5


def test_theta_gradient_check_passes(config):
    result = check_theta_gradient(config)
    assert result.passed, result.detail


def test_theta_gradient_check_catches_sign_error(config):
    result = check_theta_gradient(config, builder=flipped_c_theta)
    assert not result.passed


def _min_step(detail):
    return float(re.search(r"min step ([0-9.e+-]+)", detail).group(1))


def test_check_start_is_not_stationary(config):
    scenario = config.scenario(config.n_tx[0], config.power_levels_dbm()[0])
    _, trace = solve(scenario, config.lpm_config(verbose=False), check_start(config, scenario))
    assert trace.iterations > 1
    assert trace.final_objective < trace.initial_objective
    assert trace.step_norms[0] > 0


def test_subproblem_check_passes(config):
    result = check_subproblem(config)
    assert result.passed
    assert "10 snapshots" in result.detail
    assert _min_step(result.detail) > 0


def test_linearized_constraint_check_passes(config):
    result = check_linearized_constraint(config)
    assert result.passed, result.detail
    assert int(result.detail.split()[0]) > 1
    assert _min_step(result.detail) > 0


def test_singular_fim_becomes_diagnostic():
    report = run_checks({"n_tx": [1], "n_rx": 1}, only=["theta-gradient", "subproblem-qp"])
    assert not report.passed
    assert len(report.failures) == 2
    for result in report.results:
        assert math.isnan(result.measured)
        assert "SingularFimError" in result.detail


def test_unknown_check_name():
    with pytest.raises(ConfigError):
        run_checks(only=["no-such-check"])


def test_invalid_override_is_config_error():
    with pytest.raises(ConfigError):
        run_checks({"n_blocks": 0})


def test_progress_is_reported():
    seen = []
    run_checks(only=["fim-oracle"], progress_callback=lambda pct, msg: seen.append(msg))
    assert seen == ["Running fim-oracle"]


@pytest.mark.slow
def test_default_suite_passes():
    report = run_checks()
    assert report.passed, [r.model_dump() for r in report.failures]


@pytest.mark.slow
def test_grid_oracle_certifies_two_antennas(config):
    result = check_grid_oracle(config)
    assert result.passed, result.detail
    for n_rx in GRID_RX_SIZES:
        assert f"n_rx={n_rx}:" in result.detail


@pytest.mark.slow
def test_lpm_matches_multistart_pgd_at_default_scale():
    config = ExperimentConfig(n_tx=[4, 8, 16], trials=20, pgd_restarts=5)
    result = check_pgd_agreement(config)
    assert result.passed, result.detail
    assert result.detail.startswith("60 runs")
