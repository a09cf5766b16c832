import csv
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.harness.analysis import (
    is_strictly_decreasing,
    loglog_slope,
    median_by_point,
    per_iteration_ms,
    scaling_slopes,
)
from src.harness.models import ExperimentConfig, SweepRecord
from src.harness.sweep import build_tasks, initial_beamformer, run_sweep
from src.solvers.lpm import initialize
from src.storage.results import emit, load_records
from src.utils.config import RECORD_COLUMNS
from src.utils.errors import ConfigError, InsufficientDataError, ResultWriteError
from src.utils.settings import load_settings, merge_settings, normalize_key

DESK = {
    "n_rx": 4,
    "n_blocks": 8,
    "noise_dbm": 30.0,
    "power_dbm": [20.0],
    "penalty_scaling": "curvature",
    "tolerance_mode": "relative",
    "tol": 1e-8,
    "max_iters": 500,
}


def desk_config(**changes):
    return ExperimentConfig.from_settings({**DESK, **changes})


def record(**changes):
    values = dict(solver="lpm", n_tx=4, power_dbm=20.0, crb_trace=0.125, iterations=12,
                  wall_time_ms=1.5, trial=0, seed=0, status="converged")
    values.update(changes)
    return SweepRecord(**values)


# ############################################################################
# SETTINGS
# ############################################################################

@pytest.mark.parametrize('key, expected', [
    ("N-TX", "n_tx"),
    ("--power-dbm", "power_dbm"),
    ("max_iters", "max_iters"),
    ("tolerance", "tol"),
])
def test_normalize_key(key, expected):
    assert normalize_key(key) == expected


def test_load_settings_from_file_and_environment(tmp_path):
    path = tmp_path / "experiment.env"
    path.write_text("# sweep\nN_TX=4, 8,16\nTHETA_DEG=30\nPOWER_DBM=5,10\n")
    settings = load_settings(str(path), environ={"CRB_LPM_THETA_DEG": "20", "OTHER": "x"})
    assert settings["n_tx"] == ["4", "8", "16"]
    assert settings["theta_deg"] == "20"
    assert settings["power_dbm"] == ["5", "10"]
    assert "other" not in settings


def test_later_source_switches_power_source(tmp_path):
    path = tmp_path / "experiment.env"
    path.write_text("POWER_DBM=5\n")
    settings = load_settings(str(path), environ={"CRB_LPM_SNR_DB": "12"})
    assert "power_dbm" not in settings
    merged = merge_settings(settings, {"power_dbm": "7,9", "snr_db": None})
    assert merged["power_dbm"] == ["7", "9"]
    assert "snr_db" not in merged


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "missing.env"), environ={})


# ############################################################################
# EXPERIMENT CONFIG
# ############################################################################

def test_defaults_follow_experiment_setup():
    config = ExperimentConfig()
    assert config.n_tx == [16]
    assert config.n_rx == 9
    assert config.n_blocks == 1024
    assert config.theta_deg == 45.0
    assert config.trials == 100
    assert config.tolerance_mode == "relative"
    assert config.penalty_scaling == "curvature"
    assert config.rho == 5.0
    # SNR 10 dB at sigma^2 = 0 dBm and |beta| = 1
    assert config.power_levels_dbm() == [pytest.approx(10.0)]
    scenario = config.scenario(16, 10.0)
    assert scenario.power_budget == pytest.approx(1e-2)
    assert scenario.noise_power == pytest.approx(1e-3)
    assert scenario.snr == pytest.approx(10.0)


def test_string_settings_are_coerced():
    config = ExperimentConfig.from_settings({"n_tx": ["4", "8"], "tol": "1e-6", "final_rescale": "false"})
    assert config.n_tx == [4, 8]
    assert config.tolerance == 1e-6
    assert config.final_rescale is False


def test_snr_shifts_with_reflection_gain():
    config = ExperimentConfig(snr_db=10.0, beta_abs=0.1)
    assert config.power_levels_dbm() == [pytest.approx(30.0)]


@pytest.mark.parametrize('settings', [
    {"snr_db": 10.0, "power_dbm": [20.0]},
    {"n_tx": [8, 4]},
    {"n_tx": [4, 4]},
    {"n_tx": []},
    {"power_dbm": [10.0, 5.0]},
    {"trials": 0},
    {"solver": "cvx"},
    {"format": "parquet"},
    {"bogus_key": 1},
])
def test_invalid_settings_raise_config_error(settings):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_settings(settings)


def test_solver_selection():
    assert ExperimentConfig(solver="both").solvers() == ["lpm", "pgd"]
    assert ExperimentConfig(solver="pgd").solvers() == ["pgd"]


def test_lpm_config_carries_settings():
    lpm = desk_config(rho=2.0).lpm_config(verbose=False, keep_iterates=True)
    assert lpm.rho == 2.0
    assert lpm.tolerance == 1e-8
    assert lpm.penalty_scaling == "curvature"
    assert lpm.keep_iterates
    assert not lpm.verbose


# ############################################################################
# SWEEP
# ############################################################################

def test_sweep_cardinality_and_order():
    config = desk_config(n_tx=[2, 3, 4], trials=2, solver="both")
    records = run_sweep(config)
    assert len(records) == 12
    assert [r.sort_key() for r in records] == sorted(r.sort_key() for r in records)
    for solver in ("lpm", "pgd"):
        for n_tx in (2, 3, 4):
            assert sum(1 for r in records if r.solver == solver and r.n_tx == n_tx) == 2
    assert all(r.crb_trace is not None and r.crb_trace > 0 for r in records)
    assert all(r.wall_time_ms >= 0 for r in records)


def test_sweep_is_deterministic():
    config = desk_config(n_tx=[2, 4], trials=3, solver="both", pgd_restarts=1)
    first = [r.crb_trace for r in run_sweep(config)]
    second = [r.crb_trace for r in run_sweep(config)]
    assert first == second


def test_parallel_sweep_matches_serial():
    serial = run_sweep(desk_config(n_tx=[2, 3], trials=2))
    parallel = run_sweep(desk_config(n_tx=[2, 3], trials=2, workers=3))
    assert [r.crb_trace for r in serial] == [r.crb_trace for r in parallel]
    assert [r.sort_key() for r in serial] == [r.sort_key() for r in parallel]


def test_trial_zero_starts_from_steering_vector():
    config = desk_config(n_tx=[4])
    scenario = config.scenario(4, 20.0)
    assert_allclose(initial_beamformer(scenario, 0, 0, 0).weights, initialize(scenario).weights)
    other = initial_beamformer(scenario, 0, 0, 1)
    assert not np.allclose(other.weights, initialize(scenario).weights)
    assert_allclose(other.weights, initial_beamformer(scenario, 0, 0, 1).weights)


def test_build_tasks_covers_power_sweep():
    tasks = build_tasks(desk_config(n_tx=[2, 4], power_dbm=[10.0, 20.0], trials=2))
    assert len(tasks) == 8
    assert {t.power_index for t in tasks} == {0, 1}


def test_solver_failure_is_recorded_in_row():
    config = desk_config(n_tx=[1], n_rx=1, trials=1, solver="both")
    records = run_sweep(config)
    assert [r.status for r in records] == ["singular-fim", "singular-fim"]
    assert all(r.crb_trace is None and r.iterations == 0 for r in records)


def test_sweep_writes_output_before_returning(tmp_path):
    out = tmp_path / "results" / "sweep.csv"
    records = run_sweep(desk_config(n_tx=[2], trials=2, out=str(out)))
    assert out.exists()
    assert [r.crb_trace for r in load_records(str(out))] == [r.crb_trace for r in records]


def test_progress_callback_reaches_completion():
    seen = []
    run_sweep(desk_config(n_tx=[2], trials=2), progress_callback=lambda pct, msg: seen.append(pct))
    assert seen[-1] == 100
    assert seen == sorted(seen)


@pytest.mark.slow
def test_crb_falls_with_more_transmit_antennas():
    sizes = [4, 8, 16, 32, 64]
    medians = median_by_point(run_sweep(ExperimentConfig(n_tx=sizes, trials=3)))
    assert is_strictly_decreasing([medians[("lpm", n, 10.0)] for n in sizes])


@pytest.mark.slow
def test_crb_falls_with_more_transmit_power():
    levels = [5.0, 10.0, 15.0, 20.0, 25.0]
    medians = median_by_point(run_sweep(ExperimentConfig(n_tx=[16], power_dbm=levels, trials=3)))
    assert is_strictly_decreasing([medians[("lpm", 16, p)] for p in levels])


@pytest.mark.slow
def test_per_iteration_time_grows_at_most_cubically():
    config = ExperimentConfig(n_tx=[16, 32, 64, 128], trials=3, max_iters=10, tol=1e-30)
    records = run_sweep(config)
    assert all(r.iterations > 1 for r in records)
    assert scaling_slopes(records)[("lpm", 10.0)] <= 3.5


# ############################################################################
# EMIT
# ############################################################################

def test_single_record_csv_has_two_lines(tmp_path):
    path = tmp_path / "one.csv"
    emit([record()], "csv", str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "solver,n_tx,power_dbm,crb_trace,iterations,wall_time_ms,trial,seed,status"
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert all(len(row) == 9 for row in rows)


def test_failed_record_has_empty_crb(tmp_path):
    path = tmp_path / "failed.csv"
    emit([record(crb_trace=None, status="singular-fim")], "csv", str(path))
    assert path.read_text().splitlines()[1].split(",")[3] == ""
    assert load_records(str(path))[0].crb_trace is None


def test_json_is_flat_array_and_round_trips(tmp_path):
    path = tmp_path / "records.json"
    records = [record(), record(trial=1, crb_trace=0.1 + 1e-17), record(crb_trace=None, status="numerical-failure")]
    emit(records, "json", str(path))
    data = json.loads(path.read_text())
    assert isinstance(data, list)
    assert list(data[0]) == RECORD_COLUMNS
    assert load_records(str(path)) == records


def test_xlsx_round_trips(tmp_path):
    path = tmp_path / "records.xlsx"
    records = [record(), record(solver="pgd", trial=3)]
    emit(records, "xlsx", str(path))
    assert load_records(str(path)) == records


def test_emit_rejects_empty_and_unwritable(tmp_path):
    with pytest.raises(ResultWriteError):
        emit([], "csv", str(tmp_path / "empty.csv"))
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(ResultWriteError) as info:
        emit([record()], "csv", str(blocker / "out.csv"))
    assert "blocker" in str(info.value)
    with pytest.raises(ConfigError):
        emit([record()], "parquet", str(tmp_path / "x.parquet"))


def test_record_validation():
    with pytest.raises(ValueError):
        record(crb_trace=0.0)
    with pytest.raises(ValueError):
        record(wall_time_ms=-1.0)


# ############################################################################
# ANALYSIS
# ############################################################################

def test_loglog_slope_recovers_power_law():
    sizes = [16, 32, 64, 128]
    assert loglog_slope(sizes, [3e-6 * n ** 3 for n in sizes]) == pytest.approx(3.0)


def test_loglog_slope_needs_two_sizes():
    with pytest.raises(InsufficientDataError):
        loglog_slope([16, 16], [1.0, 2.0])
    with pytest.raises(ValueError):
        loglog_slope([16, 32], [1.0, 0.0])


def test_medians_and_timing_per_point():
    records = [
        record(n_tx=4, crb_trace=1.0, wall_time_ms=10.0, iterations=10),
        record(n_tx=4, crb_trace=3.0, wall_time_ms=30.0, iterations=10, trial=1),
        record(n_tx=8, crb_trace=0.5, wall_time_ms=80.0, iterations=10),
        record(n_tx=8, crb_trace=None, status="numerical-failure", trial=1),
    ]
    assert median_by_point(records) == {("lpm", 4, 20.0): 2.0, ("lpm", 8, 20.0): 0.5}
    assert per_iteration_ms(records) == {("lpm", 4, 20.0): 2.0, ("lpm", 8, 20.0): 8.0}
    slope = scaling_slopes(records)[("lpm", 20.0)]
    assert slope == pytest.approx(math.log(4.0) / math.log(2.0))


def test_strictly_decreasing():
    assert is_strictly_decreasing([3.0, 2.0, 1.0])
    assert not is_strictly_decreasing([3.0, 3.0, 1.0])
