import json

import pytest

from main import build_parser, main
from src.utils.config import APP_NAME, APP_VERSION

DESK_FLAGS = [
    "--n-tx", "4", "--n-rx", "4", "--n-blocks", "8",
    "--noise-dbm", "30", "--power-dbm", "20",
    "--penalty-scaling", "curvature", "--tolerance-mode", "relative", "--tol", "1e-8",
]


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    import os
    for key in list(os.environ):
        if key.startswith("CRB_LPM_"):
            monkeypatch.delenv(key)


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == f"{APP_NAME} {APP_VERSION}"


@pytest.mark.parametrize('argv', [
    [],
    ["bogus"],
    ["solve", "--snr-db", "10", "--power-dbm", "20"],
    ["solve", "--n-rx", "many"],
    ["sweep", "--solver", "cvx"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "❌" in capsys.readouterr().err


def test_solve_prints_result(capsys):
    assert main(["solve", *DESK_FLAGS, "--quiet"]) == 0
    out = capsys.readouterr().out
    assert "SNR=" in out
    assert "dBm)" in out
    assert "tr(F^-1)" in out
    assert "lambda" in out
    assert "⏳" not in out


def test_solve_pgd_uses_restarts(capsys):
    assert main(["solve", *DESK_FLAGS, "--solver", "pgd", "--pgd-restarts", "2", "--quiet"]) == 0
    assert "best of 3 starts" in capsys.readouterr().out


def test_solve_debug_prints_ratios(capsys):
    assert main(["solve", *DESK_FLAGS, "--max-iters", "20", "--tol", "1e-30", "--debug", "--quiet"]) == 0
    assert "ratios" in capsys.readouterr().out


def test_solve_rejects_lists(capsys):
    assert main(["solve", "--n-tx", "2,4", "--quiet"]) == 1


def test_solve_singular_scenario_exits_numerical(capsys):
    assert main(["solve", "--n-tx", "1", "--n-rx", "1", "--n-blocks", "8", "--quiet"]) == 2
    assert "Singular FIM" in capsys.readouterr().err


def test_sweep_writes_json(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    argv = ["sweep", *DESK_FLAGS, "--n-tx", "2,4", "--trials", "2", "--solver", "both",
            "--format", "json", "--out", str(out)]
    assert main(argv) == 0
    data = json.loads(out.read_text())
    assert len(data) == 8
    assert "💾" in capsys.readouterr().out


def test_config_file_and_environment_precedence(tmp_path, monkeypatch, capsys):
    config = tmp_path / "experiment.env"
    config.write_text("N_TX=2,3\nN_RX=3\nN_BLOCKS=8\nNOISE_DBM=30\nPOWER_DBM=20\nTRIALS=1\nFORMAT=csv\n")
    out = tmp_path / "sweep.csv"
    monkeypatch.setenv("CRB_LPM_TRIALS", "2")
    assert main(["sweep", "--config", str(config), "--out", str(out), "--n-tx", "2", "--quiet"]) == 0
    lines = out.read_text().splitlines()
    # --n-tx beats the file; the environment beats the file's trials
    assert len(lines) == 1 + 2
    assert all(line.split(",")[1] == "2" for line in lines[1:])


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "nope.env")]) == 1


def test_check_failure_exit_code(capsys):
    argv = ["check", "--only", "theta-gradient", "--n-tx", "1", "--n-rx", "1", "--quiet"]
    assert main(argv) == 3
    assert "Check suite failed" in capsys.readouterr().out


def test_check_subset_passes(capsys):
    assert main(["check", "--only", "fim-oracle,subproblem-qp", "--quiet"]) == 0
    assert "All checks passed" in capsys.readouterr().out


def test_parser_exposes_subcommands():
    parser = build_parser()
    args = parser.parse_args(["solve", "--n-tx", "4", "--debug"])
    assert args.command == "solve"
    assert args.n_tx == "4"
    assert args.debug
