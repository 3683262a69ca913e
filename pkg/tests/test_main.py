import json

import pytest

from src import main as cli
from src.config import SCENARIO_NAMES
from src.solvers import SolverError

SMALL_FULL_DOMAIN = """
scenario = "full-domain-reference"
seed = 3

[geometry]
length = 1.0
nx = 4
ny = 5
dx = 0.05
dy = 0.05
patches = 5

[material]
period_x = 0.1
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_FULL_DOMAIN)
    return path


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SCENARIO_NAMES:
        assert name in out


def test_validate(small_config, tmp_path):
    assert cli.main(["validate", str(small_config)]) == 0
    assert cli.main(["validate", str(small_config), "--override", "geometry.nx=2"]) == cli.EXIT_CONFIG
    assert cli.main(["validate", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG


def test_run_writes_results(small_config, tmp_path, capsys):
    out = tmp_path / "results"
    code = cli.main(["run", str(small_config), "--out", str(out), "--seed", "4", "--no-plots"])
    assert code == 0
    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["scenario"] == "full-domain-reference"
    assert metadata["config"]["seed"] == 4
    assert (out / "reference.csv").exists()
    assert not list(out.glob("*.svg")) and not list(out.glob("*.html"))
    assert "max_deflection" in capsys.readouterr().out


def test_solver_failures_map_to_their_exit_code(small_config, monkeypatch):
    def fail(cfg):
        raise SolverError("no convergence")

    monkeypatch.setattr(cli, "run_scenario", fail)
    assert cli.main(["run", str(small_config), "--no-plots"]) == cli.EXIT_SOLVER


def test_bad_forcing_expression_is_a_config_failure(small_config):
    code = cli.main(["run", str(small_config), "--no-plots", "--override", "forcing.fy=exp(1000*x)"])
    assert code == cli.EXIT_CONFIG
