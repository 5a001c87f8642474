#!/usr/bin/env python3
"""Tests for the command line entry point"""

import configparser
import json
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pytest

import main as cli
from src.errors import ConfigError, StageError


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    cli.main(["simulate", "--d", "4", "--n", "3000", "--seed", "3", "--output-dir", str(out)])
    return out


def test_simulate_writes_sample_and_truth(simulated):
    for name in ("sample.csv", "model.json", "true_reachability.json", "true_minimum_dag.dot"):
        assert (simulated / name).exists()
    header = (simulated / "sample.csv").read_text().splitlines()[0]
    assert header == "X1,X2,X3,X4"
    model = json.loads((simulated / "model.json").read_text())
    assert model["seed"] == 3 and model["alpha"] == 2


def test_compare_identical_dags(simulated, tmp_path, capsys):
    dag = str(simulated / "true_reachability.json")
    cli.main(["compare", "--dags", dag, dag, "--output-dir", str(tmp_path)])
    result = json.loads((tmp_path / "compare.json").read_text())
    assert result["shd"] == 0 and result["nshd"] == 0.0
    assert "SHD = 0" in capsys.readouterr().out


def test_order_estimate_and_dag(simulated, tmp_path):
    sample = str(simulated / "sample.csv")
    cli.main(["order", "--input", sample, "--k", "200", "--output-dir", str(tmp_path)])
    order = json.loads((tmp_path / "order.json").read_text())
    assert sorted(order["order"]) == ["X1", "X2", "X3", "X4"]

    cli.main(["estimate", "--input", sample, "--order", str(tmp_path / "order.json"),
              "--k", "90", "--output-dir", str(tmp_path)])
    matrix = tmp_path / "A_r90.json"
    assert json.loads(matrix.read_text())["k"] == 90

    cli.main(["dag", "--matrix", str(matrix), "--delta", "0", "0.1", "--output-dir", str(tmp_path)])
    assert (tmp_path / "dag_A_r90_delta0.json").exists()
    assert (tmp_path / "dag_A_r90_delta0.1.dot").exists()


def test_pipeline_and_stability(simulated, tmp_path):
    out = tmp_path / "run"
    cli.main(["pipeline", "--input", str(simulated / "sample.csv"), "--k", "200",
              "--delta", "0", "0.05", "--output-dir", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert report["d"] == 4 and len(report["dags"]) == 50

    members = [str(out / "dags" / f"dag_delta0.05_r{r}.json") for r in (90, 92, 94, 96, 98)]
    cli.main(["stability", "--dags", *members, "--output-dir", str(tmp_path / "stab")])
    assert (tmp_path / "stab" / "stability.csv").exists()
    centroid = json.loads((tmp_path / "stab" / "centroid.json").read_text())
    assert centroid["delta"] == 0.05
    assert centroid["k"] in (90, 92, 94, 96, 98)

    mixed = [str(out / "dags" / "dag_delta0_r90.json"), str(out / "dags" / "dag_delta0.05_r92.json")]
    with pytest.raises(ConfigError):
        cli.main(["stability", "--dags", *mixed, "--output-dir", str(tmp_path / "mixed")])


def test_config_file_and_errors(simulated, tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"k_order": 150, "delta_grid": [0.0]}))
    args = cli.parse_arguments(["order", "--config", str(config), "--a", "1.5"])
    cfg = cli.build_config(args)
    assert cfg.k_order == 150 and cfg.a == 1.5 and cfg.delta_grid == [0.0]

    with pytest.raises(ConfigError):
        cli.main(["order", "--input", str(simulated / "sample.csv"), "--k", "5000",
                  "--output-dir", str(tmp_path)])
    with pytest.raises(StageError):
        cli.main(["pipeline", "--input", str(tmp_path / "missing.csv"),
                  "--output-dir", str(tmp_path / "failed")])
    assert (tmp_path / "failed" / "FAILED").exists()


def test_validate_command(tmp_path):
    cli.main(["validate", "--dims", "3", "--models", "2", "--mc-n", "0",
              "--output-dir", str(tmp_path)])
    assert json.loads((tmp_path / "validation.json").read_text())["passed"] is True



def test_slow_checks_are_opt_in():
    ini = configparser.ConfigParser()
    ini.read(Path(__file__).parent.parent / "pytest.ini")
    assert '-m "not slow"' in ini["pytest"]["addopts"]
    assert "slow:" in ini["pytest"]["markers"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
