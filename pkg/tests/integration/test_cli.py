import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from toruskam.cli.main import EXIT_CONFIG, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_RESONANCE, app

runner = CliRunner()


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write


def invoke(*args):
    return runner.invoke(app, [str(arg) for arg in args])


def read(path):
    return json.loads(path.read_text())


def test_linearize(tmp_path, write_config, arnold_config_data):
    csv_path = tmp_path / "rows.csv"
    config = write_config({**arnold_config_data, "output": {"csv_path": str(csv_path)}})
    out = tmp_path / "report.json"
    result = invoke("linearize", "--config", config, "--out", out, "--quiet")
    assert result.exit_code == EXIT_OK
    document = read(out)
    assert document["status"] == "success"
    assert document["metadata"]["command"] == "linearize"
    linearized = document["result"]
    assert linearized["report"]["converged"]
    assert linearized["phi_true_error"] <= 1e-7
    assert linearized["fit"]["D_fit"] > 0
    assert linearized["instance"]["n"] == 1
    assert csv_path.read_text().splitlines()[0] == "k,q_k,delta_k,eps_k,r_k,residual_bound,phi_norm,dropped_mass"


def test_linearize_is_reproducible(tmp_path, write_config, arnold_config_data):
    config = write_config(arnold_config_data)
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    assert invoke("linearize", "-c", config, "-o", first, "-q").exit_code == EXIT_OK
    assert invoke("linearize", "-c", config, "-o", second, "-q").exit_code == EXIT_OK
    assert json.dumps(read(first)["result"]) == json.dumps(read(second)["result"])
    assert read(first)["metadata"]["run_id"] != read(second)["metadata"]["run_id"]


def test_seed_option_changes_instance(tmp_path, write_config, arnold_config_data):
    config = write_config(arnold_config_data)
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    invoke("gen-instance", "-c", config, "-o", first)
    invoke("gen-instance", "-c", config, "-o", second, "--seed", 11)
    assert read(first)["result"]["system"] != read(second)["result"]["system"]


def test_planted_resonance_is_reported(tmp_path, write_config, arnold_config_data):
    data = {**arnold_config_data, "instance": {"mode": "planted-resonance", "planted_P": [1], "Q_max": 8, "P_max": 8}}
    config = write_config(data)
    out = tmp_path / "report.json"
    result = invoke("linearize", "-c", config, "-o", out)
    assert result.exit_code == EXIT_RESONANCE
    error = read(out)["error"]
    assert error["error_type"] == "ResonantInput"
    assert any(w["P"] == [1] and w["Q"] == [2] and w["kind"] == "v" for w in error["witnesses"])

    scan = tmp_path / "scan.json"
    assert invoke("check-diophantine", "-c", config, "-o", scan).exit_code == EXIT_OK
    verdict = read(scan)["result"]
    assert verdict["ok"] is False
    assert verdict["D_fit"] == 0.0
    assert verdict["witnesses"]


def test_shipped_planted_config_exits_with_resonance(tmp_path):
    config = Path(__file__).parents[2] / "configs" / "planted.json"
    out = tmp_path / "planted.json"
    result = invoke("linearize", "-c", config, "-o", out, "-q")
    assert result.exit_code == EXIT_RESONANCE
    document = read(out)
    assert document["status"] == "failure"
    assert document["error"]["error_type"] == "ResonantInput"
    assert any(w["P"] == [1] and w["Q"] == [2] and w["value"] <= 1e-10 for w in document["error"]["witnesses"])


def test_check_diophantine(tmp_path, write_config, arnold_config_data):
    out = tmp_path / "scan.json"
    result = invoke("check-diophantine", "-c", write_config(arnold_config_data), "-o", out)
    assert result.exit_code == EXIT_OK
    verdict = read(out)["result"]
    assert verdict["ok"] is True
    assert verdict["D_fit"] > 0
    assert verdict["worst"]["value"] > 0
    assert verdict["splitting_ok"] is True


@pytest.mark.parametrize(
    "contents",
    ['{"lattice": ', '{"bundle": {"mu": [[[0.5, 0.0]]]}}', "[1, 2]"],
)
def test_bad_config_exits_with_config_error(tmp_path, contents):
    config = tmp_path / "config.json"
    config.write_text(contents)
    out = tmp_path / "report.json"
    result = invoke("linearize", "-c", config, "-o", out)
    assert result.exit_code == EXIT_CONFIG
    document = read(out)
    assert document["status"] == "failure"
    assert document["error"]["error_type"] == "ConfigLoaderException"


def test_missing_config(tmp_path):
    out = tmp_path / "report.json"
    assert invoke("linearize", "-c", tmp_path / "missing.json", "-o", out).exit_code == EXIT_CONFIG


def test_invalid_kam_params(tmp_path, write_config, arnold_config_data):
    out = tmp_path / "report.json"
    config = write_config({**arnold_config_data, "kam": {"delta0": 0.2}})
    assert invoke("linearize", "-c", config, "-o", out).exit_code == EXIT_CONFIG
    assert read(out)["error"]["error_type"] == "InvalidParams"


def test_no_convergence(tmp_path, write_config, arnold_config_data):
    csv_path = tmp_path / "rows.csv"
    data = {
        **arnold_config_data,
        "kam": {**arnold_config_data["kam"], "K_max": 1},
        "output": {"csv_path": str(csv_path)},
    }
    out = tmp_path / "report.json"
    assert invoke("linearize", "-c", write_config(data), "-o", out).exit_code == EXIT_NO_CONVERGENCE
    error = read(out)["error"]
    assert error["error_type"] == "NoConvergence"
    assert len(error["rows"]) == 1
    assert len(csv_path.read_text().splitlines()) == 2


def test_gen_instance_feeds_custom_file(tmp_path, write_config, arnold_config_data):
    instance = tmp_path / "instance.json"
    assert invoke("gen-instance", "-c", write_config(arnold_config_data), "-o", instance).exit_code == EXIT_OK
    assert read(instance)["result"]["summary"]["v_min"] == 2

    data = {**arnold_config_data, "instance": {"mode": "custom-file", "path": str(instance)}}
    out = tmp_path / "report.json"
    assert invoke("linearize", "-c", write_config(data, "custom.json"), "-o", out).exit_code == EXIT_OK
    assert read(out)["result"]["phi_true_error"] <= 1e-7


def test_report_command(tmp_path, write_config, arnold_config_data):
    linearized = tmp_path / "report.json"
    invoke("linearize", "-c", write_config(arnold_config_data), "-o", linearized, "-q")
    csv_path, out = tmp_path / "steps.csv", tmp_path / "summary.json"
    assert invoke("report", "-c", linearized, "-o", out, "--csv", csv_path).exit_code == EXIT_OK
    summary = read(out)["result"]["summary"]
    assert summary["converged"] is True
    assert summary["steps"] == len(read(linearized)["result"]["report"]["rows"])
    assert len(csv_path.read_text().splitlines()) == summary["steps"] + 1


def test_trivialize(tmp_path, write_config, arnold_config_data):
    factor = {"lattice": arnold_config_data["lattice"], "d": 1, "rho": [[[[2.0, 0.0]]], [[[0.5, 0.25]]]]}
    out = tmp_path / "trivial.json"
    assert invoke("trivialize", "-c", write_config(factor, "factor.json"), "-o", out).exit_code == EXIT_OK
    result = read(out)["result"]
    assert result["horizontal_defect"] <= 1e-9
    assert result["linear_deck"] is not None
    assert len(result["flow_logs"]) == 1
