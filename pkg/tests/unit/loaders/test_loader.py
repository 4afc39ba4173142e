import json

import pytest

from toruskam.loaders import ConfigLoaderException, DocumentLoader, ExperimentConfigLoader


def test_load_json_config(tmp_path, arnold_config_data):
    path = tmp_path / "arnold.json"
    path.write_text(json.dumps(arnold_config_data))
    cfg = ExperimentConfigLoader.load(path)
    assert cfg.lattice.n == 1
    assert cfg.kam.K_max == 20
    assert cfg.instance.pert_norm == 1e-3


def test_load_yaml_config_with_interpolation(tmp_path):
    path = tmp_path / "arnold.yaml"
    path.write_text(
        "lattice:\n"
        "  n: 1\n"
        "  e_prime: [[[0.31, 1.1]]]\n"
        "bundle:\n"
        "  mu: [[[0.63, 0.41]]]\n"
        "dioph:\n"
        "  N_scan: 10\n"
        "instance:\n"
        "  Q_max: ${dioph.N_scan}\n"
    )
    cfg = ExperimentConfigLoader.load(path)
    assert cfg.instance.Q_max == 10


def test_missing_file(tmp_path):
    with pytest.raises(ConfigLoaderException, match="not found"):
        DocumentLoader.loads(tmp_path / "missing.json")


def test_malformed_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"lattice": [1, 2')
    with pytest.raises(ConfigLoaderException, match="malformed"):
        DocumentLoader.loads(path)


def test_document_must_be_mapping(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2, 3]")
    with pytest.raises(ConfigLoaderException, match="mapping"):
        DocumentLoader.loads(path)


def test_invalid_section(arnold_config_data, mocker):
    error = mocker.patch("toruskam.loaders.loader.logger.error")
    with pytest.raises(ConfigLoaderException):
        ExperimentConfigLoader.parse({**arnold_config_data, "dioph": {"N_scan": 1}})
    error.assert_called_once()
    with pytest.raises(ConfigLoaderException):
        ExperimentConfigLoader.parse({"bundle": arnold_config_data["bundle"]})
