from pathlib import Path

import pytest

from toruskam.cli.config import ExperimentConfig
from toruskam.cli.instances import gen_instance
from toruskam.cohomology import ResonantDivisor
from toruskam.kam import KamParams, run, verify_conjugacy
from toruskam.loaders import ExperimentConfigLoader

CONFIGS = Path(__file__).parents[2] / "configs"


@pytest.fixture
def torus_2d_config(arnold_config_data):
    return ExperimentConfig.model_validate(
        {
            **arnold_config_data,
            "lattice": {"n": 2, "e_prime": [[[0.23, 1.2], [0.17, 0.05]], [[0.07, 0.11], [0.41, 0.9]]]},
            "bundle": {"mu": [[[0.71, 0.2], [0.37, -0.5]], [[0.52, -0.33], [0.8, 0.15]]]},
            "instance": {"seed": 5, "pert_norm": 1e-3, "Q_max": 8, "P_max": 6},
            "kam": {"delta0": 0.01, "eps0": 0.1, "r0": 0.5, "K_max": 10},
        }
    )


def check_linearization(cfg: ExperimentConfig):
    instance = gen_instance(cfg)
    sys = instance.system
    Phi, report = run(sys, cfg.kam)

    assert report.converged
    assert report.conjugacy_defect <= 1e-9
    assert verify_conjugacy(Phi, sys, report.final_domain) <= 1e-9
    assert (Phi - instance.phi_true).max_abs() <= 1e-7
    for row in report.rows:
        assert row.v_min >= 2 ** (row.k + 1) + 1
        assert row.q_k >= 2**row.k
    return Phi, report


def test_linearize_one_dimensional(arnold_config):
    _, report = check_linearization(arnold_config)
    assert 1 <= report.steps <= 4
    assert report.dilation < 1
    assert report.sampled_defect < 1e-9


def test_linearize_two_dimensional(torus_2d_config):
    _, report = check_linearization(torus_2d_config)
    assert 1 <= report.steps <= 4


def test_linearize_without_dilation(arnold_config):
    params = KamParams.model_validate({**arnold_config.kam.model_dump(), "dilate": False})
    instance = gen_instance(arnold_config)
    Phi, report = run(instance.system, params)
    assert report.converged
    assert report.dilation == 1.0
    assert not report.within_schedule
    assert (Phi - instance.phi_true).max_abs() <= 1e-7


def test_linear_input_needs_no_steps(arnold_config_data):
    cfg = ExperimentConfig.model_validate({**arnold_config_data, "instance": {"pert_norm": 0.0}})
    instance = gen_instance(cfg)
    Phi, report = run(instance.system, cfg.kam)
    assert report.converged
    assert report.steps == 0
    assert Phi == instance.phi_true


def test_linearize_shipped_two_dimensional_config():
    cfg = ExperimentConfigLoader.load(CONFIGS / "torus_2d.json")
    assert (cfg.lattice.n, cfg.instance.Q_max, cfg.instance.P_max) == (2, 16, 12)
    _, report = check_linearization(cfg)
    assert 1 <= report.steps <= 4
    assert report.rows[-1].v_min > cfg.instance.Q_max


def test_planted_resonance_stops_the_iteration(arnold_config_data):
    planted = {"mode": "planted-resonance", "planted_P": [1], "Q_max": 8, "P_max": 8}
    cfg = ExperimentConfig.model_validate({**arnold_config_data, "instance": planted})
    instance = gen_instance(cfg)
    params = KamParams.model_validate({**cfg.kam.model_dump(), "D_fit": 1.0})
    with pytest.raises(ResonantDivisor) as exc_info:
        run(instance.system, params)
    assert exc_info.value.P == [1]
    assert exc_info.value.Q == [2]
    assert exc_info.value.target == "v0"
