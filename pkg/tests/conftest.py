import numpy as np
import pytest

from tests.utils import random_series
from toruskam.cli.config import ExperimentConfig
from toruskam.lattice import DomainSpec, Lattice
from toruskam.series import DeckSystem, LinearDeck


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def lattice_1d():
    return Lattice(n=1, e_prime=[[0.31 + 1.1j]])


@pytest.fixture
def lattice_2d():
    return Lattice(n=2, e_prime=[[0.23 + 1.2j, 0.17 + 0.05j], [0.07 + 0.11j, 0.41 + 0.9j]])


@pytest.fixture
def deck_1d(lattice_1d):
    return LinearDeck.from_lattice(lattice_1d, [[0.63 + 0.41j]])


@pytest.fixture
def deck_2d(lattice_2d):
    return LinearDeck.from_lattice(lattice_2d, [[0.71 + 0.2j, 0.37 - 0.5j], [0.52 - 0.33j, 0.8 + 0.15j]])


@pytest.fixture
def domain():
    return DomainSpec(eps=0.1, r=0.5)


@pytest.fixture
def make_series(rng):
    def _make(n, d, m, **kwargs):
        return random_series(rng, n, d, m, **kwargs)

    return _make


@pytest.fixture
def linear_system_1d(lattice_1d, deck_1d):
    return DeckSystem.linear_system(lattice_1d, deck_1d, 8, 6)


@pytest.fixture
def arnold_config_data():
    """n = d = 1 experiment with a generic vertical multiplier."""
    return {
        "lattice": {"n": 1, "e_prime": [[[0.31, 1.1]]]},
        "bundle": {"mu": [[[0.63, 0.41]]]},
        "instance": {"mode": "conjugated", "seed": 42, "pert_norm": 1e-3, "Q_max": 16, "P_max": 12},
        "dioph": {"N_scan": 12, "tau_exp": 2.0},
        "kam": {"delta0": 0.02, "eps0": 0.1, "r0": 0.5, "K_max": 20},
        "output": {},
    }


@pytest.fixture
def arnold_config(arnold_config_data):
    return ExperimentConfig.model_validate(arnold_config_data)
