import numpy as np
import pytest

from policy import PolicyArch, PolicyParams
from radio import RadioGeometry, far_field_power
from world import ScenarioConfig


def noiseless_radio(**overrides) -> RadioGeometry:
    return RadioGeometry(**overrides).noiseless()


def oracle_scenario(**overrides) -> ScenarioConfig:
    """Noise-free scenario: POI at the origin, UAV 1240 m east, episode ends once overhead."""
    radio = overrides.pop("radio", noiseless_radio())
    settings = dict(
        poi=(0.0, 0.0),
        uav_start=(1240.0, 0.0),
        radio=radio,
        r_target_dbm=far_field_power(301.0, radio),
    )
    settings.update(overrides)
    return ScenarioConfig(**settings)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_arch():
    return PolicyArch(window=3, hidden=4, dense=5, latent=2)


@pytest.fixture
def tiny_params(tiny_arch):
    vector = np.random.default_rng(7).normal(0.0, 0.5, tiny_arch.size)
    return PolicyParams(tiny_arch, vector)


@pytest.fixture
def short_scenario():
    """POI far from the start and a 20-slot battery, so episodes run to max_slots."""
    return ScenarioConfig(
        poi=(1500.0, 0.0),
        uav_start=(0.0, 0.0),
        battery_s=40.0,
        radio=noiseless_radio(),
    )
