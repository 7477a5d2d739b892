import numpy as np
import pytest

from lqlc.simulate import GeometryScenario, scenario_epoch


@pytest.fixture(scope="session")
def scenario():
    return GeometryScenario.default()


@pytest.fixture(scope="session")
def dense_scenario():
    return GeometryScenario.bundled("dense")


@pytest.fixture
def clean_epoch(scenario):
    return scenario_epoch(scenario, scales=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
