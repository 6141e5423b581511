import pytest

from pymjnn import Designer
from pymjnn.io import example_path, load_gains, load_model
from pymjnn.models.gains import EstimatorGains
from pymjnn.models.plant import MjnnModel


@pytest.fixture(scope="session")
def designer() -> Designer:
    return Designer(seed=2024)


@pytest.fixture(scope="session")
def network_model() -> MjnnModel:
    return load_model(example_path())


@pytest.fixture(scope="session")
def reference_gains() -> EstimatorGains:
    return load_gains(example_path("four_mode_network_gains.json"))


@pytest.fixture(scope="session")
def results() -> dict:
    """Artifacts handed from one end-to-end step to the next."""
    return {}
