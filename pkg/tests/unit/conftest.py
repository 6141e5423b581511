from collections.abc import Callable
from typing import Any

import numpy as np
import pytest

from pymjnn import Settings
from pymjnn.io import example_path, load_gains, load_model
from pymjnn.models.gains import EstimatorGains
from pymjnn.models.plant import MjnnModel


@pytest.fixture()
def scalar_doc() -> Callable[..., dict[str, Any]]:
    """Scalar single-mode plant `x+ = a x + d w`, `y = e x`, `z = x`."""

    def _scalar_doc(a: float = 0.5, d: float = 0.5, e: float = 0.0) -> dict[str, Any]:
        return {
            "name": "scalar",
            "modes": [
                {
                    "A": [[a]],
                    "B": [[0.0]],
                    "C": [[0.0]],
                    "D1": [[d]],
                    "D2": [[0.0]],
                    "E": [[e]],
                    "M": [[1.0]],
                },
            ],
            "transitions": [[1.0]],
            "sector": {"F1": [[0.0]], "F2": [[0.0]]},
            "delay": {"min": 1, "max": 1},
            "activation": {"type": "tanh", "scales": [0.0]},
        }

    return _scalar_doc


@pytest.fixture()
def scalar_model(scalar_doc) -> Callable[..., MjnnModel]:
    def _scalar_model(**kwargs: float) -> MjnnModel:
        return MjnnModel.model_validate(scalar_doc(**kwargs))

    return _scalar_model


@pytest.fixture()
def toy_model(scalar_model) -> MjnnModel:
    return scalar_model()


@pytest.fixture()
def zero_gains() -> Callable[[MjnnModel], EstimatorGains]:
    def _zero_gains(model: MjnnModel) -> EstimatorGains:
        return EstimatorGains.zeros(model.N, model.n_nodes, model.nb, model.m)

    return _zero_gains


@pytest.fixture()
def two_node_model() -> MjnnModel:
    """Two-state, two-node, two-mode plant with a tanh activation."""
    rng = np.random.default_rng(3)

    def mode() -> dict[str, Any]:
        return {
            "A": (0.3 * rng.standard_normal((2, 2))).tolist(),
            "B": (0.2 * rng.standard_normal((2, 2))).tolist(),
            "C": (0.1 * rng.standard_normal((2, 2))).tolist(),
            "D1": (0.1 * rng.standard_normal((2, 1))).tolist(),
            "D2": (0.1 * rng.standard_normal((2, 1))).tolist(),
            "E": rng.standard_normal((2, 2)).tolist(),
            "M": np.eye(2).tolist(),
        }

    return MjnnModel.model_validate(
        {
            "modes": [mode(), mode()],
            "transitions": [[0.7, 0.3], [0.4, 0.6]],
            "sector": {
                "F1": np.zeros((2, 2)).tolist(),
                "F2": np.diag([0.5, 0.4]).tolist(),
            },
            "delay": {"min": 1, "max": 3},
            "activation": {"type": "tanh", "scales": [0.5, 0.4]},
            "protocol": {"partition": [1, 1]},
        },
    )


@pytest.fixture()
def network_model() -> MjnnModel:
    return load_model(example_path())


@pytest.fixture()
def network_gains() -> EstimatorGains:
    return load_gains(example_path("four_mode_network_gains.json"))


@pytest.fixture()
def settings() -> Settings:
    return Settings()
