import numpy as np
import pytest

from pymjnn import Designer, Settings
from pymjnn.errors import RowSumViolation
from pymjnn.models.plant import MjnnModel


@pytest.fixture()
def designer() -> Designer:
    return Designer(seed=7, ccl_mu=1e-2)


def test_designer_is_settings(designer):
    assert isinstance(designer, Settings)
    assert designer.seed == 7


def test_designer_from_env(monkeypatch):
    monkeypatch.setenv("PYMJNN_CCL_MAX_ITERS", "5")

    assert Designer().ccl_max_iters == 5


def test_ccl_config(designer):
    config = designer.ccl_config(2.0)

    assert config.gamma == 2.0
    assert config.mu == 1e-2
    assert config.max_iters == designer.ccl_max_iters
    assert config.eps == designer.eps
    assert config.seed == 7


@pytest.mark.parametrize("literal", [False, True])
def test_disturbance(literal):
    disturbance = Designer(literal_exponent=literal).disturbance()

    assert disturbance.literal_exponent is literal
    assert disturbance.envelope(0) == pytest.approx(1.0 if not literal else np.exp(-1))


def test_check_and_validate(designer, toy_model, scalar_doc):
    assert designer.check(toy_model).valid
    assert designer.validate(toy_model) is toy_model

    doc = scalar_doc()
    doc["transitions"] = [[0.5]]
    broken = MjnnModel.model_validate(doc)

    assert not designer.check(broken).valid
    with pytest.raises(RowSumViolation):
        designer.validate(broken)


def test_verify_and_sweep(designer, toy_model, zero_gains):
    gains = zero_gains(toy_model)

    assert designer.verify(toy_model, gains, 1.0).feasible
    result = designer.sweep(toy_model, 0.1, 10.0, steps=3, gains=gains)
    assert len(result.probes) == 4
    assert result.verification is not None


def test_synthesize(designer, toy_model, tmp_path):
    log = tmp_path / "solves.csv"

    result = designer.synthesize(toy_model, 1.0, log_path=log)

    assert result.converged
    assert log.is_file()


def test_simulate_uses_seed(toy_model, zero_gains):
    gains = zero_gains(toy_model)

    first = Designer(seed=1).simulate(toy_model, gains, horizon=20)
    second = Designer(seed=1).simulate(toy_model, gains, horizon=20)

    assert first.delays == second.delays
    assert np.array_equal(first.x_bar, second.x_bar)
    assert first.energy > 0


def test_ensemble_and_decay(designer, toy_model, zero_gains):
    gains = zero_gains(toy_model)

    metrics = designer.ensemble(toy_model, gains, runs=2, horizon=30)
    report = designer.decay(toy_model, gains, runs=2, horizon=30)

    assert metrics.runs == 2
    assert metrics.ratio_status == "ok"
    assert report.status == "Decayed"
