import numpy as np
import pytest

from pymjnn.core import (
    activation_apply,
    check_activation_sector,
    check_model,
    complete_uniformly,
    completion_from_spec,
    incremental_sector_residual,
    known_index_sets,
    mask_transitions,
    sample_delay,
    sample_next_mode,
    sector_residual,
    validate_model,
)
from pymjnn.errors import (
    CompletionMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    ModelValidationError,
    ProtocolMismatch,
    RequiresFullTP,
    RowSumViolation,
)
from pymjnn.models.plant import (
    DelaySpec,
    MjnnModel,
    SectorBounds,
    TransitionCompletion,
    TransitionSpec,
)


def test_check_model_valid(toy_model, network_model):
    for model in (toy_model, network_model):
        report = check_model(model)
        assert report.valid
        assert report.warnings == []
        assert validate_model(model) is model


@pytest.mark.parametrize(
    ("patch", "kind"),
    [
        ({"transitions": [[0.9]]}, "RowSumViolation"),
        ({"transitions": [[1.5]]}, "ProbabilityRangeError"),
        ({"delay": {"min": 2, "max": 1}}, "DelayOrderViolation"),
        ({"delay": {"min": 0, "max": 1}}, "DelayOrderViolation"),
        ({"protocol": {"partition": [2]}}, "ProtocolMismatch"),
        (
            {"protocol": {"partition": [1], "weights": [[[1.0]], [[1.0]]]}},
            "ProtocolMismatch",
        ),
        ({"activation": {"type": "tanh", "scales": [1.0, 1.0]}}, "DimensionMismatch"),
        ({"sector": {"F1": [[0.0, 0.0]], "F2": [[0.0]]}}, "DimensionMismatch"),
    ],
)
def test_check_model_violation(scalar_doc, patch, kind):
    model = MjnnModel.model_validate(scalar_doc() | patch)

    report = check_model(model)

    assert not report.valid
    assert [v.kind for v in report.violations] == [kind]


def test_check_model_mode_dimensions(scalar_doc):
    doc = scalar_doc()
    doc["modes"][0]["D2"] = [[0.0, 0.0]]
    model = MjnnModel.model_validate(doc)

    report = check_model(model)

    assert [v.kind for v in report.violations] == ["DimensionMismatch"]
    assert report.violations[0].location == "mode 1"
    assert "D2" in report.violations[0].message


def test_check_model_collects_every_violation(scalar_doc):
    doc = scalar_doc() | {"transitions": [[0.9]], "delay": {"min": 2, "max": 1}}
    model = MjnnModel.model_validate(doc)

    with pytest.raises(RowSumViolation) as exc_info:
        validate_model(model)

    assert isinstance(exc_info.value, ModelValidationError)
    assert [v.kind for v in exc_info.value.violations] == [
        "RowSumViolation",
        "DelayOrderViolation",
    ]


def test_validate_model_error_class(scalar_doc):
    model = MjnnModel.model_validate(scalar_doc() | {"protocol": {"partition": [3]}})

    with pytest.raises(ProtocolMismatch, match="covers 3 outputs"):
        validate_model(model)


def test_completion_mismatch(network_model):
    model = network_model.model_copy(
        update={"completion": TransitionCompletion(pi=np.full((4, 4), 0.25))},
    )

    with pytest.raises(CompletionMismatch) as exc_info:
        validate_model(model)

    locations = {v.location for v in exc_info.value.violations}
    assert "completion[1,1]" in locations
    assert "completion[2,4]" in locations


def test_known_index_sets(network_model):
    spec = network_model.transitions

    sets = known_index_sets(spec, 0)
    assert sets.known == (0, 2)
    assert sets.unknown == (1, 3)
    assert sets.pi_known == pytest.approx(0.4)

    sets = known_index_sets(spec, 1)
    assert sets.known == (3,)
    assert sets.unknown == (0, 1, 2)

    with pytest.raises(IndexOutOfRange):
        known_index_sets(spec, 4)


@pytest.mark.parametrize(
    ("u", "expected"),
    [(0.0, 0), (0.29, 0), (0.3, 1), (0.55, 2), (0.6, 3), (0.9999, 3)],
)
def test_sample_next_mode(u, expected):
    rows = [[0.3, 0.2, 0.1, 0.4], [0.25, 0.25, 0.25, 0.25]]
    completion = TransitionCompletion(pi=rows * 2)

    assert sample_next_mode(completion, 0, u) == expected


@pytest.mark.parametrize(
    ("row", "u"),
    [
        ([0.5, 0.5 - 1e-13, 0.0], 1.0 - 5e-14),
        ([0.1] * 10 + [0.0], float(np.nextafter(1.0, 0.0))),
        ([0.2, 0.8, 0.0, 0.0], 0.999999),
    ],
)
def test_sample_next_mode_skips_trailing_zero(row, u):
    pi = np.tile(row, (len(row), 1))
    completion = TransitionCompletion(pi=pi)
    last = int(np.flatnonzero(np.asarray(row) > 0)[-1])

    assert sample_next_mode(completion, 0, u) == last
    draws = np.random.default_rng(2).random(10_000)
    assert max(sample_next_mode(completion, 0, float(v)) for v in draws) <= last


@pytest.mark.parametrize("u", [-0.1, 1.0, 1.5])
def test_sample_next_mode_rejects_draw(u):
    completion = TransitionCompletion(pi=[[1.0]])

    with pytest.raises(ValueError, match="Uniform draw"):
        sample_next_mode(completion, 0, u)


@pytest.mark.parametrize(
    ("u", "expected"),
    [(0.0, 1), (0.33, 1), (0.34, 2), (0.66, 2), (0.67, 3), (0.999, 3)],
)
def test_sample_delay(u, expected):
    assert sample_delay(DelaySpec(min=1, max=3), u) == expected


def test_complete_uniformly(network_model):
    completion = complete_uniformly(network_model.transitions)

    assert np.allclose(completion.pi.sum(axis=1), 1.0)
    assert completion.pi[0].tolist() == pytest.approx([0.3, 0.3, 0.1, 0.3])
    assert completion.pi[1].tolist() == pytest.approx([0.8 / 3, 0.8 / 3, 0.8 / 3, 0.2])


def test_completion_from_spec():
    spec = TransitionSpec.model_validate([[0.5, 0.5], [0.1, 0.9]])

    assert completion_from_spec(spec).pi.tolist() == [[0.5, 0.5], [0.1, 0.9]]

    with pytest.raises(RequiresFullTP):
        completion_from_spec(TransitionSpec.model_validate([[0.5, "?"], [0.1, 0.9]]))


def test_mask_transitions(network_model):
    spec = mask_transitions(
        network_model.completion.pi,
        network_model.transitions.known_mask,
    )

    assert spec.model_dump() == network_model.transitions.model_dump()

    with pytest.raises(DimensionMismatch):
        mask_transitions(np.eye(2), np.ones((3, 3), dtype=bool))


def test_activation_apply(network_model):
    x = np.array([10.0, -20.0])

    assert np.allclose(activation_apply(network_model, x), np.tanh([0.3, -0.4]))


def test_sector_residual():
    sector = SectorBounds(F1=np.zeros((1, 1)), F2=np.eye(1))

    assert sector_residual(sector, np.array([2.0]), np.array([1.0])) == -1.0
    assert sector_residual(sector, np.array([1.0]), np.array([2.0])) == 2.0
    assert incremental_sector_residual(
        sector,
        np.array([3.0]),
        np.array([1.0]),
        np.array([3.0]),
        np.array([2.0]),
    ) == -1.0


def test_wide_sector_pair_is_violated(network_model):
    model = network_model.model_copy(
        update={
            "sector": SectorBounds(F1=np.diag([0.2, 0.1]), F2=np.diag([0.1, 0.2])),
        },
    )

    with pytest.warns(UserWarning, match="leave the sector"):
        messages = check_activation_sector(model, samples=200)

    assert len(messages) == 2


def test_shipped_sector_pair_holds(network_model):
    assert check_activation_sector(network_model, samples=500) == []
