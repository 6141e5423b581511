import numpy as np
import pytest

from pymjnn.errors import IndexOutOfRange
from pymjnn.models.protocol import NodePartition, SchedulerState, WtodWeights
from pymjnn.wtod import (
    protocol_commutes,
    select_node,
    selector_matrix,
    stacked_deviations,
    update_transmitted,
    weighted_deviations,
)


def _random_weights(rng: np.random.Generator, partition: NodePartition) -> WtodWeights:
    out = []
    for d in partition.dims:
        a = rng.standard_normal((d, d))
        s = a @ a.T + np.eye(d)
        out.append((s + s.T) / 2)
    return WtodWeights(Q=out)


def test_selector_matrix():
    partition = NodePartition(dims=[2, 1])

    assert np.array_equal(selector_matrix(partition, 0), np.diag([1.0, 1.0, 0.0]))
    assert np.array_equal(selector_matrix(partition, 1), np.diag([0.0, 0.0, 1.0]))
    assert np.array_equal(
        selector_matrix(partition, 0) + selector_matrix(partition, 1),
        np.eye(3),
    )

    with pytest.raises(IndexOutOfRange):
        selector_matrix(partition, 2)


def test_select_node():
    partition = NodePartition(dims=[1, 1])
    state = SchedulerState(y_bar=[0.5, -0.5])
    weights = WtodWeights.identity(partition)
    y = np.array([1.0, -2.0])

    assert weighted_deviations(state, y, weights, partition).tolist() == [0.25, 2.25]
    assert select_node(state, y, weights, partition) == 1


@pytest.mark.parametrize("y", [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [-2.0, 2.0, 2.0]])
def test_select_node_tie_goes_to_smallest_index(y):
    partition = NodePartition(dims=[1, 1, 1])
    state = SchedulerState.zeros(3)
    weights = WtodWeights.identity(partition)

    assert select_node(state, np.array(y), weights, partition) == 0


def test_select_node_matches_exhaustive_argmax():
    rng = np.random.default_rng(0)
    for _ in range(100):
        dims = rng.integers(1, 4, size=rng.integers(1, 5)).tolist()
        partition = NodePartition(dims=dims)
        weights = _random_weights(rng, partition)
        for _ in range(100):
            state = SchedulerState(y_bar=rng.standard_normal(partition.m))
            y = rng.standard_normal(partition.m)

            best, best_score = 0, -np.inf
            for m, (s, q) in enumerate(zip(partition.slices, weights.Q, strict=True)):
                d = y[s] - state.y_bar[s]
                score = d @ q @ d
                if score > best_score:
                    best, best_score = m, score

            assert select_node(state, y, weights, partition) == best


def test_stacked_deviations_agree():
    rng = np.random.default_rng(1)
    partition = NodePartition(dims=[2, 1, 3])
    weights = _random_weights(rng, partition)
    for _ in range(50):
        state = SchedulerState(y_bar=rng.standard_normal(partition.m))
        y = rng.standard_normal(partition.m)

        assert np.allclose(
            weighted_deviations(state, y, weights, partition),
            stacked_deviations(state, y, weights, partition),
            rtol=1e-12,
            atol=1e-12,
        )


def test_update_transmitted():
    partition = NodePartition(dims=[2, 1])
    state = SchedulerState(y_bar=[1.0, 2.0, 3.0])
    y = np.array([10.0, 20.0, 30.0])

    first = update_transmitted(state, y, 0, partition)

    assert first.y_bar.tolist() == [10.0, 20.0, 3.0]
    assert update_transmitted(state, y, 1, partition).y_bar.tolist() == [1.0, 2.0, 30.0]
    assert state.y_bar.tolist() == [1.0, 2.0, 3.0]

    with pytest.raises(IndexOutOfRange):
        update_transmitted(state, y, 2, partition)


def test_update_matches_selector_form():
    rng = np.random.default_rng(2)
    partition = NodePartition(dims=[1, 2, 1])
    for _ in range(20):
        state = SchedulerState(y_bar=rng.standard_normal(4))
        y = rng.standard_normal(4)
        o = int(rng.integers(0, 3))
        phi = selector_matrix(partition, o)

        assert np.allclose(
            update_transmitted(state, y, o, partition).y_bar,
            phi @ y + (np.eye(4) - phi) @ state.y_bar,
        )


def test_protocol_commutes():
    rng = np.random.default_rng(3)
    partition = NodePartition(dims=[2, 2])

    assert protocol_commutes(partition, _random_weights(rng, partition))
    assert not protocol_commutes(
        NodePartition(dims=[2, 1]),
        WtodWeights(Q=[np.eye(1), np.eye(1)]),
    )
