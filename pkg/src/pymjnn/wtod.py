"""Weighted try-once-discard scheduling.

At every step the node whose output moved furthest, in its own weighted norm, from its
last transmitted value wins the network:

```
o(k) = argmax_m ||y_m(k) - y_bar_m(k - 1)||^2_{Q_m}
```

and the scheduler memory is refreshed on that node's coordinates only:

```
y_bar(k) = Phi_o y(k) + (I - Phi_o) y_bar(k - 1)
```

Ties go to the smallest node index. All functions are pure; node indices are zero-based.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from pymjnn.errors import IndexOutOfRange
from pymjnn.models.protocol import NodePartition, SchedulerState, WtodWeights

if TYPE_CHECKING:
    import numpy.typing as npt


def _check_node(partition: NodePartition, m: int) -> None:
    if not 0 <= m < partition.count:
        msg = f"Node index {m} out of range for {partition.count} node(s)"
        logger.error(msg)
        raise IndexOutOfRange(msg)


def selector_matrix(partition: NodePartition, m: int) -> npt.NDArray[np.float64]:
    """Build the diagonal 0/1 matrix picking node `m`'s output coordinates.

    ???+ example
        ```python
        phi = selector_matrix(NodePartition(dims=[2, 1]), 0)
        assert (phi == np.diag([1.0, 1.0, 0.0])).all()
        ```

    Args:
        partition (NodePartition): The node partition.
        m (int): The zero-based node index.

    Returns:
        npt.NDArray[np.float64]: `Phi_m`, of size `partition.m`.
    """
    _check_node(partition, m)
    diag = np.zeros(partition.m)
    diag[partition.slices[m]] = 1.0
    return np.diag(diag)


def weighted_deviations(
    state: SchedulerState,
    y: npt.NDArray[np.float64],
    weights: WtodWeights,
    partition: NodePartition,
) -> npt.NDArray[np.float64]:
    """Score every node by its weighted deviation from the scheduler memory.

    Args:
        state (SchedulerState): The memory `y_bar(k - 1)`.
        y (npt.NDArray[np.float64]): The current output `y(k)`.
        weights (WtodWeights): The node weights.
        partition (NodePartition): The node partition.

    Returns:
        npt.NDArray[np.float64]: `||y_m - y_bar_m||^2_{Q_m}` for every node `m`.
    """
    d = np.asarray(y, dtype=np.float64) - state.y_bar
    return np.array(
        [d[s] @ q @ d[s] for s, q in zip(partition.slices, weights.Q, strict=True)],
    )


def stacked_deviations(
    state: SchedulerState,
    y: npt.NDArray[np.float64],
    weights: WtodWeights,
    partition: NodePartition,
) -> npt.NDArray[np.float64]:
    """Score every node through the whole-output weight `Q_bar Phi_m`.

    This is the same score as `weighted_deviations`, written on the full output vector;
    it is kept to check the two forms against each other.

    Args:
        state (SchedulerState): The memory `y_bar(k - 1)`.
        y (npt.NDArray[np.float64]): The current output `y(k)`.
        weights (WtodWeights): The node weights.
        partition (NodePartition): The node partition.

    Returns:
        npt.NDArray[np.float64]: `||y - y_bar||^2_{Q_bar Phi_m}` for every node `m`.
    """
    d = np.asarray(y, dtype=np.float64) - state.y_bar
    q_bar = weights.q_bar()
    return np.array(
        [d @ q_bar @ selector_matrix(partition, m) @ d for m in range(partition.count)],
    )


def select_node(
    state: SchedulerState,
    y: npt.NDArray[np.float64],
    weights: WtodWeights,
    partition: NodePartition,
) -> int:
    """Pick the node granted network access.

    ???+ example
        ```python
        partition = NodePartition(dims=[1, 1])
        state = SchedulerState(y_bar=[0.5, -0.5])
        weights = WtodWeights.identity(partition)
        assert select_node(state, np.array([1.0, -2.0]), weights, partition) == 1
        ```

    Args:
        state (SchedulerState): The memory `y_bar(k - 1)`.
        y (npt.NDArray[np.float64]): The current output `y(k)`.
        weights (WtodWeights): The node weights.
        partition (NodePartition): The node partition.

    Returns:
        int: The zero-based index of the node with the largest weighted deviation,
            the smallest such index on ties.
    """
    return int(np.argmax(weighted_deviations(state, y, weights, partition)))


def update_transmitted(
    state: SchedulerState,
    y: npt.NDArray[np.float64],
    o: int,
    partition: NodePartition,
) -> SchedulerState:
    """Refresh the scheduler memory with the transmitting node's output.

    Args:
        state (SchedulerState): The memory `y_bar(k - 1)`.
        y (npt.NDArray[np.float64]): The current output `y(k)`.
        o (int): The zero-based transmitting node.
        partition (NodePartition): The node partition.

    Returns:
        SchedulerState: The memory `y_bar(k)`; coordinates outside node `o` are
            unchanged.
    """
    _check_node(partition, o)
    y_bar = np.array(state.y_bar)
    y_bar[partition.slices[o]] = np.asarray(y, dtype=np.float64)[partition.slices[o]]
    return SchedulerState(y_bar=y_bar)


def protocol_commutes(partition: NodePartition, weights: WtodWeights) -> bool:
    """Check that `Q_bar` commutes with every selector `Phi_m`.

    The scheduling fact used by the matrix inequalities weights the output deviation
    by `Q_bar (Phi_m' - Phi_m)`, which is only symmetric when the two commute.

    Args:
        partition (NodePartition): The node partition.
        weights (WtodWeights): The node weights.

    Returns:
        bool: Whether every `Q_bar Phi_m` equals `Phi_m Q_bar`.
    """
    q_bar = weights.q_bar()
    if q_bar.shape[0] != partition.m:
        return False
    for m in range(partition.count):
        phi = selector_matrix(partition, m)
        if not np.array_equal(q_bar @ phi, phi @ q_bar):
            return False
    return True
