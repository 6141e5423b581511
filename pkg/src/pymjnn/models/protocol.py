"""Models describing the weighted try-once-discard protocol.

The output vector `y` of dimension `m` is split into contiguous sub-vectors, one per
sensor node. At every step only one node transmits; the others keep their last
transmitted value in the scheduler memory.
"""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
import numpy.typing as npt
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from pymjnn.models.pydantic import Vector
from pymjnn.models.types import SpdMatrix


class NodePartition(BaseModel):
    """Split of the output vector into sensor nodes.

    In files the partition is written as a plain list of node dimensions, e.g. `[1, 1]`
    for two scalar nodes.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    dims: list[PositiveInt] = Field(
        min_length=1,
        description="Length of the output sub-vector owned by each node.",
    )

    @model_validator(mode="before")
    @classmethod
    def _validate_list(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"dims": list(data)}
        return data

    @property
    def count(self) -> int:
        """The number of sensor nodes."""
        return len(self.dims)

    @property
    def m(self) -> int:
        """The output dimension covered by the partition."""
        return sum(self.dims)

    @property
    def slices(self) -> list[slice]:
        """The output coordinates owned by each node."""
        stops = np.cumsum(self.dims).tolist()
        starts = [0, *stops[:-1]]
        return [slice(a, b) for a, b in zip(starts, stops, strict=True)]

    @classmethod
    def single(cls, m: int) -> NodePartition:
        """Build the degenerate partition with one node owning every coordinate.

        Args:
            m (int): The output dimension.

        Returns:
            NodePartition: The single-node partition.
        """
        return cls(dims=[m])


class WtodWeights(BaseModel):
    """Positive definite weight per node, `Q_m` of size `dims[m] x dims[m]`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    Q: list[SpdMatrix] = Field(min_length=1, description="The weight of each node.")

    @model_validator(mode="before")
    @classmethod
    def _validate_list(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"Q": list(data)}
        return data

    @classmethod
    def identity(cls, partition: NodePartition) -> WtodWeights:
        """Build identity weights for every node of a partition.

        Args:
            partition (NodePartition): The node partition.

        Returns:
            WtodWeights: One identity matrix per node.
        """
        return cls(Q=[np.eye(d) for d in partition.dims])

    def q_bar(self) -> npt.NDArray[np.float64]:
        """Stack the node weights into the block diagonal weight of the whole output.

        Returns:
            npt.NDArray[np.float64]: `diag(Q_1, ..., Q_M)`.
        """
        return scipy.linalg.block_diag(*self.Q)


class WtodProtocol(BaseModel):
    """Protocol configuration stored in the model file.

    ???+ example "Two scalar nodes with identity weights"
        ```json
        {"partition": [1, 1], "weights": "identity"}
        ```
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    partition: NodePartition = Field(description="The node partition.")
    weights: WtodWeights | Literal["identity"] = Field(
        default="identity",
        description="Node weights, identity matrices when unspecified.",
    )

    @property
    def resolved_weights(self) -> WtodWeights:
        """The explicit node weights, expanding `"identity"`."""
        if isinstance(self.weights, WtodWeights):
            return self.weights
        return WtodWeights.identity(self.partition)


class SchedulerState(BaseModel):
    """Last transmitted output, `y_bar(k - 1)`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    y_bar: Vector = Field(description="The last transmitted value of every coordinate.")

    @classmethod
    def zeros(cls, m: int) -> SchedulerState:
        """Build the initial state, a zero memory.

        Args:
            m (int): The output dimension.

        Returns:
            SchedulerState: The zero state.
        """
        return cls(y_bar=np.zeros(m))
