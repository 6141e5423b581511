"""Estimator gain grid, one gain per (mode, node) pair."""

from __future__ import annotations

from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator

from pymjnn.models.pydantic import Matrix
from pymjnn.models.types import format_grid_key, parse_grid_key


class EstimatorGains(BaseModel):
    """Gains `K[i][m]` of the estimator, each `(n + m) x m`.

    Internally the grid is a nested list indexed by zero-based mode and node. In files
    it is an object keyed by one-based `"i,m"` strings, which is also what
    `model_dump` produces.

    ???+ example
        ```python
        gains = EstimatorGains.model_validate(
            {"1,1": [[0.0], [0.5]], "1,2": [[0.1], [0.0]]},
        )
        assert gains.K[0][1].shape == (2, 1)
        assert gains.model_dump()["1,2"] == [[0.1], [0.0]]
        ```
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    K: list[list[Matrix]] = Field(
        min_length=1,
        description="Gain per zero-based (mode, node) pair.",
    )

    @model_validator(mode="before")
    @classmethod
    def _validate_keyed(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "K" in data:
            return data
        cells = {parse_grid_key(str(k)): v for k, v in data.items()}
        if len(cells) == 0:
            msg = "Gain grid is empty"
            raise ValueError(msg)
        modes = max(i for i, _ in cells) + 1
        nodes = max(m for _, m in cells) + 1
        missing = [
            format_grid_key(i, m)
            for i in range(modes)
            for m in range(nodes)
            if (i, m) not in cells
        ]
        if missing:
            msg = f"Gain grid is missing keys {missing}"
            raise ValueError(msg)
        return {"K": [[cells[i, m] for m in range(nodes)] for i in range(modes)]}

    @model_serializer
    def _serialize(self) -> dict[str, list[list[float]]]:
        return {
            format_grid_key(i, m): k.tolist()
            for i, row in enumerate(self.K)
            for m, k in enumerate(row)
        }

    @property
    def modes(self) -> int:
        """The number of modes in the grid."""
        return len(self.K)

    @property
    def nodes(self) -> int:
        """The number of nodes in the grid."""
        return len(self.K[0])

    def __getitem__(self, key: tuple[int, int]) -> npt.NDArray[np.float64]:
        """Return the gain of a zero-based `(mode, node)` pair.

        Args:
            key (tuple[int, int]): The zero-based mode and node.

        Returns:
            npt.NDArray[np.float64]: The gain matrix.
        """
        i, m = key
        return self.K[i][m]

    @classmethod
    def zeros(cls, modes: int, nodes: int, rows: int, cols: int) -> EstimatorGains:
        """Build the all-zero gain grid.

        Args:
            modes (int): The number of modes.
            nodes (int): The number of nodes.
            rows (int): The gain row count, `n + m`.
            cols (int): The gain column count, `m`.

        Returns:
            EstimatorGains: The zero grid.
        """
        return cls(K=[[np.zeros((rows, cols)) for _ in range(nodes)] for _ in range(modes)])
