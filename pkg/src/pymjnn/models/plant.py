"""Models describing the Markovian jumping neural network plant.

The plant switches between `N` modes according to a Markov chain whose transition
matrix may be only partially known. In every mode `i` it evolves as

```
x(k+1) = A_i x(k) + B_i f(x(k)) + C_i f(x(k - tau(k))) + D1_i w(k)
y(k)   = E_i x(k) + D2_i v(k)
z(k)   = M_i x(k)
```

with `x` of dimension `n`, `y` of dimension `m`, `z` of dimension `q` and both
disturbances `w`, `v` of dimension `r`.

The models here only check what a single field can check on its own (array ranks,
finite entries). Everything that relates fields to each other, such as consistent
dimensions across modes or row sums, is reported by
[`validate_model`](../core.md#pymjnn.core.validate_model), which collects every
violation instead of stopping at the first one.
"""

from __future__ import annotations

from collections.abc import Callable
from typing import Annotated, Any, Literal

import numpy as np
import numpy.typing as npt
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_serializer,
    model_validator,
)

from pymjnn.models.pydantic import Matrix
from pymjnn.models.protocol import NodePartition, WtodProtocol
from pymjnn.models.types import UNKNOWN, TransitionCell

ROW_SUM_TOL = 1e-12


class ModeMatrices(BaseModel):
    """Plant coefficients of a single mode."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    A: Matrix = Field(description="State matrix, n x n.")
    B: Matrix = Field(description="Activation matrix, n x n.")
    C: Matrix = Field(description="Delayed activation matrix, n x n.")
    D1: Matrix = Field(description="State disturbance matrix, n x r.")
    D2: Matrix = Field(description="Measurement noise matrix, m x r.")
    E: Matrix = Field(description="Measurement matrix, m x n.")
    M: Matrix = Field(description="Estimated output matrix, q x n.")

    @property
    def n(self) -> int:
        """The state dimension."""
        return int(self.A.shape[0])

    @property
    def m(self) -> int:
        """The measurement dimension."""
        return int(self.E.shape[0])

    @property
    def q(self) -> int:
        """The estimated output dimension."""
        return int(self.M.shape[0])

    @property
    def r(self) -> int:
        """The disturbance dimension."""
        return int(self.D1.shape[1])


class TransitionSpec(BaseModel):
    """Partially known transition matrix.

    Each cell is either a known probability or the marker `"?"`. In files the spec is
    written as the bare `N x N` nested list.

    ???+ example
        ```python
        spec = TransitionSpec.model_validate(
            [[0.3, "?", 0.1, "?"], ["?", "?", "?", 0.2], ...],
        )
        ```
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    entries: list[list[TransitionCell]] = Field(
        min_length=1,
        description="Row-major cells, a probability or `?` when unknown.",
    )

    @model_validator(mode="before")
    @classmethod
    def _validate_list(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"entries": [list(row) for row in data]}
        return data

    @field_validator("entries", mode="after")
    @classmethod
    def _validate_square(cls, v: list[list[TransitionCell]]) -> list[list[TransitionCell]]:
        if any(len(row) != len(v) for row in v):
            msg = f"Transition matrix must be square, got {len(v)} rows of lengths {[len(row) for row in v]}"
            raise ValueError(msg)
        return v

    @model_serializer
    def _serialize(self) -> list[list[float | str]]:
        return [list(row) for row in self.entries]

    @property
    def N(self) -> int:
        """The number of modes."""
        return len(self.entries)

    @property
    def known_mask(self) -> npt.NDArray[np.bool_]:
        """Boolean mask, `True` where the probability is known."""
        return np.array([[c != UNKNOWN for c in row] for row in self.entries], dtype=bool)

    @property
    def known_values(self) -> npt.NDArray[np.float64]:
        """The known probabilities, `nan` where unknown."""
        return np.array(
            [[np.nan if c == UNKNOWN else float(c) for c in row] for row in self.entries],
        )

    @property
    def is_fully_known(self) -> bool:
        """Whether every cell is known."""
        return bool(self.known_mask.all())


class TransitionCompletion(BaseModel):
    """Row-stochastic ground-truth chain used when simulating.

    Synthesis and analysis never read it; only the simulator does.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    pi: Matrix = Field(description="The full N x N transition matrix.")

    @field_validator("pi", mode="after")
    @classmethod
    def _validate_stochastic(cls, v: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        if v.shape[0] != v.shape[1]:
            msg = f"Completion must be square, got shape {v.shape}"
            raise ValueError(msg)
        if (v < 0).any() or (v > 1).any():
            msg = "Completion probabilities must lie in [0, 1]"
            raise ValueError(msg)
        sums = v.sum(axis=1)
        if (bad := np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)).size > 0:
            msg = f"Completion rows {(bad + 1).tolist()} do not sum to 1"
            raise ValueError(msg)
        return v

    @property
    def N(self) -> int:
        """The number of modes."""
        return int(self.pi.shape[0])


class SectorBounds(BaseModel):
    """Matrices bounding the activation, `[f - F1 x]^T [f - F2 x] <= 0`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    F1: Matrix = Field(description="Lower sector matrix, n x n.")
    F2: Matrix = Field(description="Upper sector matrix, n x n.")


class DelaySpec(BaseModel):
    """Bounds of the time-varying delay, in steps.

    In files the bounds are written as `{"min": 1, "max": 3}`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    tau_min: int = Field(alias="min", description="Smallest delay, in steps.")
    tau_max: int = Field(alias="max", description="Largest delay, in steps.")


class TanhActivation(BaseModel):
    """Built-in activation `f_l(x_l) = tanh(c_l x_l)`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    type: Literal["tanh"] = "tanh"
    scales: list[float] = Field(min_length=1, description="The scale `c_l` per coordinate.")

    def __call__(self, x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:  # noqa: D102
        return np.tanh(np.asarray(self.scales) * x)


class CallableActivation(BaseModel):
    """User-supplied componentwise activation.

    Sector compliance of an arbitrary map cannot be checked symbolically; it is checked
    by sampling in [`check_activation_sector`](../core.md#pymjnn.core.check_activation_sector).
    The function is not serialized.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    type: Literal["callable"] = "callable"
    func: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]] = Field(
        exclude=True,
        description="Componentwise map from R^n to R^n.",
    )

    def __call__(self, x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:  # noqa: D102
        return np.asarray(self.func(x), dtype=np.float64)


Activation = Annotated[TanhActivation | CallableActivation, Field(discriminator="type")]
"""Activation descriptor, discriminated by its `type`."""


class MjnnModel(BaseModel):
    """A Markovian jumping neural network with its protocol and delay bounds.

    Attributes `protocol` and `completion` are optional: without a protocol the whole
    output is treated as a single node with identity weight, and without a completion
    the simulator spreads the unknown mass of every row evenly.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str | None = Field(default=None, description="Free-form model name.")
    modes: list[ModeMatrices] = Field(min_length=1, description="Plant matrices per mode.")
    transitions: TransitionSpec = Field(description="Partially known transition matrix.")
    sector: SectorBounds = Field(description="Activation sector bounds.")
    delay: DelaySpec = Field(description="Delay bounds.")
    activation: Activation = Field(description="Activation descriptor.")
    protocol: WtodProtocol | None = Field(default=None, description="Protocol configuration.")
    completion: TransitionCompletion | None = Field(
        default=None,
        description="Ground-truth chain used for simulation.",
    )

    @property
    def N(self) -> int:
        """The number of modes."""
        return len(self.modes)

    @property
    def n(self) -> int:
        """The state dimension."""
        return self.modes[0].n

    @property
    def m(self) -> int:
        """The measurement dimension."""
        return self.modes[0].m

    @property
    def q(self) -> int:
        """The estimated output dimension."""
        return self.modes[0].q

    @property
    def r(self) -> int:
        """The disturbance dimension."""
        return self.modes[0].r

    @property
    def nb(self) -> int:
        """The dimension of the protocol-augmented state `[x; y_bar]`."""
        return self.n + self.m

    @property
    def wtod(self) -> WtodProtocol:
        """The protocol, defaulting to a single node with identity weight."""
        if self.protocol is not None:
            return self.protocol
        return WtodProtocol(partition=NodePartition.single(self.m))

    @property
    def n_nodes(self) -> int:
        """The number of sensor nodes."""
        return self.wtod.partition.count
