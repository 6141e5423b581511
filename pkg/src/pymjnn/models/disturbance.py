"""Exogenous disturbance signals driving the plant and the measurement.

Every signal returns the pair `(w(k), v(k))`, each of dimension `r`.
"""

from __future__ import annotations

from typing import Annotated, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pymjnn.models.pydantic import Matrix

Pair = tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]


class ZeroDisturbance(BaseModel):
    """No disturbance at all."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["zero"] = "zero"

    def sample(self, k: int, r: int) -> Pair:  # noqa: ARG002, D102
        return np.zeros(r), np.zeros(r)


class DecayingSinusoid(BaseModel):
    """Decaying sinusoids, `w = a_w e^{-c k} sin(f_w k)`, `v = a_v e^{-c k} cos(f_v k)`.

    The defaults reproduce the disturbance of the four-mode example: unit amplitude for
    `w`, amplitude 2 for `v`, decay rate 0.05 and frequencies 1 and 2. Every component
    of `w` and `v` carries the same value.

    With `literal_exponent` the envelope is read as `e^{-(c^k)}`, a power tower that
    tends to one instead of decaying. That reading is not square summable and is only
    kept to compare against the decaying one.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["decaying_sinusoid"] = "decaying_sinusoid"
    amplitudes: tuple[float, float] = Field(
        default=(1.0, 2.0),
        description="Amplitudes of w and v.",
    )
    rate: float = Field(default=0.05, gt=0, description="Decay rate of the envelope.")
    frequencies: tuple[float, float] = Field(
        default=(1.0, 2.0),
        description="Angular frequencies of w and v, in radians per step.",
    )
    literal_exponent: bool = Field(
        default=False,
        description="Use the power-tower envelope `e^{-(rate^k)}`.",
    )

    def envelope(self, k: int) -> float:
        """The envelope at step `k`.

        Args:
            k (int): The time step.

        Returns:
            float: `e^{-rate k}`, or `e^{-(rate^k)}` with `literal_exponent`.
        """
        if self.literal_exponent:
            return float(np.exp(-(self.rate**k)))
        return float(np.exp(-self.rate * k))

    def sample(self, k: int, r: int) -> Pair:  # noqa: D102
        env = self.envelope(k)
        w = self.amplitudes[0] * env * np.sin(self.frequencies[0] * k)
        v = self.amplitudes[1] * env * np.cos(self.frequencies[1] * k)
        return np.full(r, w), np.full(r, v)


class TimeSeriesDisturbance(BaseModel):
    """Recorded disturbance, one row per step."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["time_series"] = "time_series"
    w: Matrix = Field(description="Rows of w(k), horizon x r.")
    v: Matrix = Field(description="Rows of v(k), horizon x r.")

    @model_validator(mode="after")
    def _validate_shapes(self) -> TimeSeriesDisturbance:
        if self.w.shape != self.v.shape:
            msg = f"`w` and `v` must have the same shape, got {self.w.shape} and {self.v.shape}"
            raise ValueError(msg)
        return self

    @property
    def length(self) -> int:
        """The number of recorded steps."""
        return int(self.w.shape[0])

    def sample(self, k: int, r: int) -> Pair:  # noqa: D102
        if self.w.shape[1] != r:
            msg = f"Recorded disturbance has dimension {self.w.shape[1]}, expected {r}"
            raise ValueError(msg)
        return np.array(self.w[k]), np.array(self.v[k])


Disturbance = Annotated[
    ZeroDisturbance | DecayingSinusoid | TimeSeriesDisturbance,
    Field(discriminator="kind"),
]
"""Disturbance signal, discriminated by its `kind`."""
