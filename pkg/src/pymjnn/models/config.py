"""Per-run configuration models."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

Command = Literal["validate", "synthesize", "verify", "simulate", "sweep"]


class CclConfig(BaseModel):
    """Configuration of one cone complementarity synthesis run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: PositiveFloat = Field(description="The performance level.")
    max_iters: int = Field(default=50, ge=1, description="Maximum iteration count c.")
    mu: PositiveFloat = Field(default=1e-6, description="Stopping threshold.")
    eps: PositiveFloat = Field(default=1e-7, description="Strictness slack.")
    seed: int = Field(
        default=0,
        ge=0,
        description="Seed of the perturbation of the first linearization point.",
    )
    jitter: float = Field(
        default=1e-6,
        ge=0,
        description="Relative size of that perturbation, `0` to start unperturbed.",
    )


class RunConfig(BaseModel):
    """Effective configuration of a command line run.

    This is what gets echoed into the output directory as `effective_config.json`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    model_path: Path
    gains_path: Path | None = None
    gamma: PositiveFloat | None = None
    gamma_bracket: tuple[PositiveFloat, PositiveFloat] | None = None
    steps: int = Field(default=12, ge=0)
    horizon: int = Field(default=200, ge=1)
    runs: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    mu: PositiveFloat = 1e-6
    max_iters: int = Field(default=50, ge=1)
    literal_exponent: bool = False
    out: Path = Path("out")

    @model_validator(mode="after")
    def _validate_levels(self) -> RunConfig:
        if self.gamma is not None and self.gamma_bracket is not None:
            msg = "Pass either `gamma` or `gamma_bracket`, not both"
            raise ValueError(msg)
        if self.gamma_bracket is not None and self.gamma_bracket[0] > self.gamma_bracket[1]:
            msg = f"Bracket low must not exceed high, got {self.gamma_bracket}"
            raise ValueError(msg)
        if self.command == "sweep" and self.gamma_bracket is None:
            msg = "`sweep` requires `gamma_bracket`"
            raise ValueError(msg)
        if self.command in {"synthesize", "verify"} and (
            self.gamma is None and self.gamma_bracket is None
        ):
            msg = f"`{self.command}` requires `gamma` or `gamma_bracket`"
            raise ValueError(msg)
        return self
