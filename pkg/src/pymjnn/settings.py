"""Settings for pymjnn.

This module contains the numerical settings shared by the assembly, solver, synthesis
and simulation layers. The settings are expected to be used in conjunction with the
[`pymjnn.designer.Designer`](designer.md) class, which inherits them, or passed
explicitly to the module-level functions.
"""

from __future__ import annotations

import warnings
from typing import Literal

import cvxpy as cp
from loguru import logger
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LyapunovMode = Literal["vertex", "averaged"]


class Settings(BaseSettings):  # noqa: DOC601, DOC603
    """Numerical settings for pymjnn.

    Strict matrix inequalities are realized with a slack: `F < 0` is imposed as
    `F <= -eps * I`. Every solver result is replayed through an independent eigenvalue
    check, and accepted only when the worst violation is below `tol`.

    ???+ example "Tighten the solver settings"
        ```python
        from pymjnn import Settings

        settings = Settings(eps=1e-8, tol=1e-9, solvers=["CLARABEL"])
        ```

    This class is a subclass of `pydantic_settings.BaseSettings`, which allows for
    [environment variable and secret file parsing](https://docs.pydantic.dev/latest/concepts/pydantic_settings/).

    ???+ example "Load settings from environment variables"
        ```bash title=".bashrc"
        export PYMJNN_EPS="1e-8"
        export PYMJNN_CCL_MAX_ITERS="100"
        export PYMJNN_SOLVERS='["SCS"]'
        ```

        ```python
        from pymjnn import Settings

        settings = Settings()
        ```

    ???+ example "Load settings from a dotenv file"
        ```bash title=".env"
        PYMJNN_SEED="7"
        PYMJNN_LITERAL_EXPONENT="True"
        ```

        ```python
        from pymjnn import Settings

        settings = Settings(_env_file=".env")
        ```

    Attributes:
        eps (float): Slack used to realize strict inequalities. Defaults to `1e-7`.
        tol (float): Largest accepted violation in the independent eigenvalue check.
            Defaults to `1e-7`.
        pad (float): Extra slack imposed on strict inequalities when minimizing, so
            that boundary solutions still pass the eigenvalue check. Defaults to
            `1e-6`.
        margin_cap (float): Upper bound on the margin maximized by feasibility solves.
            Defaults to `1.0`.
        var_bound (float): Upper bound on every positive decision variable, which keeps
            the feasible sets of homogeneous problems bounded. Defaults to `1e4`.
        solvers (list[str]): Conic solvers to try, in order. Defaults to
            `["CLARABEL", "SCS"]`.
        ccl_mu (float): Stopping threshold of the cone complementarity loop. Defaults
            to `1e-6`.
        ccl_max_iters (int): Maximum number of cone complementarity iterations.
            Defaults to `50`.
        lyapunov_mode (str): How partially known rows are assembled, either
            `"vertex"` (one condition per unknown successor) or `"averaged"` (a
            single averaged bound). Defaults to `"vertex"`.
        seed (int): Root seed for every random stream. Defaults to `0`.
        literal_exponent (bool): Read the decaying disturbance envelope as a power
            tower instead of an exponential decay. Defaults to `False`.
        overflow_limit (float): Absolute state value treated as divergence. Defaults
            to `1e12`.
        workers (int): Number of worker processes for ensembles. Defaults to `1`.
    """

    # NOTE: Docstring attributes are required here, as griffe_pydantic does not support
    # BaseSettings: https://github.com/mkdocstrings/griffe-pydantic/issues/27

    model_config = SettingsConfigDict(
        env_prefix="pymjnn_",
        env_nested_delimiter="__",
        extra="forbid",
    )

    eps: float = Field(
        default=1e-7,
        gt=0,
        description="Slack used to realize strict inequalities.",
    )
    tol: float = Field(
        default=1e-7,
        gt=0,
        description="Largest accepted violation in the independent eigenvalue check.",
    )
    pad: float = Field(
        default=1e-6,
        ge=0,
        description="Extra slack on strict inequalities when minimizing.",
    )
    margin_cap: float = Field(
        default=1.0,
        gt=0,
        description="Upper bound on the margin maximized by feasibility solves.",
    )
    var_bound: float = Field(
        default=1e4,
        gt=0,
        description="Upper bound on every positive decision variable.",
    )
    solvers: list[str] = Field(
        default=["CLARABEL", "SCS"],
        min_length=1,
        description="Conic solvers to try, in order.",
    )

    ccl_mu: float = Field(
        default=1e-6,
        gt=0,
        description="Stopping threshold of the cone complementarity loop.",
    )
    ccl_max_iters: int = Field(
        default=50,
        ge=1,
        description="Maximum number of cone complementarity iterations.",
    )
    lyapunov_mode: LyapunovMode = Field(
        default="vertex",
        description="How partially known transition rows are assembled.",
    )

    seed: int = Field(default=0, ge=0, description="Root seed for every random stream.")
    literal_exponent: bool = Field(
        default=False,
        description="Read the disturbance envelope as a power tower.",
    )
    overflow_limit: float = Field(
        default=1e12,
        gt=0,
        description="Absolute state value treated as divergence.",
    )
    workers: int = Field(
        default=1,
        ge=1,
        description="Number of worker processes for ensembles.",
    )

    @field_validator("solvers", mode="after")
    @classmethod
    def _validate_solvers(cls, v: list[str]) -> list[str]:
        solvers = [s.upper() for s in v]
        installed = set(cp.installed_solvers())
        if not any(s in installed for s in solvers):
            msg = (
                f"None of the solvers {solvers} are installed, "
                f"found {sorted(installed)}"
            )
            logger.error(msg)
            raise ValueError(msg)
        if missing := [s for s in solvers if s not in installed]:
            msg = f"Solvers {missing} are not installed and will be skipped"
            logger.warning(msg)
            warnings.warn(msg, UserWarning, stacklevel=1)
        return [s for s in solvers if s in installed]
