"""Result models returned by validation, solving, synthesis and simulation."""

from __future__ import annotations

from typing import Literal

import numpy as np
import numpy.typing as npt
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from pymjnn.errors import InfeasibleInit, MaxIters
from pymjnn.models.gains import EstimatorGains  # noqa: TC001
from pymjnn.models.pydantic import Matrix, Vector  # noqa: TC001

ViolationKind = Literal[
    "DimensionMismatch",
    "RowSumViolation",
    "DelayOrderViolation",
    "ProbabilityRangeError",
    "ProtocolMismatch",
    "CompletionMismatch",
]
SolveStatus = Literal["Feasible", "Infeasible", "IterationLimit"]
SynthesisStatus = Literal["Converged", "MaxIters", "InfeasibleInit"]


class Violation(BaseModel):
    """One failed consistency check of a model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ViolationKind = Field(description="The error class the violation maps to.")
    location: str = Field(description="The offending mode, row or field.")
    message: str = Field(description="Human readable description.")

    def __str__(self) -> str:
        """Format as `Kind [location]: message`."""  # noqa: DOC201
        return f"{self.kind} [{self.location}]: {self.message}"


class ModelReport(BaseModel):
    """Outcome of a full model check."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    violations: list[Violation] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)

    @property
    def valid(self) -> bool:
        """Whether no violation was found. Warnings do not invalidate a model."""
        return len(self.violations) == 0


class SolveOutcome(BaseModel):
    """Result of a feasibility or minimization solve.

    Scalar variables are stored as `1 x 1` matrices in `assignment`; use `scalar` to
    read them back as floats.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    status: SolveStatus = Field(description="Feasible, Infeasible or IterationLimit.")
    assignment: dict[str, Matrix] = Field(
        default_factory=dict,
        description="Value of every decision variable.",
    )
    residual: float = Field(
        description="Worst violation found by the independent eigenvalue check.",
    )
    margin: float | None = Field(
        default=None,
        description="Optimal margin of a feasibility solve.",
    )
    objective: float | None = Field(
        default=None,
        description="Optimal value of a minimization.",
    )
    solver: str | None = Field(default=None, description="The solver that produced it.")

    @property
    def feasible(self) -> bool:
        """Whether the status is `Feasible`."""
        return self.status == "Feasible"

    def scalar(self, name: str) -> float:
        """Read a scalar variable.

        Args:
            name (str): The variable name.

        Returns:
            float: The value.
        """
        return float(self.assignment[name][0, 0])


class VerificationResult(BaseModel):
    """Outcome of checking externally supplied gains at a performance level."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(description="The checked performance level.")
    outcome: SolveOutcome = Field(description="The solve, with the certificate.")

    @property
    def feasible(self) -> bool:
        """Whether the gains are certified at `gamma`."""
        return self.outcome.feasible


class CclIteration(BaseModel):
    """One iteration of the cone complementarity loop."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    iteration: int = Field(description="Zero-based iteration index.")
    objective: float = Field(description="Linearized trace objective.")
    trace_gap: float = Field(
        description="Distance of the objective to twice the coupled dimension.",
    )
    max_coupling_residual: float = Field(
        description="Largest Frobenius norm of `P X - I` over the coupled pairs.",
    )


class SynthesisResult(BaseModel):
    """Outcome of the gain synthesis at a fixed performance level."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    status: SynthesisStatus = Field(description="Converged, MaxIters or InfeasibleInit.")
    gamma: float = Field(description="The performance level.")
    gains: EstimatorGains | None = Field(
        default=None,
        description="Gains of the last iterate.",
    )
    certificate: SolveOutcome | None = Field(
        default=None,
        description="Certificate from the verification of the extracted gains.",
    )
    ccl_trace: list[CclIteration] = Field(default_factory=list)

    @property
    def converged(self) -> bool:
        """Whether the loop converged and the gains were verified."""
        return self.status == "Converged"

    def raise_for_status(self) -> SynthesisResult:
        """Raise if the synthesis did not converge.

        Returns:
            SynthesisResult: The unchanged result, when converged.

        Raises:
            InfeasibleInit: If the relaxed conditions had no solution.
            MaxIters: If the loop ran out of iterations.
        """
        if self.status == "InfeasibleInit":
            msg = f"Relaxed synthesis conditions are infeasible at gamma={self.gamma}"
            logger.error(msg)
            raise InfeasibleInit(msg)
        if self.status == "MaxIters":
            msg = f"Synthesis did not converge within {len(self.ccl_trace)} iterations"
            logger.error(msg)
            raise MaxIters(msg)
        return self


class BisectionProbe(BaseModel):
    """One probe of a performance bisection."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float
    feasible: bool
    status: str


class BisectionResult(BaseModel):
    """Tightest feasible level found by bisection and the bracket log."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(description="Smallest feasible level found.")
    lower: float = Field(description="Largest level found infeasible, or the bracket low.")
    synthesis: SynthesisResult | None = Field(
        default=None,
        description="Synthesis at `gamma`, when gains were synthesized.",
    )
    verification: VerificationResult | None = Field(
        default=None,
        description="Verification at `gamma`, when fixed gains were probed.",
    )
    probes: list[BisectionProbe] = Field(default_factory=list)


class Trajectory(BaseModel):
    """Record of one closed-loop run.

    State arrays carry the initial history before step zero; row `k + offset` holds step
    `k`, for `k` from `-offset` to `horizon`. Per-step arrays (`nodes`, `delays`, `w`,
    `v`, `w_sq`) are indexed by `k` from `0` to `horizon - 1`, while `modes` and
    `ztilde_sq` also cover step `horizon`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    horizon: int = Field(description="Number of simulated steps.")
    offset: int = Field(description="Number of history rows before step zero.")
    n: int = Field(description="The plant state dimension.")
    modes: list[int] = Field(description="Zero-based mode r(k), k = 0..horizon.")
    delays: list[int] = Field(description="Delay tau(k), k = 0..horizon-1.")
    nodes: list[int] = Field(description="Zero-based selected node o(k).")
    x_bar: Matrix = Field(description="Augmented plant state [x(k); y_bar(k-1)].")
    x_hat: Matrix = Field(description="Estimator state.")
    w: Matrix = Field(description="Process disturbance w(k).")
    v: Matrix = Field(description="Measurement disturbance v(k).")
    ztilde_sq: Vector = Field(description="Squared estimation error of z, k = 0..horizon.")
    w_sq: Vector = Field(description="Squared norm of the stacked disturbance W(k).")

    @property
    def e(self) -> npt.NDArray[np.float64]:
        """Estimation error `x_bar - x_hat`, including the history rows."""
        return self.x_bar - self.x_hat

    @property
    def eta(self) -> npt.NDArray[np.float64]:
        """Stacked state `[x_bar; e]`, including the history rows."""
        return np.hstack([self.x_bar, self.e])

    @property
    def energy(self) -> float:
        """Total disturbance energy, the sum of `||W(k)||^2`."""
        return float(self.w_sq.sum())

    def at(self, k: int) -> int:
        """Row of step `k` in the state arrays.

        Args:
            k (int): The time step, possibly negative for history rows.

        Returns:
            int: The row index.
        """
        return k + self.offset


class EnsembleMetrics(BaseModel):
    """Monte Carlo estimate of the peak-to-energy performance ratio."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    runs: int
    horizon: int
    ms_state_norm: Vector = Field(description="Ensemble mean of ||eta(k)||^2 per step.")
    mean_ztilde_sq: Vector = Field(description="Ensemble mean of ||z~(k)||^2 per step.")
    sup_index: int = Field(description="Step at which the mean squared error peaks.")
    sup_ztilde_sq: float = Field(description="Peak of the mean squared error.")
    energy: float = Field(description="Mean of the sum of ||W(k)||^2.")
    ratio_status: Literal["ok", "NotApplicable"] = Field(
        description="NotApplicable when the disturbance energy is zero.",
    )
    empirical_ratio: float | None = Field(
        default=None,
        description="Peak error over energy, energy counted with W stacked twice.",
    )
    single_count_ratio: float | None = Field(
        default=None,
        description="Peak error over energy, disturbance counted once.",
    )
    standard_error: float | None = Field(
        default=None,
        description="Standard error of `empirical_ratio` from the ensemble spread.",
    )
    node_counts: list[list[int]] = Field(description="Transmissions per node per run.")


class DecayReport(BaseModel):
    """Mean-square decay of the unforced closed loop."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    status: Literal["Decayed", "NoDecay"]
    decay_step: int | None = Field(
        default=None,
        description="First step at which the mean falls below the threshold.",
    )
    initial: float = Field(description="Ensemble mean of ||eta(0)||^2.")
    ms_state_norm: Vector = Field(description="Ensemble mean of ||eta(k)||^2 per step.")
    diverged_at: int | None = Field(
        default=None,
        description="Step at which a run diverged, if any.",
    )


class LyapunovReport(BaseModel):
    """Lyapunov-Krasovskii functional evaluated along a trajectory."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    V: Vector = Field(description="V(k), k = 0..horizon-1.")
    delta: Vector = Field(description="Pathwise V(k+1) - V(k).")
    expected_delta: Vector | None = Field(
        default=None,
        description="Expected V(k+1) - V(k) over the next mode, node and delay.",
    )
