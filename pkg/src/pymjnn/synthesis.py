"""Gain synthesis by cone complementarity linearization, verification and bisection.

The synthesis conditions are linear in the Lyapunov blocks `P`, their would-be inverses
`X`, the gains `K` and the multipliers, except for the couplings `P X = I`. The cone
complementarity loop relaxes each coupling to `[[P, I], [I, X]] >= 0`, which already
forces `tr(P X) >= nb`, and then repeatedly minimizes the linearization
`tr(P_t X + X_t P)` around the previous iterate. The coupling is closed when that sum
reaches twice the coupled dimension.
The constraints never change between iterations, so one
[`LinearMinimizer`](sdp.md#pymjnn.sdp.LinearMinimizer) serves the whole loop.

Gains are only reported as `Converged` once they pass
[`verify_gains`](#pymjnn.synthesis.verify_gains), which checks the performance
conditions for the fixed gains and does not rely on the coupling being exact.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from pymjnn.errors import NoFeasibleLevel
from pymjnn.lmi.conditions import (
    assemble_performance,
    assemble_synthesis,
    gains_from_assignment,
)
from pymjnn.lmi.problem import LinearObjective
from pymjnn.models.config import CclConfig
from pymjnn.models.results import (
    BisectionProbe,
    BisectionResult,
    CclIteration,
    SynthesisResult,
    VerificationResult,
)
from pymjnn.sdp import LinearMinimizer, solve_feasibility
from pymjnn.settings import Settings

if TYPE_CHECKING:
    from pathlib import Path

    from pymjnn.models.gains import EstimatorGains
    from pymjnn.models.plant import MjnnModel


def spectral_radius_check(model: MjnnModel) -> list[float]:
    """Spectral radius of the open-loop state matrix of every mode.

    Args:
        model (MjnnModel): The model.

    Returns:
        list[float]: `max |lambda(A_i)|` per mode.
    """
    return [float(np.abs(np.linalg.eigvals(mode.A)).max()) for mode in model.modes]


def verify_gains(
    model: MjnnModel,
    gains: EstimatorGains,
    gamma: float,
    settings: Settings | None = None,
) -> VerificationResult:
    """Check that fixed gains achieve a performance level.

    Infeasibility is a legitimate answer here, not an error: the result simply is not
    `feasible`.

    ???+ example
        ```python
        gains = EstimatorGains.zeros(model.N, model.n_nodes, model.nb, model.m)
        result = verify_gains(model, gains, gamma=10.0)
        if result.feasible:
            print(result.outcome.assignment["P[1,1]"])
        ```

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The gains to check.
        gamma (float): The performance level.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.

    Returns:
        VerificationResult: The solve, whose assignment is the certificate when
            feasible.
    """
    settings = settings or Settings()
    problem = assemble_performance(model, gains, gamma, settings.lyapunov_mode)
    outcome = solve_feasibility(problem, settings)
    logger.debug(f"Verification at gamma={gamma}: {outcome.status}")
    return VerificationResult(gamma=gamma, outcome=outcome)


def _trace_objective(
    couplings: list[tuple[str, str]],
    assignment: dict[str, np.ndarray],
) -> LinearObjective:
    weights = {}
    for p, x in couplings:
        weights[x] = assignment[p]
        weights[p] = assignment[x]
    return LinearObjective(weights=weights)


def _jittered(
    couplings: list[tuple[str, str]],
    assignment: dict[str, np.ndarray],
    scale: float,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Add `scale * ||V|| * G G^T / n` to every coupled block, keeping it definite."""
    out = dict(assignment)
    for name in (name for pair in couplings for name in pair):
        value = assignment[name]
        g = rng.standard_normal(value.shape)
        size = value.shape[0]
        out[name] = value + scale * np.linalg.norm(value, 2) * (g @ g.T) / size
    return out


def ccl_synthesize(
    model: MjnnModel,
    config: CclConfig,
    settings: Settings | None = None,
    *,
    log_path: Path | None = None,
) -> SynthesisResult:
    """Synthesize estimator gains at a fixed performance level.

    The relaxed conditions are solved first. If they are infeasible no gain exists for
    this level and `InfeasibleInit` is returned. Otherwise the loop minimizes the
    linearized trace until it is within `config.mu` of twice the coupled dimension
    and the extracted gains pass verification, or until `config.max_iters` iterations
    are spent.

    The first linearization point is shifted by a small positive semidefinite term of
    relative size `config.jitter`, drawn from `config.seed`. Runs with the same seed
    take the same path.

    ???+ example
        ```python
        result = ccl_synthesize(model, CclConfig(gamma=1.0))
        gains = result.raise_for_status().gains
        ```

    Args:
        model (MjnnModel): The model.
        config (CclConfig): The level and the loop parameters.
        settings (Settings | None, optional): Numerical settings; `config.eps`
            overrides `Settings.eps`. Defaults to `Settings()`.
        log_path (Path | None, optional): CSV file every solve is appended to.
            Defaults to no log.

    Returns:
        SynthesisResult: The status, the last gains and the iteration trace.
    """
    settings = (settings or Settings()).model_copy(update={"eps": config.eps})
    problem = assemble_synthesis(model, config.gamma, settings.lyapunov_mode)
    relaxed = problem.relaxed()
    init = solve_feasibility(relaxed, settings, log_path=log_path)
    if not init.feasible:
        logger.info(
            f"Relaxed synthesis conditions are {init.status} at gamma={config.gamma}",
        )
        return SynthesisResult(status="InfeasibleInit", gamma=config.gamma)

    couplings = problem.couplings
    eye = np.eye(model.nb)
    target = 2 * len(couplings) * model.nb
    minimizer = LinearMinimizer(
        relaxed,
        [name for pair in couplings for name in pair],
        settings,
        log_path=log_path,
    )
    rng = np.random.default_rng(config.seed)
    current = dict(init.assignment)
    gains = gains_from_assignment(current, model.N, model.n_nodes)
    trace: list[CclIteration] = []
    for it in range(config.max_iters):
        linearization = _trace_objective(couplings, current)
        if it == 0 and config.jitter > 0:
            point = _jittered(couplings, current, config.jitter, rng)
            step = minimizer.minimize(_trace_objective(couplings, point))
        else:
            step = minimizer.minimize(linearization)
        if not step.feasible or step.objective is None:
            logger.warning(f"Cone complementarity step {it} stopped with {step.status}")
            break
        current = dict(step.assignment)
        gains = gains_from_assignment(current, model.N, model.n_nodes)
        objective = linearization.value(current)
        gap = abs(objective - target)
        coupling = max(
            float(np.linalg.norm(current[p] @ current[x] - eye, "fro"))
            for p, x in couplings
        )
        trace.append(
            CclIteration(
                iteration=it,
                objective=objective,
                trace_gap=gap,
                max_coupling_residual=coupling,
            ),
        )
        logger.info(
            f"CCL iteration {it}: objective={objective:.9g}, "
            f"residual={gap:.3g}, coupling={coupling:.3g}",
        )
        if gap < config.mu:
            check = verify_gains(model, gains, config.gamma, settings)
            if check.feasible:
                logger.info(
                    f"Synthesis converged at gamma={config.gamma} "
                    f"after {it + 1} iterations",
                )
                return SynthesisResult(
                    status="Converged",
                    gamma=config.gamma,
                    gains=gains,
                    certificate=check.outcome,
                    ccl_trace=trace,
                )
    return SynthesisResult(
        status="MaxIters",
        gamma=config.gamma,
        gains=gains,
        ccl_trace=trace,
    )


def bisect_gamma(
    model: MjnnModel,
    lo: float,
    hi: float,
    steps: int = 12,
    *,
    gains: EstimatorGains | None = None,
    config: CclConfig | None = None,
    settings: Settings | None = None,
) -> BisectionResult:
    """Find the smallest feasible performance level in a bracket.

    Without `gains` every probe runs
    [`ccl_synthesize`](#pymjnn.synthesis.ccl_synthesize)
    and a level counts as feasible when the synthesis converges. With `gains` every
    probe runs [`verify_gains`](#pymjnn.synthesis.verify_gains) on the fixed grid.
    Feasibility is assumed to be monotone in the level.

    ???+ example
        ```python
        result = bisect_gamma(model, 0.1, 10.0, steps=12)
        print(result.gamma, result.synthesis.gains)
        ```

    Args:
        model (MjnnModel): The model.
        lo (float): Bracket low.
        hi (float): Bracket high, which must be feasible.
        steps (int, optional): Number of halvings. Defaults to `12`.
        gains (EstimatorGains | None, optional): Fixed gains to verify instead of
            synthesizing. Defaults to `None`.
        config (CclConfig | None, optional): Loop parameters for the syntheses; its
            `gamma` is replaced by every probe. Defaults to the `Settings` values.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.

    Returns:
        BisectionResult: The tightest feasible level, its result and the probe log.

    Raises:
        ValueError: If `lo > hi` or either bound is not positive.
        NoFeasibleLevel: If `hi` is not feasible.
    """
    if not 0 < lo <= hi:
        msg = f"Bracket must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        logger.error(msg)
        raise ValueError(msg)
    settings = settings or Settings()
    template = config or CclConfig(
        gamma=hi,
        max_iters=settings.ccl_max_iters,
        mu=settings.ccl_mu,
        eps=settings.eps,
        seed=settings.seed,
    )
    probes: list[BisectionProbe] = []

    def probe(gamma: float) -> SynthesisResult | VerificationResult:
        result: SynthesisResult | VerificationResult
        if gains is not None:
            result = verify_gains(model, gains, gamma, settings)
            ok, status = result.feasible, result.outcome.status
        else:
            level = template.model_copy(update={"gamma": gamma})
            result = ccl_synthesize(model, level, settings)
            ok, status = result.converged, result.status
        probes.append(BisectionProbe(gamma=gamma, feasible=ok, status=status))
        logger.info(f"Probe gamma={gamma:.6g}: {status}")
        return result

    def feasible(result: SynthesisResult | VerificationResult) -> bool:
        if isinstance(result, SynthesisResult):
            return result.converged
        return result.feasible

    best = probe(hi)
    if not feasible(best):
        msg = f"Upper bracket level gamma={hi} is not feasible"
        logger.error(msg)
        raise NoFeasibleLevel(msg)
    if lo < hi:
        for _ in range(steps):
            mid = (lo + hi) / 2
            result = probe(mid)
            if feasible(result):
                hi, best = mid, result
            else:
                lo = mid
    return BisectionResult(
        gamma=hi,
        lower=lo,
        synthesis=best if isinstance(best, SynthesisResult) else None,
        verification=best if isinstance(best, VerificationResult) else None,
        probes=probes,
    )
