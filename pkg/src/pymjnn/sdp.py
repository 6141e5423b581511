"""Semidefinite solves of assembled matrix-inequality problems.

Problems are translated to cvxpy and handed to the configured chain of conic solvers
(see [`pymjnn.retry`](retry.md)). Whatever a solver reports, the returned assignment is
replayed through an independent `numpy.linalg.eigvalsh` check, and an outcome is only
`Feasible` when the worst violation is below `Settings.tol`.

Feasibility is solved as a margin maximization: the largest `t <= margin_cap` such that
every strict constraint holds with slack `eps + t`. A feasible problem therefore comes
back with an interior point, and an optimal `t < 0` proves that no point satisfies the
strict constraints.

Loops that minimize many objectives over the same constraints, like the cone
complementarity loop, use a `LinearMinimizer`: the cvxpy problem is compiled once with
the objective weights as parameters and every further solve reuses it.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import cvxpy as cp
import numpy as np
import pandas as pd
from cvxpy.error import SolverError
from loguru import logger

from pymjnn.errors import MalformedProblem, Unbounded
from pymjnn.models.results import SolveOutcome, SolveStatus
from pymjnn.retry import solver_attempts
from pymjnn.settings import Settings

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping
    from pathlib import Path

    import numpy.typing as npt

    from pymjnn.lmi.problem import LinearObjective, LmiProblem

_SOLVED = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}
_INFEASIBLE = {cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE}
_UNBOUNDED = {cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE}


def constraint_residual(
    problem: LmiProblem,
    assignment: Mapping[str, npt.NDArray[np.float64]],
    eps: float,
) -> float:
    """Compute the worst violation of a problem at an assignment.

    `NegDef` constraints contribute `lambda_max(F) + eps`, `PosDef` constraints
    `eps - lambda_min(F)`, `PosSemidef` constraints `-lambda_min(F)`, and the implicit
    positivity of the variables the same way. The result is negative when every
    constraint holds with room to spare.

    Args:
        problem (LmiProblem): The problem.
        assignment (Mapping[str, npt.NDArray[np.float64]]): The variable values.
        eps (float): The strictness slack.

    Returns:
        float: The worst violation, `0.0` for a problem without constraints or bounded
            variables.
    """
    worst: list[float] = []
    for c, value in zip(problem.constraints, problem.evaluate(assignment), strict=True):
        eig = np.linalg.eigvalsh(value)
        if c.sense == "NegDef":
            worst.append(float(eig[-1]) + eps)
        elif c.sense == "PosDef":
            worst.append(eps - float(eig[0]))
        else:
            worst.append(-float(eig[0]))
    for v in problem.variables:
        if v.positivity == "free" or v.name not in assignment:
            continue
        value = np.atleast_2d(assignment[v.name])
        if v.kind == "symmetric":
            low = float(np.linalg.eigvalsh(value)[0])
        else:
            low = float(value[0, 0])
        worst.append((eps if v.positivity == "strict" else 0.0) - low)
    return max(worst, default=0.0)


def _declare(
    problem: LmiProblem,
    settings: Settings,
    extra: Any,
) -> tuple[dict[str, Any], list[Any]]:
    variables: dict[str, Any] = {}
    constraints: list[Any] = []
    for v in problem.variables:
        if v.kind == "symmetric":
            var = cp.Variable((v.rows, v.rows), symmetric=True, name=v.name)
            eye = np.eye(v.rows)
            if v.positivity == "strict":
                constraints.append(var >> (settings.eps + extra) * eye)
            elif v.positivity == "nonneg":
                constraints.append(var >> 0)
            if v.positivity != "free":
                constraints.append(var << settings.var_bound * eye)
        elif v.kind == "scalar":
            var = cp.Variable(name=v.name)
            if v.positivity == "strict":
                constraints.append(var >= settings.eps + extra)
            elif v.positivity == "nonneg":
                constraints.append(var >= 0)
            if v.positivity != "free":
                constraints.append(var <= settings.var_bound)
        else:
            var = cp.Variable((v.rows, v.cols), name=v.name)
        variables[v.name] = var
    for c in problem.constraints:
        d = c.expr.size
        slack = cp.Variable((d, d), symmetric=True)
        constraints.append(slack == c.expr.to_cvxpy(variables))
        eye = np.eye(d)
        if c.sense == "NegDef":
            constraints.append(slack << -(settings.eps + extra) * eye)
        elif c.sense == "PosDef":
            constraints.append(slack >> (settings.eps + extra) * eye)
        else:
            constraints.append(slack >> 0)
    return variables, constraints


def _values(
    problem: LmiProblem,
    variables: Mapping[str, Any],
) -> dict[str, npt.NDArray[np.float64]]:
    out = {}
    for v in problem.variables:
        value = np.atleast_2d(np.asarray(variables[v.name].value, dtype=np.float64))
        if v.kind == "symmetric":
            value = (value + value.T) / 2
        out[v.name] = value
    return out


def _solve(
    prob: cp.Problem,
    settings: Settings,
    *,
    warm_start: bool = False,
) -> str | None:
    try:
        for attempt in solver_attempts(settings.solvers):
            with attempt:
                solver = settings.solvers[attempt.retry_state.attempt_number - 1]
                logger.debug(f"Solving with {solver}")
                prob.solve(solver=solver, warm_start=warm_start)
                if prob.status not in _SOLVED | _INFEASIBLE | _UNBOUNDED:
                    msg = f"Solver {solver} stopped with status {prob.status}"
                    raise SolverError(msg)
                return solver
    except SolverError as e:
        logger.warning(f"Every configured solver failed: {e}")
    return None


def _check(problem: LmiProblem) -> None:
    problem.check()
    if problem.couplings:
        msg = "Problems with inverse couplings must be relaxed before solving"
        logger.error(msg)
        raise MalformedProblem(msg)


def _log(path: Path | None, outcome: SolveOutcome, kind: str) -> None:
    if path is None:
        return
    row = {
        "kind": kind,
        "solver": outcome.solver,
        "status": outcome.status,
        "objective": outcome.objective,
        "margin": outcome.margin,
        "residual": outcome.residual,
    }
    pd.DataFrame([row]).to_csv(
        path,
        mode="a",
        header=not path.exists(),
        index=False,
        float_format="%.17g",
    )


def solve_feasibility(
    problem: LmiProblem,
    settings: Settings | None = None,
    *,
    log_path: Path | None = None,
) -> SolveOutcome:
    """Find a point satisfying every constraint of a problem.

    ???+ example
        ```python
        builder = ExprBuilder(1).var("p", [[-0.75]], [[1.0]], 0, 0)
        problem = LmiProblem(
            variables=[DecisionVar.symmetric("p", 1)],
            constraints=[Constraint(expr=builder.build(), sense="NegDef")],
        )
        assert solve_feasibility(problem).feasible
        ```

    Args:
        problem (LmiProblem): The problem, without couplings.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.
        log_path (Path | None, optional): CSV file the outcome is appended to.
            Defaults to no log.

    Returns:
        SolveOutcome: `Feasible` with a certified assignment, `Infeasible` when the
            optimal margin is negative, or `IterationLimit` when no solver produced a
            certified answer.

    Raises:
        MalformedProblem: If the problem is ill-formed or carries couplings.
    """
    settings = settings or Settings()
    _check(problem)
    if not problem.variables and not problem.constraints:
        return SolveOutcome(status="Feasible", residual=0.0)
    t = cp.Variable(name="margin")
    variables, constraints = _declare(problem, settings, t)
    constraints.append(t <= settings.margin_cap)
    prob = cp.Problem(cp.Maximize(t), constraints)
    solver = _solve(prob, settings)
    status: SolveStatus
    if solver is None:
        outcome = SolveOutcome(status="IterationLimit", residual=float("inf"))
    elif prob.status in _INFEASIBLE:
        outcome = SolveOutcome(
            status="Infeasible",
            residual=float("inf"),
            solver=solver,
        )
    else:
        assignment = _values(problem, variables)
        residual = constraint_residual(problem, assignment, settings.eps)
        margin = float(t.value)
        if margin < 0:
            status = "Infeasible"
        elif residual <= settings.tol:
            status = "Feasible"
        else:
            status = "IterationLimit"
        outcome = SolveOutcome(
            status=status,
            assignment=assignment,
            residual=residual,
            margin=margin,
            solver=solver,
        )
    logger.debug(
        f"Feasibility: {outcome.status}, margin={outcome.margin}, "
        f"residual={outcome.residual:.3g}",
    )
    _log(log_path, outcome, "feasibility")
    return outcome


class LinearMinimizer:
    """Minimize a sequence of linear objectives over one fixed set of constraints.

    The cvxpy problem is built once, with the objective weights as parameters. Every
    call to `minimize` only updates the weights, so the solver data is reused and the
    previous solution serves as a warm start.

    Strict constraints are imposed with slack `eps + pad`, so that the minimizer, which
    lies on the boundary of that set, still passes the eigenvalue check at `eps`.

    ???+ example
        ```python
        minimizer = LinearMinimizer(relaxed, ["P[1,1]", "X[1,1]"])
        for weights in linearizations:
            outcome = minimizer.minimize(LinearObjective(weights=weights))
        ```
    """

    def __init__(
        self,
        problem: LmiProblem,
        names: Iterable[str],
        settings: Settings | None = None,
        *,
        log_path: Path | None = None,
    ) -> None:
        """Build the parametrized problem.

        Args:
            problem (LmiProblem): The problem, without couplings.
            names (Iterable[str]): The variables the objectives may weight.
            settings (Settings | None, optional): Numerical settings. Defaults to
                `Settings()`.
            log_path (Path | None, optional): CSV file every outcome is appended to.
                Defaults to no log.

        Raises:
            MalformedProblem: If the problem is ill-formed, carries couplings or a
                name is not a declared variable.
        """
        self.settings = settings or Settings()
        self.problem = problem.with_objective(None)
        self.log_path = log_path
        _check(self.problem)
        declared = self.problem.var_map
        self._weights: dict[str, cp.Parameter] = {}
        for name in dict.fromkeys(names):
            if name not in declared:
                msg = f"Objective weight of {name!r} does not match a declared variable"
                logger.error(msg)
                raise MalformedProblem(msg)
            self._weights[name] = cp.Parameter(declared[name].shape, name=f"w:{name}")
        self._variables, constraints = _declare(
            self.problem,
            self.settings,
            self.settings.pad,
        )
        terms = [
            cp.sum(cp.multiply(w, self._variables[name]))
            for name, w in self._weights.items()
        ]
        total = cp.sum(cp.hstack(terms)) if terms else cp.Constant(0.0)
        self._prob = cp.Problem(cp.Minimize(total), constraints)

    def minimize(self, objective: LinearObjective) -> SolveOutcome:
        """Minimize one objective.

        Variables without a weight in `objective` get weight zero.

        Args:
            objective (LinearObjective): The objective.

        Returns:
            SolveOutcome: `Feasible` with the minimizer and its objective, `Infeasible`,
                or `IterationLimit` when no solver produced a certified answer.

        Raises:
            MalformedProblem: If the objective weights a variable outside `names`, or
                a weight has the wrong shape.
            Unbounded: If the objective decreases without bound.
        """
        if extra := sorted(set(objective.weights) - set(self._weights)):
            msg = f"Objective weights {extra} were not declared as parameters"
            logger.error(msg)
            raise MalformedProblem(msg)
        for name, param in self._weights.items():
            w = objective.weights.get(name)
            if w is not None and w.shape != param.shape:
                msg = f"Objective weight of {name!r} has shape {w.shape}"
                logger.error(msg)
                raise MalformedProblem(msg)
            param.value = np.zeros(param.shape) if w is None else np.asarray(w)
        solver = _solve(self._prob, self.settings, warm_start=True)
        if solver is not None and self._prob.status in _UNBOUNDED:
            msg = "Objective is unbounded below over the constraints"
            logger.error(msg)
            raise Unbounded(msg)
        status: SolveStatus
        if solver is None:
            outcome = SolveOutcome(status="IterationLimit", residual=float("inf"))
        elif self._prob.status in _INFEASIBLE:
            outcome = SolveOutcome(
                status="Infeasible",
                residual=float("inf"),
                solver=solver,
            )
        else:
            assignment = _values(self.problem, self._variables)
            residual = constraint_residual(self.problem, assignment, self.settings.eps)
            status = "Feasible" if residual <= self.settings.tol else "IterationLimit"
            outcome = SolveOutcome(
                status=status,
                assignment=assignment,
                residual=residual,
                objective=objective.value(assignment),
                solver=solver,
            )
        logger.debug(f"Minimization: {outcome.status}, objective={outcome.objective}")
        _log(self.log_path, outcome, "minimize")
        return outcome


def minimize_linear(
    problem: LmiProblem,
    objective: LinearObjective | None = None,
    settings: Settings | None = None,
    *,
    log_path: Path | None = None,
) -> SolveOutcome:
    """Minimize a linear objective over the constraints of a problem.

    This is a single solve of a [`LinearMinimizer`](#pymjnn.sdp.LinearMinimizer).

    Args:
        problem (LmiProblem): The problem, without couplings.
        objective (LinearObjective | None, optional): The objective. Defaults to the
            problem's own objective.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.
        log_path (Path | None, optional): CSV file the outcome is appended to.
            Defaults to no log.

    Returns:
        SolveOutcome: `Feasible` with the minimizer and its objective, `Infeasible`, or
            `IterationLimit` when no solver produced a certified answer.

    Raises:
        MalformedProblem: If there is no objective, or the problem is ill-formed.
        Unbounded: If the objective decreases without bound.
    """
    objective = objective or problem.objective
    if objective is None:
        msg = "No objective to minimize"
        logger.error(msg)
        raise MalformedProblem(msg)
    problem.with_objective(objective).check()
    minimizer = LinearMinimizer(problem, objective.weights, settings, log_path=log_path)
    return minimizer.minimize(objective)
