import numpy as np
import pandas as pd
import pytest
from cvxpy.error import SolverError

from pymjnn import sdp
from pymjnn.errors import MalformedProblem, Unbounded
from pymjnn.lmi import Constraint, DecisionVar, ExprBuilder, LinearObjective, LmiProblem
from pymjnn.sdp import (
    LinearMinimizer,
    constraint_residual,
    minimize_linear,
    solve_feasibility,
)


def _scalar_lyapunov(a_sq: float) -> LmiProblem:
    """`a^2 p - p < 0` with `p > 0`."""
    return LmiProblem(
        variables=[DecisionVar.symmetric("p", 1)],
        constraints=[
            Constraint(
                expr=ExprBuilder(1).var("p", [[a_sq - 1.0]], [[1.0]], 0, 0).build(),
                sense="NegDef",
            ),
        ],
    )


def _matrix_lyapunov(scale: float) -> LmiProblem:
    """`A^T P A - P < 0` with `P > 0`, for `A` an upper triangle scaled by `scale`."""
    a = scale * np.array([[0.5, 0.2], [0.0, 0.3]])
    builder = ExprBuilder(2).var("P", a.T, a, 0, 0)
    builder.var("P", -np.eye(2), np.eye(2), 0, 0)
    return LmiProblem(
        variables=[DecisionVar.symmetric("P", 2)],
        constraints=[Constraint(expr=builder.build(), sense="NegDef")],
    )


def _scaled(problem: LmiProblem, factor: float) -> LmiProblem:
    constraints = [
        c.model_copy(update={"expr": c.expr.scaled(factor)})
        for c in problem.constraints
    ]
    return problem.model_copy(update={"constraints": constraints})


def _unit_trace_problem() -> LmiProblem:
    """`P >= I` over a symmetric `2 x 2` block."""
    return LmiProblem(
        variables=[DecisionVar.symmetric("P", 2)],
        constraints=[
            Constraint(
                expr=ExprBuilder(2)
                .var("P", np.eye(2), np.eye(2), 0, 0)
                .constant(-np.eye(2), 0, 0)
                .build(),
                sense="PosSemidef",
            ),
        ],
    )


def test_feasible_lyapunov(settings):
    outcome = solve_feasibility(_scalar_lyapunov(0.25), settings)

    assert outcome.feasible
    assert outcome.margin > 0
    assert outcome.residual <= settings.tol
    assert outcome.assignment["p"][0, 0] > 0
    assert outcome.solver in settings.solvers


def test_infeasible_lyapunov(settings):
    outcome = solve_feasibility(_scalar_lyapunov(2.25), settings)

    assert outcome.status == "Infeasible"
    assert not outcome.feasible


def test_minimize_trace():
    problem = LmiProblem(
        variables=[DecisionVar.symmetric("P", 2)],
        constraints=[
            Constraint(
                expr=ExprBuilder(2)
                .var("P", np.eye(2), np.eye(2), 0, 0)
                .constant(-np.eye(2), 0, 0)
                .build(),
                sense="PosSemidef",
            ),
        ],
    )

    outcome = minimize_linear(problem, LinearObjective(weights={"P": np.eye(2)}))

    assert outcome.feasible
    assert outcome.objective == pytest.approx(2.0, abs=1e-4)
    assert np.allclose(outcome.assignment["P"], np.eye(2), atol=1e-3)


def test_minimize_scalar():
    problem = LmiProblem(
        variables=[DecisionVar.scalar("p")],
        constraints=[
            Constraint(
                expr=ExprBuilder(1)
                .scalar("p", [[1.0]], 0, 0)
                .constant([[-3.0]], 0, 0)
                .build(),
                sense="PosSemidef",
            ),
        ],
        objective=LinearObjective(weights={"p": np.array([[1.0]])}),
    )

    outcome = minimize_linear(problem)

    assert outcome.feasible
    assert outcome.scalar("p") == pytest.approx(3.0, abs=1e-4)


def test_minimize_unbounded():
    problem = LmiProblem(
        variables=[DecisionVar.scalar("t", positivity="free")],
        constraints=[
            Constraint(
                expr=ExprBuilder(1)
                .scalar("t", [[-1.0]], 0, 0)
                .constant([[1.0]], 0, 0)
                .build(),
                sense="PosSemidef",
            ),
        ],
    )

    with pytest.raises(Unbounded):
        minimize_linear(problem, LinearObjective(weights={"t": np.array([[1.0]])}))


def test_minimize_requires_objective():
    with pytest.raises(MalformedProblem, match="No objective"):
        minimize_linear(_scalar_lyapunov(0.25))


def test_solve_refuses_couplings():
    problem = LmiProblem(
        variables=[DecisionVar.symmetric("P", 1), DecisionVar.symmetric("X", 1)],
        couplings=[("P", "X")],
    )

    with pytest.raises(MalformedProblem, match="relaxed"):
        solve_feasibility(problem)

    assert solve_feasibility(problem.relaxed()).feasible


def test_empty_problem_is_feasible():
    outcome = solve_feasibility(LmiProblem())

    assert outcome.feasible
    assert outcome.residual == 0.0


def test_every_solver_fails(mocker, settings):
    solve = mocker.patch("cvxpy.Problem.solve", side_effect=SolverError("boom"))

    outcome = solve_feasibility(_scalar_lyapunov(0.25), settings)

    assert outcome.status == "IterationLimit"
    assert outcome.residual == float("inf")
    assert outcome.solver is None
    assert solve.call_count == len(settings.solvers)


def test_constraint_residual():
    problem = _scalar_lyapunov(0.25)

    inside = constraint_residual(problem, {"p": np.array([[1.0]])}, 1e-7)
    outside = constraint_residual(problem, {"p": np.array([[-1.0]])}, 1e-7)

    assert inside == pytest.approx(-0.75 + 1e-7)
    assert outside == pytest.approx(1.0 + 1e-7)
    assert constraint_residual(LmiProblem(), {}, 1e-7) == 0.0


def test_solve_log(tmp_path):
    path = tmp_path / "solves.csv"

    solve_feasibility(_scalar_lyapunov(0.25), log_path=path)
    solve_feasibility(_scalar_lyapunov(2.25), log_path=path)

    log = pd.read_csv(path)
    assert log["kind"].tolist() == ["feasibility", "feasibility"]
    assert log["status"].tolist() == ["Feasible", "Infeasible"]
    assert list(log.columns) == [
        "kind",
        "solver",
        "status",
        "objective",
        "margin",
        "residual",
    ]


@pytest.mark.parametrize(
    "problem",
    [
        _scalar_lyapunov(0.25),
        _scalar_lyapunov(2.25),
        _matrix_lyapunov(1.0),
        _matrix_lyapunov(3.0),
    ],
)
def test_feasibility_is_deterministic(problem, settings):
    first = solve_feasibility(problem, settings)
    second = solve_feasibility(problem, settings)

    assert first.status == second.status
    assert first.solver == second.solver
    if first.margin is not None:
        assert second.margin == pytest.approx(first.margin, abs=1e-9)


def test_minimize_is_deterministic(settings):
    objective = LinearObjective(weights={"P": np.diag([1.0, 2.0])})

    first = minimize_linear(_unit_trace_problem(), objective, settings)
    second = minimize_linear(_unit_trace_problem(), objective, settings)

    assert first.status == second.status == "Feasible"
    assert second.objective == pytest.approx(first.objective, abs=1e-9)


@pytest.mark.parametrize(
    ("problem", "status"),
    [
        (_scalar_lyapunov(0.25), "Feasible"),
        (_scalar_lyapunov(2.25), "Infeasible"),
        (_matrix_lyapunov(1.0), "Feasible"),
        (_matrix_lyapunov(3.0), "Infeasible"),
    ],
)
def test_status_survives_constraint_scaling(problem, status, settings):
    assert solve_feasibility(problem, settings).status == status
    assert solve_feasibility(_scaled(problem, 10.0), settings).status == status


def test_linear_minimizer_reuses_problem(mocker, settings):
    declare = mocker.spy(sdp, "_declare")
    minimizer = LinearMinimizer(_unit_trace_problem(), ["P"], settings)

    first = minimizer.minimize(LinearObjective(weights={"P": np.eye(2)}))
    second = minimizer.minimize(LinearObjective(weights={"P": 2 * np.eye(2)}))

    assert declare.call_count == 1
    assert first.objective == pytest.approx(2.0, abs=1e-4)
    assert second.objective == pytest.approx(4.0, abs=1e-4)
    assert np.allclose(second.assignment["P"], np.eye(2), atol=1e-3)


def test_linear_minimizer_zero_weight_for_missing_names(settings):
    problem = _unit_trace_problem().model_copy(
        update={"variables": [DecisionVar.symmetric("P", 2), DecisionVar.scalar("q")]},
    )
    minimizer = LinearMinimizer(problem, ["P", "q"], settings)

    outcome = minimizer.minimize(LinearObjective(weights={"P": np.eye(2)}))

    assert outcome.feasible
    assert outcome.objective == pytest.approx(2.0, abs=1e-4)


def test_linear_minimizer_rejects_unknown_names(settings):
    with pytest.raises(MalformedProblem, match="'Q'"):
        LinearMinimizer(_unit_trace_problem(), ["Q"], settings)

    minimizer = LinearMinimizer(_unit_trace_problem(), ["P"], settings)
    with pytest.raises(MalformedProblem, match="not declared"):
        minimizer.minimize(LinearObjective(weights={"Q": np.eye(2)}))
    with pytest.raises(MalformedProblem, match="shape"):
        minimizer.minimize(LinearObjective(weights={"P": np.eye(3)}))
