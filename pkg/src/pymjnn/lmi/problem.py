"""Matrix-inequality problems: variables, constraints, objective and couplings."""

from __future__ import annotations

from typing import TYPE_CHECKING, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from pymjnn.errors import MalformedProblem
from pymjnn.lmi.expressions import AffineMatrixExpr, ExprBuilder
from pymjnn.lmi.variables import DecisionVar  # noqa: TC001
from pymjnn.models.pydantic import Matrix  # noqa: TC001

if TYPE_CHECKING:
    from collections.abc import Mapping

    import numpy.typing as npt

Sense = Literal["NegDef", "PosDef", "PosSemidef"]
"""`NegDef` is `F <= -eps I`, `PosDef` is `F >= eps I` and `PosSemidef` is `F >= 0`."""


class Constraint(BaseModel):
    """One matrix inequality."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    expr: AffineMatrixExpr
    sense: Sense
    label: str = Field(default="", description="Where the constraint comes from.")


class LinearObjective(BaseModel):
    """Linear functional `sum_V <W_V, V>` of the decision variables, to be minimized."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    weights: dict[str, Matrix] = Field(
        description="Weight of every variable in the objective, `1 x 1` for scalars.",
    )

    def value(self, assignment: Mapping[str, npt.NDArray[np.float64]]) -> float:
        """Evaluate the objective.

        Args:
            assignment (Mapping[str, npt.NDArray[np.float64]]): The variable values.

        Returns:
            float: The objective value.
        """
        return float(
            sum(
                np.sum(w * np.asarray(assignment[name]).reshape(w.shape))
                for name, w in self.weights.items()
            ),
        )


class LmiProblem(BaseModel):
    """A set of matrix inequalities over declared decision variables.

    `couplings` lists `(P, X)` pairs that should be inverses of each other. Such a
    constraint is not convex; solvers refuse problems that carry couplings, and the
    cone complementarity loop in
    [`ccl_synthesize`](../synthesis.md#pymjnn.synthesis.ccl_synthesize) replaces them
    with `relaxed()` and a trace objective.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    variables: list[DecisionVar] = Field(default_factory=list)
    constraints: list[Constraint] = Field(default_factory=list)
    objective: LinearObjective | None = None
    couplings: list[tuple[str, str]] = Field(default_factory=list)

    @property
    def var_map(self) -> dict[str, DecisionVar]:
        """The declared variables by name."""
        return {v.name: v for v in self.variables}

    def check(self) -> None:
        """Check that the problem is well formed.

        Raises:
            MalformedProblem: If names repeat, a constraint references an undeclared
                variable or a block does not fit.
        """
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            msg = "Decision variable names must be unique"
            logger.error(msg)
            raise MalformedProblem(msg)
        declared = self.var_map
        for c in self.constraints:
            for t in c.expr.terms:
                if t.var not in declared:
                    msg = (
                        f"Constraint {c.label!r} references "
                        f"undeclared variable {t.var!r}"
                    )
                    logger.error(msg)
                    raise MalformedProblem(msg)
                var = declared[t.var]
                rows, cols = t.block_shape
                scalar_ok = var.kind == "scalar" and t.right is None
                matrix_ok = (
                    var.kind != "scalar"
                    and t.right is not None
                    and t.left.shape[1] == var.rows
                    and t.right.shape[0] == var.cols
                )
                fits = t.row + rows <= c.expr.size and t.col + cols <= c.expr.size
                square = not t.diagonal or rows == cols
                if not (scalar_ok or matrix_ok) or not fits or not square:
                    msg = f"Term of {t.var!r} in constraint {c.label!r} is ill-shaped"
                    logger.error(msg)
                    raise MalformedProblem(msg)
        for p, x in self.couplings:
            if p not in declared or x not in declared:
                msg = f"Coupling ({p}, {x}) references an undeclared variable"
                logger.error(msg)
                raise MalformedProblem(msg)
        if self.objective is not None:
            for name, w in self.objective.weights.items():
                if name not in declared or w.shape != declared[name].shape:
                    msg = (
                        f"Objective weight of {name!r} "
                        "does not match a declared variable"
                    )
                    logger.error(msg)
                    raise MalformedProblem(msg)

    def relaxed(self) -> LmiProblem:
        """Replace every inverse coupling `P X = I` by `[[P, I], [I, X]] >= 0`.

        Returns:
            LmiProblem: The convex relaxation, without couplings.
        """
        extra = []
        declared = self.var_map
        for p, x in self.couplings:
            size = declared[p].rows
            builder = ExprBuilder(2 * size)
            builder.var(p, np.eye(size), np.eye(size), 0, 0)
            builder.constant(np.eye(size), 0, size)
            builder.var(x, np.eye(size), np.eye(size), size, size)
            extra.append(
                Constraint(
                    expr=builder.build(),
                    sense="PosSemidef",
                    label=f"relax({p}, {x})",
                ),
            )
        return self.model_copy(
            update={"constraints": [*self.constraints, *extra], "couplings": []},
        )

    def with_objective(self, objective: LinearObjective | None) -> LmiProblem:
        """Return the same problem with another objective.

        Args:
            objective (LinearObjective | None): The new objective.

        Returns:
            LmiProblem: The updated problem.
        """
        return self.model_copy(update={"objective": objective})

    def evaluate(
        self,
        assignment: Mapping[str, npt.NDArray[np.float64]],
    ) -> list[npt.NDArray[np.float64]]:
        """Evaluate every constraint matrix at an assignment.

        This is how solutions of one problem are substituted into another, e.g. to
        compare two assemblies of the same conditions.

        Args:
            assignment (Mapping[str, npt.NDArray[np.float64]]): The variable values.

        Returns:
            list[npt.NDArray[np.float64]]: One symmetric matrix per constraint.

        Raises:
            MalformedProblem: If a referenced variable has no value.
        """
        needed = set().union(*(c.expr.variables for c in self.constraints))
        if missing := sorted(needed - set(assignment)):
            msg = f"Assignment is missing variables {missing}"
            logger.error(msg)
            raise MalformedProblem(msg)
        return [c.expr.value(assignment) for c in self.constraints]

    def dump(self) -> str:
        """Describe the problem as plain text, for debugging.

        Returns:
            str: One line per variable, then one block per constraint listing where
                every term sits.
        """
        lines = [f"variables ({len(self.variables)}):"]
        lines += [
            f"  {v.name}: {v.kind} {v.rows}x{v.cols} {v.positivity}"
            for v in self.variables
        ]
        lines.append(f"constraints ({len(self.constraints)}):")
        for idx, c in enumerate(self.constraints):
            size = c.expr.size
            lines.append(f"  [{idx}] {c.label or '-'}: {c.sense} {size}x{size}")
            nonzero = int(np.count_nonzero(c.expr.constant))
            lines.append(f"      constant: {nonzero} nonzero entries")
            for t in c.expr.terms:
                rows, cols = t.block_shape
                lines.append(f"      {t.var} at ({t.row}, {t.col}) {rows}x{cols}")
        if self.objective is not None:
            lines.append(f"objective: {sorted(self.objective.weights)}")
        if self.couplings:
            lines.append(f"couplings: {self.couplings}")
        return "\n".join(lines)
