"""Exceptions raised by pymjnn.

Every exception derives from `PymjnnError`, which itself is a `ValueError`, so callers
that only care about "bad input or infeasible request" can catch `ValueError` the same
way they would for a `pydantic.ValidationError`.

Model-level problems found by
[`validate_model`](core.md#pymjnn.core.validate_model) are raised as subclasses of
`ModelValidationError`, which carries the full list of violations, not only the first
one.

!!! Example
    ```python
    from pymjnn.core import validate_model
    from pymjnn.errors import ModelValidationError

    try:
        validate_model(model)
    except ModelValidationError as e:
        for violation in e.violations:
            print(violation.kind, violation.message)
    ```
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Sequence

    from pymjnn.models.results import Violation


class PymjnnError(ValueError):
    """Base class for every error raised by pymjnn."""


class ModelValidationError(PymjnnError):
    """A model failed one or more consistency checks.

    Attributes:
        violations (list[Violation]): Every violation found, in the order they were
            detected.
    """

    def __init__(self, msg: str, violations: Sequence[Violation] = ()) -> None:
        super().__init__(msg)
        self.violations = list(violations)


class DimensionMismatch(ModelValidationError):
    """Matrices that must share a dimension do not."""


class RowSumViolation(ModelValidationError):
    """A transition row does not sum to one, or its known mass exceeds one."""


class DelayOrderViolation(ModelValidationError):
    """The delay bounds are not `0 < tau_min <= tau_max`."""


class ProbabilityRangeError(ModelValidationError):
    """A known transition probability lies outside of `[0, 1]`."""


class ProtocolMismatch(ModelValidationError):
    """The node partition or the node weights do not fit the output dimension."""


class CompletionMismatch(ModelValidationError):
    """A transition completion disagrees with a known cell or has the wrong size."""


class IndexOutOfRange(PymjnnError):
    """A mode or node index is outside of the model."""


class GridMismatch(PymjnnError):
    """A gain grid is not congruent with the model's mode and node counts."""


class RequiresFullTP(PymjnnError):
    """The requested assembly needs a fully known transition matrix."""


class MalformedProblem(PymjnnError):
    """A matrix-inequality problem references undeclared or ill-shaped variables."""


class Unbounded(PymjnnError):
    """A linear objective decreases without bound over the feasible set."""


class NumericOverflow(PymjnnError):
    """A simulated trajectory diverged.

    Attributes:
        step (int): The time step at which divergence was detected.
    """

    def __init__(self, msg: str, step: int) -> None:
        super().__init__(msg)
        self.step = step


class DocumentFormatError(PymjnnError):
    """A file parsed as JSON but does not have the shape of a document."""


class CertificateMismatch(PymjnnError):
    """A certificate does not have the dimensions the model requires."""


class NoFeasibleLevel(PymjnnError):
    """The upper end of a performance bracket is not feasible."""


class InfeasibleInit(PymjnnError):
    """The relaxed synthesis conditions have no solution."""


class MaxIters(PymjnnError):
    """The synthesis loop ran out of iterations before the coupling closed."""
