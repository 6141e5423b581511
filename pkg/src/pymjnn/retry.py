"""Solver fallback built on tenacity.

Conic solvers occasionally stop with a numerical error on problems that another solver
handles fine. Instead of failing, every solve walks a configured chain of solvers, one
attempt per solver, and logs each fallback through the standard logging bridge in
[`pymjnn.logger`](logger.md).

!!! Example
    ```python
    from pymjnn.retry import solver_attempts

    solvers = ["CLARABEL", "SCS"]
    for attempt in solver_attempts(solvers):
        with attempt:
            solver = solvers[attempt.retry_state.attempt_number - 1]
            problem.solve(solver=solver)
    ```
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from cvxpy.error import SolverError
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
)

from pymjnn.logger import _logger

if TYPE_CHECKING:
    from collections.abc import Sequence


def solver_attempts(solvers: Sequence[str]) -> Retrying:
    """Build the retrying iterator for a chain of solvers.

    One attempt is made per solver, without waiting in between. Only
    `cvxpy.error.SolverError` triggers a fallback; any other exception propagates
    immediately. Once the last solver fails, its `SolverError` is re-raised.

    Args:
        solvers (Sequence[str]): The solver names, in the order they should be tried.

    Returns:
        Retrying: The tenacity iterator, yielding one attempt per solver.

    Raises:
        ValueError: If `solvers` is empty.
    """
    if len(solvers) == 0:
        msg = "At least one solver must be configured"
        raise ValueError(msg)
    return Retrying(
        retry=retry_if_exception_type(SolverError),
        stop=stop_after_attempt(len(solvers)),
        wait=wait_none(),
        before_sleep=before_sleep_log(_logger, logging.INFO),  # ty: ignore[invalid-argument-type]
        reraise=True,
    )
