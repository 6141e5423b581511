"""Pydantic types shared by the pymjnn models.

These types restrict general numpy arrays and floats to the shapes the estimation
problem uses: symmetric and positive definite weights, transition cells that are either
a probability or the unknown marker `"?"`, and one-based `"i,m"` grid keys used in
files.
"""

from __future__ import annotations

import re
from typing import Annotated, Final, Literal

import numpy as np
import numpy.typing as npt
from pydantic import AfterValidator, Field

from pymjnn.models.pydantic import Matrix

UNKNOWN: Final = "?"
"""Marker used in files and in `TransitionSpec` for an unavailable probability."""

SYMMETRY_TOL: Final = 1e-12

TransitionCell = Annotated[float, Field(allow_inf_nan=False)] | Literal["?"]
"""Pydantic type for one cell of a partially known transition matrix."""


def check_square(m: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Check that a matrix is square.

    Args:
        m (npt.NDArray[np.float64]): The matrix to check.

    Returns:
        npt.NDArray[np.float64]: The unchanged matrix.

    Raises:
        ValueError: If the matrix is not square.
    """
    if m.shape[0] != m.shape[1]:
        msg = f"Matrix must be square, got shape {m.shape}"
        raise ValueError(msg)
    return m


def check_symmetric(m: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Check that a matrix is symmetric within `SYMMETRY_TOL`.

    Args:
        m (npt.NDArray[np.float64]): The matrix to check.

    Returns:
        npt.NDArray[np.float64]: The unchanged matrix.

    Raises:
        ValueError: If the matrix is not symmetric.
    """
    check_square(m)
    if not np.allclose(m, m.T, rtol=0.0, atol=SYMMETRY_TOL):
        msg = "Matrix must be symmetric"
        raise ValueError(msg)
    return m


def check_positive_definite(m: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Check that a symmetric matrix has a strictly positive smallest eigenvalue.

    Args:
        m (npt.NDArray[np.float64]): The matrix to check.

    Returns:
        npt.NDArray[np.float64]: The unchanged matrix.

    Raises:
        ValueError: If the matrix is not positive definite.
    """
    if m.size == 0 or np.linalg.eigvalsh(m).min() <= 0:
        msg = "Matrix must be positive definite"
        raise ValueError(msg)
    return m


SquareMatrix = Annotated[Matrix, AfterValidator(check_square)]
"""Pydantic type for a square matrix."""

SymmetricMatrix = Annotated[Matrix, AfterValidator(check_symmetric)]
"""Pydantic type for a symmetric matrix."""

SpdMatrix = Annotated[
    Matrix,
    AfterValidator(check_symmetric),
    AfterValidator(check_positive_definite),
]
"""Pydantic type for a symmetric positive definite matrix."""

_GRID_KEY = re.compile(r"^\s*(\d+)\s*,\s*(\d+)\s*$")


def parse_grid_key(key: str) -> tuple[int, int]:
    """Parse a one-based `"i,m"` grid key into zero-based indices.

    ???+ example
        ```python
        assert parse_grid_key("1,2") == (0, 1)
        ```

    Args:
        key (str): The key, two positive integers separated by a comma.

    Returns:
        tuple[int, int]: The zero-based `(mode, node)` pair.

    Raises:
        ValueError: If the key is not of the form `"i,m"` with `i, m >= 1`.
    """
    if (match := _GRID_KEY.match(key)) is None:
        msg = f"Invalid grid key `{key}`, expected `i,m`"
        raise ValueError(msg)
    i, m = int(match.group(1)), int(match.group(2))
    if i < 1 or m < 1:
        msg = f"Invalid grid key `{key}`, indices are one-based"
        raise ValueError(msg)
    return i - 1, m - 1


def format_grid_key(i: int, m: int) -> str:
    """Format zero-based indices as a one-based `"i,m"` grid key.

    Args:
        i (int): The zero-based mode index.
        m (int): The zero-based node index.

    Returns:
        str: The one-based key.
    """
    return f"{i + 1},{m + 1}"
