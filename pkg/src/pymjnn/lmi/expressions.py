"""Affine symmetric-valued matrix expressions.

An expression is a symmetric constant plus a list of terms. A term places the block
`left @ V @ right` (or `v * left` for a scalar `v`) at a row and column offset and adds
its mirror image, so the value is symmetric for every assignment:

```
value = C + sum_t (F_t + F_t^T) * (1/2 if the block sits on the diagonal else 1)
```

Both the numeric value and the cvxpy expression are built from the same placement, so
what the solver sees and what the independent eigenvalue check replays are the same
matrix.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt

from pymjnn.models.pydantic import Matrix  # noqa: TC001

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    import cvxpy as cp
    import numpy.typing as npt


def _embed(size: int, start: int, length: int) -> sp.csr_matrix:
    return sp.eye(size, length, k=-start, format="csr")


class Term(BaseModel):
    """One variable placed into a block of an expression.

    For matrix variables the block is `left @ V @ right`; for scalar variables it is
    `v * left` and `right` is unused.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    var: str = Field(description="Name of the decision variable.")
    left: Matrix = Field(description="Left multiplier, or the block of a scalar term.")
    right: Matrix | None = Field(default=None, description="Right multiplier.")
    row: NonNegativeInt = Field(description="First row of the block.")
    col: NonNegativeInt = Field(description="First column of the block.")

    @property
    def block_shape(self) -> tuple[int, int]:
        """Shape of the placed block."""
        if self.right is None:
            return int(self.left.shape[0]), int(self.left.shape[1])
        return int(self.left.shape[0]), int(self.right.shape[1])

    @property
    def diagonal(self) -> bool:
        """Whether the block sits on the diagonal and is mirrored onto itself."""
        return self.row == self.col

    def block(self, value: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        """Evaluate the block for a variable value.

        Args:
            value (npt.NDArray[np.float64]): The variable value, `1 x 1` for scalars.

        Returns:
            npt.NDArray[np.float64]: The block.
        """
        if self.right is None:
            return float(np.asarray(value).reshape(-1)[0]) * self.left
        return self.left @ value @ self.right

    def place(
        self,
        size: int,
        block: npt.NDArray[np.float64],
    ) -> npt.NDArray[np.float64]:
        """Embed a block and its mirror image into a `size x size` matrix.

        Args:
            size (int): The side length of the expression.
            block (npt.NDArray[np.float64]): The evaluated block.

        Returns:
            npt.NDArray[np.float64]: The symmetric contribution.
        """
        full = np.zeros((size, size))
        rows, cols = block.shape
        full[self.row : self.row + rows, self.col : self.col + cols] = block
        out = full + full.T
        return out / 2 if self.diagonal else out

    def place_cvxpy(self, size: int, var: cp.Expression) -> cp.Expression:
        """Embed the block and its mirror image as a cvxpy expression.

        Args:
            size (int): The side length of the expression.
            var (cp.Expression): The cvxpy variable this term refers to.

        Returns:
            cp.Expression: The symmetric contribution.
        """
        rows, cols = self.block_shape
        er = _embed(size, self.row, rows)
        ec = _embed(size, self.col, cols)
        if self.right is None:
            full = sp.csr_matrix(er @ self.left @ ec.T)
            return var * ((full + full.T) / 2 if self.diagonal else full + full.T)
        left = sp.csr_matrix(er @ self.left)
        right = sp.csr_matrix(self.right @ ec.T)
        placed = left @ var @ right
        out = placed + placed.T
        return out / 2 if self.diagonal else out


class AffineMatrixExpr(BaseModel):
    """A symmetric matrix affine in the decision variables."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    size: NonNegativeInt = Field(description="Side length of the matrix.")
    constant: Matrix = Field(description="Symmetric constant part.")
    terms: list[Term] = Field(default_factory=list)

    @property
    def variables(self) -> set[str]:
        """Names of the variables the expression references."""
        return {t.var for t in self.terms}

    def value(
        self,
        assignment: Mapping[str, npt.NDArray[np.float64]],
    ) -> npt.NDArray[np.float64]:
        """Evaluate the expression.

        Args:
            assignment (Mapping[str, npt.NDArray[np.float64]]): Value of every
                referenced variable.

        Returns:
            npt.NDArray[np.float64]: The symmetric value.
        """
        out = np.array(self.constant)
        for t in self.terms:
            out = out + t.place(self.size, t.block(assignment[t.var]))
        return out

    def to_cvxpy(self, variables: Mapping[str, Any]) -> cp.Expression:
        """Build the cvxpy expression.

        Args:
            variables (Mapping[str, Any]): The cvxpy variable of every referenced name.

        Returns:
            cp.Expression: The affine expression.
        """
        out: Any = np.array(self.constant)
        for t in self.terms:
            out = out + t.place_cvxpy(self.size, variables[t.var])
        return out

    def scaled(self, factor: float) -> AffineMatrixExpr:
        """Multiply the whole expression by a constant.

        Args:
            factor (float): The factor.

        Returns:
            AffineMatrixExpr: The scaled expression.
        """
        return AffineMatrixExpr(
            size=self.size,
            constant=factor * self.constant,
            terms=[
                t.model_copy(update={"left": factor * t.left}) for t in self.terms
            ],
        )

    def restricted(self, indices: Sequence[int]) -> AffineMatrixExpr:
        """Keep the principal submatrix on a set of rows and columns.

        A principal submatrix of a definite matrix is definite with the same sign, so
        the result is a necessary condition of the original one. Terms whose block
        misses the kept rows or columns are dropped; the others are cut down to the
        kept part.

        ???+ example
            ```python
            expr = ExprBuilder(2).var("P", -np.eye(1), np.eye(1), 1, 1).build()
            assert expr.restricted([1]).value({"P": np.eye(1)}).tolist() == [[-1.0]]
            ```

        Args:
            indices (Sequence[int]): The rows, and columns, to keep.

        Returns:
            AffineMatrixExpr: The restricted expression.
        """
        idx = sorted(set(indices))
        position = {k: a for a, k in enumerate(idx)}
        terms = []
        for t in self.terms:
            rows, cols = t.block_shape
            keep_r = [k - t.row for k in idx if t.row <= k < t.row + rows]
            keep_c = [k - t.col for k in idx if t.col <= k < t.col + cols]
            if not keep_r or not keep_c:
                continue
            left = t.left[keep_r]
            terms.append(
                Term(
                    var=t.var,
                    left=left if t.right is not None else left[:, keep_c],
                    right=None if t.right is None else t.right[:, keep_c],
                    row=position[t.row + keep_r[0]],
                    col=position[t.col + keep_c[0]],
                ),
            )
        return AffineMatrixExpr(
            size=len(idx),
            constant=self.constant[np.ix_(idx, idx)],
            terms=terms,
        )


class ExprBuilder:
    """Accumulate blocks into an `AffineMatrixExpr`.

    Blocks are given for the upper triangle; their mirror images are added
    automatically.

    ???+ example "The block `[[-P, P A], [A^T P, -P]]`"
        ```python
        builder = ExprBuilder(2 * n)
        builder.var("P", -np.eye(n), np.eye(n), 0, 0)
        builder.var("P", np.eye(n), A, 0, n)
        builder.var("P", -np.eye(n), np.eye(n), n, n)
        expr = builder.build()
        ```
    """

    def __init__(self, size: int) -> None:
        self.size = size
        self._constant = np.zeros((size, size))
        self._terms: list[Term] = []

    def constant(self, block: npt.ArrayLike, row: int, col: int) -> ExprBuilder:
        """Add a constant block and its mirror image.

        Args:
            block (npt.ArrayLike): The block.
            row (int): First row.
            col (int): First column.

        Returns:
            ExprBuilder: The builder, for chaining.
        """
        block = np.atleast_2d(np.asarray(block, dtype=np.float64))
        full = np.zeros((self.size, self.size))
        rows, cols = block.shape
        full[row : row + rows, col : col + cols] = block
        sym = full + full.T
        self._constant = self._constant + (sym / 2 if row == col else sym)
        return self

    def var(
        self,
        name: str,
        left: npt.ArrayLike,
        right: npt.ArrayLike,
        row: int,
        col: int,
    ) -> ExprBuilder:
        """Add the block `left @ V @ right` of a matrix variable.

        Args:
            name (str): The variable name.
            left (npt.ArrayLike): Left multiplier.
            right (npt.ArrayLike): Right multiplier.
            row (int): First row.
            col (int): First column.

        Returns:
            ExprBuilder: The builder, for chaining.
        """
        self._terms.append(
            Term(
                var=name,
                left=np.atleast_2d(np.asarray(left, dtype=np.float64)),
                right=np.atleast_2d(np.asarray(right, dtype=np.float64)),
                row=row,
                col=col,
            ),
        )
        return self

    def scalar(
        self,
        name: str,
        block: npt.ArrayLike,
        row: int,
        col: int,
    ) -> ExprBuilder:
        """Add the block `v * block` of a scalar variable.

        Args:
            name (str): The variable name.
            block (npt.ArrayLike): The constant block multiplying the scalar.
            row (int): First row.
            col (int): First column.

        Returns:
            ExprBuilder: The builder, for chaining.
        """
        self._terms.append(
            Term(
                var=name,
                left=np.atleast_2d(np.asarray(block, dtype=np.float64)),
                row=row,
                col=col,
            ),
        )
        return self

    def build(self) -> AffineMatrixExpr:
        """Freeze the accumulated blocks.

        Returns:
            AffineMatrixExpr: The expression.
        """
        return AffineMatrixExpr(
            size=self.size,
            constant=self._constant,
            terms=self._terms,
        )
