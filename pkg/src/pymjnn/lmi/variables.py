"""Decision variables of matrix-inequality problems."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveInt

VarKind = Literal["symmetric", "scalar", "matrix"]
Positivity = Literal["strict", "nonneg", "free"]


class DecisionVar(BaseModel):
    """A symmetric matrix, scalar or free matrix unknown.

    `positivity` is the implicit bound every solve adds: `strict` means `V >= eps I`
    (or `v >= eps`), `nonneg` means `V >= 0`, `free` adds nothing. Free matrices are
    always `free`.

    ???+ example
        ```python
        P = DecisionVar.symmetric("P[1,1]", 4)
        rho = DecisionVar.scalar("rho1[1]")
        K = DecisionVar.matrix("K[1,1]", 4, 2)
        ```
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(min_length=1, description="Identifier, unique within a problem.")
    kind: VarKind
    rows: PositiveInt = 1
    cols: PositiveInt = 1
    positivity: Positivity = "strict"

    @property
    def shape(self) -> tuple[int, int]:
        """The value shape, `(1, 1)` for scalars."""
        return self.rows, self.cols

    @classmethod
    def symmetric(
        cls,
        name: str,
        size: int,
        positivity: Positivity = "strict",
    ) -> DecisionVar:
        """Declare a symmetric matrix variable.

        Args:
            name (str): The identifier.
            size (int): The side length.
            positivity (Positivity, optional): The implicit bound. Defaults to
                `"strict"`.

        Returns:
            DecisionVar: The declaration.
        """
        return cls(
            name=name,
            kind="symmetric",
            rows=size,
            cols=size,
            positivity=positivity,
        )

    @classmethod
    def scalar(cls, name: str, positivity: Positivity = "strict") -> DecisionVar:
        """Declare a scalar variable.

        Args:
            name (str): The identifier.
            positivity (Positivity, optional): The implicit bound. Defaults to
                `"strict"`.

        Returns:
            DecisionVar: The declaration.
        """
        return cls(name=name, kind="scalar", positivity=positivity)

    @classmethod
    def matrix(cls, name: str, rows: int, cols: int) -> DecisionVar:
        """Declare an unconstrained rectangular matrix variable.

        Args:
            name (str): The identifier.
            rows (int): The row count.
            cols (int): The column count.

        Returns:
            DecisionVar: The declaration.
        """
        return cls(name=name, kind="matrix", rows=rows, cols=cols, positivity="free")
