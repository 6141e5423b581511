"""Constant block helpers: Schur embedding, sector multipliers and block layouts."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from pymjnn.errors import DimensionMismatch

if TYPE_CHECKING:
    import numpy.typing as npt

    from pymjnn.models.plant import SectorBounds


def schur_embed(
    A1: npt.NDArray[np.float64],
    A2: npt.NDArray[np.float64],
    A3: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Build `[[A1, A3^T], [A3, -A2]]`.

    For `A2 > 0`, the block is negative definite if and only if
    `A1 + A3^T A2^{-1} A3 < 0`. This is how every quadratic term of the stability and
    performance conditions is made linear in the unknowns.

    ???+ example
        ```python
        block = schur_embed(np.array([[-1.0]]), np.array([[1.0]]), np.array([[0.5]]))
        assert np.allclose(block, [[-1.0, 0.5], [0.5, -1.0]])
        ```

    Args:
        A1 (npt.NDArray[np.float64]): Symmetric, `p x p`.
        A2 (npt.NDArray[np.float64]): Symmetric positive definite, `s x s`.
        A3 (npt.NDArray[np.float64]): `s x p`.

    Returns:
        npt.NDArray[np.float64]: The `(p + s) x (p + s)` block.

    Raises:
        DimensionMismatch: If the three blocks are not conformal.
    """
    A1, A2, A3 = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (A1, A2, A3))
    p, s = A1.shape[0], A2.shape[0]
    if A1.shape != (p, p) or A2.shape != (s, s) or A3.shape != (s, p):
        msg = f"Blocks are not conformal: A1 {A1.shape}, A2 {A2.shape}, A3 {A3.shape}"
        logger.error(msg)
        raise DimensionMismatch(msg)
    return np.block([[A1, A3.T], [A3, -A2]])


def schur_complement_sign_agrees(
    A1: npt.NDArray[np.float64],
    A2: npt.NDArray[np.float64],
    A3: npt.NDArray[np.float64],
) -> bool:
    """Check that the embedding and its complement agree on negative definiteness.

    Args:
        A1 (npt.NDArray[np.float64]): Symmetric, `p x p`.
        A2 (npt.NDArray[np.float64]): Symmetric positive definite, `s x s`.
        A3 (npt.NDArray[np.float64]): `s x p`.

    Returns:
        bool: Whether both or neither are negative definite.
    """
    block = schur_embed(A1, A2, A3)
    complement = A1 + A3.T @ np.linalg.solve(A2, A3)
    block_neg = bool(np.linalg.eigvalsh(block).max() < 0)
    complement_neg = bool(np.linalg.eigvalsh((complement + complement.T) / 2).max() < 0)
    return block_neg == complement_neg


def sector_multiplier_blocks(
    sector: SectorBounds,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Build the S-procedure weights of the sector condition on `f_bar = [f; f]`.

    The sector condition is the quadratic form `[x; f]^T [[F3, -F4], [-F4^T, I]] [x; f]
    <= 0` on both copies of the activation. `F3` is symmetrized as
    `(F1^T F2 + F2^T F1) / 2`, which equals `(F1^T F2 + F1 F2^T) / 2` for diagonal
    bounds.

    Args:
        sector (SectorBounds): The sector bounds.

    Returns:
        tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]: `F3` and `F4`, both
            `2n x 2n`.
    """
    f1, f2 = sector.F1, sector.F2
    f3 = (f1.T @ f2 + f2.T @ f1) / 2
    f4 = (f1 + f2).T / 2
    eye = np.eye(2)
    return np.kron(eye, f3), np.kron(eye, f4)


def eta_selector(n: int, m: int) -> npt.NDArray[np.float64]:
    """Build the map from `eta` to the stacked activation arguments `[x; x; e_x; e_x]`.

    Args:
        n (int): The plant state dimension.
        m (int): The measurement dimension.

    Returns:
        npt.NDArray[np.float64]: The `4n x 2(n + m)` selector.
    """
    nb = n + m
    s = np.zeros((4 * n, 2 * nb))
    eye = np.eye(n)
    s[:n, :n] = eye
    s[n : 2 * n, :n] = eye
    s[2 * n : 3 * n, nb : nb + n] = eye
    s[3 * n :, nb : nb + n] = eye
    return s


def lifted_sector_multiplier(
    sector: SectorBounds,
    n: int,
    m: int,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Express the sector multipliers in `eta` and `f_tilde` coordinates.

    Every block of `f_tilde` pairs with one block of `[x; x; e_x; e_x]`, the first two
    through the plain sector condition and the last two through the incremental one.

    Args:
        sector (SectorBounds): The sector bounds.
        n (int): The plant state dimension.
        m (int): The measurement dimension.

    Returns:
        tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]: The quadratic weight
            on `eta`, `2nb x 2nb`, and the cross weight between `eta` and `f_tilde`,
            `2nb x 4n`.
    """
    f3, f4 = sector_multiplier_blocks(sector)
    s = eta_selector(n, m)
    f3_all = np.kron(np.eye(2), f3)
    f4_all = np.kron(np.eye(2), f4)
    return s.T @ f3_all @ s, s.T @ f4_all


class BlockLayout:
    """Named consecutive segments of a block matrix.

    ???+ example
        ```python
        layout = BlockLayout(eta=8, eta_tau=8, f=8)
        assert layout.offset("eta_tau") == 8
        assert layout.size == 24
        ```
    """

    def __init__(self, **sizes: int) -> None:
        self._offsets: dict[str, int] = {}
        self._sizes = dict(sizes)
        offset = 0
        for name, size in sizes.items():
            self._offsets[name] = offset
            offset += size
        self.size = offset

    def offset(self, name: str) -> int:
        """First row of a segment.

        Args:
            name (str): The segment.

        Returns:
            int: The offset.
        """
        return self._offsets[name]

    def length(self, name: str) -> int:
        """Length of a segment.

        Args:
            name (str): The segment.

        Returns:
            int: The length.
        """
        return self._sizes[name]
