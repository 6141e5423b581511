"""Protocol-augmented plant, estimation error system and stacked closed loop.

Under the protocol the estimator sees `y_bar(k)`, not `y(k)`, so the plant is augmented
with the scheduler memory, `x_bar(k) = [x(k); y_bar(k - 1)]` of dimension `nb = n + m`:

```
x_bar(k+1) = A_bar x_bar + B_bar f_bar(x_bar) + C_bar f_bar(x_bar_tau) + D1_bar w_bar
y_bar(k)   = E_bar x_bar + D2_bar w_bar
```

with `w_bar = [w; v]` and `f_bar = [f(x); f(x)]`. All bar matrices depend on the mode
`i` and the transmitting node `o`. The estimator

```
x_hat(k+1) = A_bar x_hat + B_bar f_bar(x_hat) + C_bar f_bar(x_hat_tau)
           + K (y_bar(k) - E_bar x_hat)
```

leaves the error `e = x_bar - x_hat`, and `eta = [x_bar; e]` follows

```
eta(k+1) = A_tilde eta + B_tilde f_tilde + C_tilde f_tilde_tau + D_tilde W
```

with `f_tilde = [f_bar(x_bar); f_bar(x_bar) - f_bar(x_hat)]` and `W = [w_bar; w_bar]`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from pymjnn.core import activation_apply
from pymjnn.errors import GridMismatch, IndexOutOfRange
from pymjnn.models.pydantic import Matrix  # noqa: TC001
from pymjnn.wtod import selector_matrix

if TYPE_CHECKING:
    import numpy.typing as npt

    from pymjnn.models.gains import EstimatorGains
    from pymjnn.models.plant import MjnnModel
    from pymjnn.models.protocol import NodePartition


class AugmentedPlant(BaseModel):  # noqa: DOC601, DOC603
    """Augmented plant matrices of one (mode, node) pair.

    Attributes:
        A_bar (Matrix): `[[A, 0], [Phi E, I - Phi]]`, `nb x nb`.
        B_bar (Matrix): `diag(B, 0)`, `nb x 2n`.
        C_bar (Matrix): `diag(C, 0)`, `nb x 2n`.
        D1_bar (Matrix): `diag(D1, Phi D2)`, `nb x 2r`.
        E_bar (Matrix): `[Phi E, I - Phi]`, `m x nb`.
        D2_bar (Matrix): `[0, Phi D2]`, `m x 2r`.
        M_bar (Matrix): `[M, 0]`, `q x nb`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: int = Field(description="Zero-based mode.")
    node: int = Field(description="Zero-based transmitting node.")
    A_bar: Matrix
    B_bar: Matrix
    C_bar: Matrix
    D1_bar: Matrix
    E_bar: Matrix
    D2_bar: Matrix
    M_bar: Matrix

    @property
    def nb(self) -> int:
        """The augmented state dimension."""
        return int(self.A_bar.shape[0])

    @property
    def m(self) -> int:
        """The measurement dimension."""
        return int(self.E_bar.shape[0])


class ClosedLoopBlock(BaseModel):  # noqa: DOC601, DOC603
    """Stacked closed-loop matrices of one (mode, node) pair.

    `W` stacks the disturbance `[w; v]` twice, so `D_tilde` has `4r` columns and the
    energy `||W||^2` counts the disturbance twice.

    Attributes:
        A_tilde (Matrix): `diag(A_bar, A_bar - K E_bar)`.
        B_tilde (Matrix): `diag(B_bar, B_bar)`.
        C_tilde (Matrix): `diag(C_bar, C_bar)`.
        D_tilde (Matrix): `diag(D1_bar, D1_bar - K D2_bar)`.
        M_tilde (Matrix): `[0, M_bar]`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    A_tilde: Matrix
    B_tilde: Matrix
    C_tilde: Matrix
    D_tilde: Matrix
    M_tilde: Matrix

    @property
    def error_spectral_radius(self) -> float:
        """Spectral radius of the error block `A_bar - K E_bar`."""
        half = self.A_tilde.shape[0] // 2
        return float(np.max(np.abs(np.linalg.eigvals(self.A_tilde[half:, half:]))))


class ClosedLoopSystem(BaseModel):
    """Closed-loop blocks for every (mode, node) pair, indexed `system[i, m]`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    blocks: list[list[ClosedLoopBlock]] = Field(description="Blocks, mode-major.")

    @property
    def modes(self) -> int:
        """The number of modes."""
        return len(self.blocks)

    @property
    def nodes(self) -> int:
        """The number of nodes."""
        return len(self.blocks[0])

    @property
    def eta_dim(self) -> int:
        """Dimension of `eta = [x_bar; e]`."""
        return int(self.blocks[0][0].A_tilde.shape[0])

    def __getitem__(self, key: tuple[int, int]) -> ClosedLoopBlock:
        """Return the block of mode `i` and node `m`."""  # noqa: DOC201
        i, m = key
        return self.blocks[i][m]


def build_augmented(
    model: MjnnModel,
    partition: NodePartition,
    i: int,
    m: int,
) -> AugmentedPlant:
    """Assemble the augmented plant of mode `i` when node `m` transmits.

    ???+ example
        ```python
        aug = build_augmented(model, model.wtod.partition, 0, 0)
        assert aug.A_bar.shape == (model.nb, model.nb)
        ```

    Args:
        model (MjnnModel): The plant.
        partition (NodePartition): The node partition of the output.
        i (int): The zero-based mode.
        m (int): The zero-based node.

    Returns:
        AugmentedPlant: The augmented matrices.

    Raises:
        IndexOutOfRange: If `i` or `m` is outside of the model.
    """
    if not 0 <= i < model.N:
        msg = f"Mode index {i} out of range for {model.N} mode(s)"
        logger.error(msg)
        raise IndexOutOfRange(msg)
    mode = model.modes[i]
    n, ny, r = model.n, model.m, model.r
    phi = selector_matrix(partition, m)
    e_bar = np.hstack([phi @ mode.E, np.eye(ny) - phi])
    return AugmentedPlant(
        mode=i,
        node=m,
        A_bar=np.block([[mode.A, np.zeros((n, ny))], [e_bar]]),
        B_bar=scipy.linalg.block_diag(mode.B, np.zeros((ny, n))),
        C_bar=scipy.linalg.block_diag(mode.C, np.zeros((ny, n))),
        D1_bar=scipy.linalg.block_diag(mode.D1, phi @ mode.D2),
        E_bar=e_bar,
        D2_bar=np.hstack([np.zeros((ny, r)), phi @ mode.D2]),
        M_bar=np.hstack([mode.M, np.zeros((mode.q, ny))]),
    )


def augmented_grid(model: MjnnModel) -> list[list[AugmentedPlant]]:
    """Assemble the augmented plant of every (mode, node) pair of a model.

    Args:
        model (MjnnModel): The plant, with its protocol.

    Returns:
        list[list[AugmentedPlant]]: The grid, mode-major.
    """
    partition = model.wtod.partition
    return [
        [build_augmented(model, partition, i, m) for m in range(partition.count)]
        for i in range(model.N)
    ]


def augmented_activation(
    model: MjnnModel,
    x_bar: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Apply the activation to the plant slice of `x_bar` and stack it twice.

    The scheduler memory never reaches the activation since the lower blocks of
    `B_bar` and `C_bar` are zero.

    Args:
        model (MjnnModel): The plant.
        x_bar (npt.NDArray[np.float64]): An augmented state.

    Returns:
        npt.NDArray[np.float64]: `f_bar(x_bar) = [f(x); f(x)]`, of size `2n`.
    """
    return np.tile(activation_apply(model, np.asarray(x_bar)[: model.n]), 2)


def stacked_activation(
    model: MjnnModel,
    eta: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Build `f_tilde = [f_bar(x_bar); f_bar(x_bar) - f_bar(x_hat)]` from `eta`.

    Args:
        model (MjnnModel): The plant.
        eta (npt.NDArray[np.float64]): A stacked state `[x_bar; e]`.

    Returns:
        npt.NDArray[np.float64]: The stacked nonlinearity, of size `4n`.
    """
    nb = model.nb
    x_bar = eta[:nb]
    x_hat = x_bar - eta[nb:]
    fx = augmented_activation(model, x_bar)
    return np.concatenate([fx, fx - augmented_activation(model, x_hat)])


def stacked_disturbance(
    w: npt.NDArray[np.float64],
    v: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Stack the disturbances as `W = [w; v; w; v]`.

    Args:
        w (npt.NDArray[np.float64]): The process disturbance.
        v (npt.NDArray[np.float64]): The measurement disturbance.

    Returns:
        npt.NDArray[np.float64]: `W`, of size `4r`.
    """
    return np.tile(np.concatenate([w, v]), 2)


def _check_grid(aug: list[list[AugmentedPlant]], gains: EstimatorGains) -> None:
    if len(aug) != gains.modes or any(len(row) != gains.nodes for row in aug):
        msg = (
            f"Gain grid is {gains.modes} x {gains.nodes}, augmented grid is "
            f"{len(aug)} x {[len(row) for row in aug]}"
        )
        logger.error(msg)
        raise GridMismatch(msg)
    for i, row in enumerate(aug):
        for m, plant in enumerate(row):
            expected = (plant.nb, plant.m)
            if gains[i, m].shape != expected:
                msg = (
                    f"Gain ({i + 1},{m + 1}) has shape {gains[i, m].shape}, "
                    f"expected {expected}"
                )
                logger.error(msg)
                raise GridMismatch(msg)


def build_closed_loop(
    aug: list[list[AugmentedPlant]],
    gains: EstimatorGains,
) -> ClosedLoopSystem:
    """Close the estimation loop for every (mode, node) pair.

    Args:
        aug (list[list[AugmentedPlant]]): The augmented grid, mode-major.
        gains (EstimatorGains): One gain per (mode, node) pair.

    Returns:
        ClosedLoopSystem: The stacked closed-loop matrices.

    Raises:
        GridMismatch: If the gain grid and the augmented grid differ in shape.
    """
    _check_grid(aug, gains)
    blocks = []
    for i, row in enumerate(aug):
        out = []
        for m, p in enumerate(row):
            k = gains[i, m]
            out.append(
                ClosedLoopBlock(
                    A_tilde=scipy.linalg.block_diag(p.A_bar, p.A_bar - k @ p.E_bar),
                    B_tilde=scipy.linalg.block_diag(p.B_bar, p.B_bar),
                    C_tilde=scipy.linalg.block_diag(p.C_bar, p.C_bar),
                    D_tilde=scipy.linalg.block_diag(p.D1_bar, p.D1_bar - k @ p.D2_bar),
                    M_tilde=np.hstack([np.zeros_like(p.M_bar), p.M_bar]),
                ),
            )
        blocks.append(out)
    return ClosedLoopSystem(blocks=blocks)


def check_structure(
    aug: AugmentedPlant,
    model: MjnnModel,
    partition: NodePartition,
) -> list[str]:
    """Compare an augmented plant against the block structure it must have.

    Args:
        aug (AugmentedPlant): The augmented plant.
        model (MjnnModel): The plant it was built from.
        partition (NodePartition): The node partition.

    Returns:
        list[str]: One message per broken block, empty when the structure holds.
    """
    n = model.n
    mode = model.modes[aug.mode]
    phi = selector_matrix(partition, aug.node)
    expected_rows = np.hstack([phi @ mode.E, np.eye(model.m) - phi])
    failures = []
    if not np.array_equal(aug.A_bar[:n, :n], mode.A):
        failures.append("Top-left block of A_bar differs from A")
    if np.any(aug.A_bar[:n, n:]):
        failures.append("Top-right block of A_bar is not zero")
    if not np.array_equal(aug.A_bar[n:], expected_rows):
        failures.append("Bottom rows of A_bar differ from [Phi E, I - Phi]")
    if not np.array_equal(aug.E_bar, aug.A_bar[n:]):
        failures.append("E_bar differs from the bottom rows of A_bar")
    if np.any(aug.B_bar[n:]) or np.any(aug.C_bar[n:]):
        failures.append("Memory rows of B_bar or C_bar are not zero")
    return failures


def stacked_step(
    block: ClosedLoopBlock,
    eta: npt.NDArray[np.float64],
    f_tilde: npt.NDArray[np.float64],
    f_tilde_tau: npt.NDArray[np.float64],
    W: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Advance the stacked closed loop by one step.

    Args:
        block (ClosedLoopBlock): The block of the current mode and node.
        eta (npt.NDArray[np.float64]): `eta(k)`.
        f_tilde (npt.NDArray[np.float64]): `f_tilde(k)`.
        f_tilde_tau (npt.NDArray[np.float64]): `f_tilde(k - tau(k))`.
        W (npt.NDArray[np.float64]): The stacked disturbance `W(k)`.

    Returns:
        npt.NDArray[np.float64]: `eta(k + 1)`.
    """
    return (
        block.A_tilde @ eta
        + block.B_tilde @ f_tilde
        + block.C_tilde @ f_tilde_tau
        + block.D_tilde @ W
    )
