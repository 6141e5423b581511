"""Plant-level operations: consistency checks, transition sets, sampling and sectors.

Mode and node indices are zero-based everywhere in the Python API. Files and CSV output
use one-based indices, matching how the modes are numbered in writing.
"""

from __future__ import annotations

import warnings
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from loguru import logger

from pymjnn.errors import (
    CompletionMismatch,
    DelayOrderViolation,
    DimensionMismatch,
    IndexOutOfRange,
    ModelValidationError,
    ProbabilityRangeError,
    ProtocolMismatch,
    RequiresFullTP,
    RowSumViolation,
)
from pymjnn.models.plant import (
    ROW_SUM_TOL,
    MjnnModel,
    SectorBounds,
    TanhActivation,
    TransitionCompletion,
    TransitionSpec,
)
from pymjnn.models.results import ModelReport, Violation, ViolationKind
from pymjnn.models.types import UNKNOWN
from pymjnn.wtod import protocol_commutes

if TYPE_CHECKING:
    import numpy.typing as npt

    from pymjnn.models.plant import DelaySpec

SECTOR_TOL = 1e-12

_ERRORS: dict[ViolationKind, type[ModelValidationError]] = {
    "DimensionMismatch": DimensionMismatch,
    "RowSumViolation": RowSumViolation,
    "DelayOrderViolation": DelayOrderViolation,
    "ProbabilityRangeError": ProbabilityRangeError,
    "ProtocolMismatch": ProtocolMismatch,
    "CompletionMismatch": CompletionMismatch,
}


class KnownIndexSets(NamedTuple):
    """Known and unknown columns of one transition row."""

    known: tuple[int, ...]
    unknown: tuple[int, ...]
    pi_known: float


def _check_mode_dimensions(model: MjnnModel) -> list[Violation]:
    out: list[Violation] = []
    n, m, q, r = model.n, model.m, model.q, model.r
    expected = {
        "A": (n, n),
        "B": (n, n),
        "C": (n, n),
        "D1": (n, r),
        "D2": (m, r),
        "E": (m, n),
        "M": (q, n),
    }
    for i, mode in enumerate(model.modes):
        for name, shape in expected.items():
            actual = getattr(mode, name).shape
            if actual != shape:
                out.append(
                    Violation(
                        kind="DimensionMismatch",
                        location=f"mode {i + 1}",
                        message=f"{name} has shape {actual}, expected {shape}",
                    ),
                )
    for name in ("F1", "F2"):
        actual = getattr(model.sector, name).shape
        if actual != (n, n):
            out.append(
                Violation(
                    kind="DimensionMismatch",
                    location="sector",
                    message=f"{name} has shape {actual}, expected {(n, n)}",
                ),
            )
    activation = model.activation
    if isinstance(activation, TanhActivation) and len(activation.scales) != n:
        out.append(
            Violation(
                kind="DimensionMismatch",
                location="activation",
                message=f"{len(activation.scales)} scales for state dimension {n}",
            ),
        )
    if model.transitions.N != model.N:
        out.append(
            Violation(
                kind="DimensionMismatch",
                location="transitions",
                message=(
                    f"{model.transitions.N} x {model.transitions.N} matrix "
                    f"for {model.N} modes"
                ),
            ),
        )
    return out


def _check_transitions(spec: TransitionSpec) -> list[Violation]:
    out: list[Violation] = []
    values = spec.known_values
    mask = spec.known_mask
    for i in range(spec.N):
        row = values[i][mask[i]]
        if ((row < 0) | (row > 1)).any():
            out.append(
                Violation(
                    kind="ProbabilityRangeError",
                    location=f"row {i + 1}",
                    message=f"Known probabilities {row.tolist()} leave [0, 1]",
                ),
            )
            continue
        total = float(row.sum())
        if mask[i].all() and abs(total - 1.0) > ROW_SUM_TOL:
            out.append(
                Violation(
                    kind="RowSumViolation",
                    location=f"row {i + 1}",
                    message=f"Fully known row sums to {total:.12g}, expected 1",
                ),
            )
        elif total > 1.0 + ROW_SUM_TOL:
            out.append(
                Violation(
                    kind="RowSumViolation",
                    location=f"row {i + 1}",
                    message=f"Known probabilities sum to {total:.12g}, more than 1",
                ),
            )
    return out


def _check_delay(delay: DelaySpec) -> list[Violation]:
    if 0 < delay.tau_min <= delay.tau_max:
        return []
    return [
        Violation(
            kind="DelayOrderViolation",
            location="delay",
            message=(
                f"Expected 0 < min <= max, "
                f"got min={delay.tau_min}, max={delay.tau_max}"
            ),
        ),
    ]


def _check_protocol(model: MjnnModel) -> list[Violation]:
    protocol = model.wtod
    partition = protocol.partition
    if partition.m != model.m:
        return [
            Violation(
                kind="ProtocolMismatch",
                location="protocol.partition",
                message=(
                    f"Partition {partition.dims} covers {partition.m} outputs, "
                    f"model has {model.m}"
                ),
            ),
        ]
    weights = protocol.resolved_weights
    if len(weights.Q) != partition.count:
        return [
            Violation(
                kind="ProtocolMismatch",
                location="protocol.weights",
                message=f"{len(weights.Q)} weights for {partition.count} nodes",
            ),
        ]
    out = [
        Violation(
            kind="ProtocolMismatch",
            location=f"protocol.weights[{idx + 1}]",
            message=f"Weight has size {q.shape[0]}, node owns {d} output(s)",
        )
        for idx, (q, d) in enumerate(zip(weights.Q, partition.dims, strict=True))
        if q.shape[0] != d
    ]
    if not out and not protocol_commutes(partition, weights):
        out.append(
            Violation(
                kind="ProtocolMismatch",
                location="protocol",
                message="Stacked weight does not commute with the node selectors",
            ),
        )
    return out


def _check_completion(model: MjnnModel) -> list[Violation]:
    if model.completion is None:
        return []
    pi = model.completion.pi
    if pi.shape != (model.N, model.N):
        return [
            Violation(
                kind="CompletionMismatch",
                location="completion",
                message=f"Completion has shape {pi.shape}, model has {model.N} modes",
            ),
        ]
    spec = model.transitions
    if spec.N != model.N:
        return []
    mask = spec.known_mask
    off = np.abs(np.nan_to_num(spec.known_values) - pi) > ROW_SUM_TOL
    bad = np.argwhere(mask & off)
    return [
        Violation(
            kind="CompletionMismatch",
            location=f"completion[{i + 1},{j + 1}]",
            message=(
                f"Completion has {pi[i, j]}, known cell is {spec.known_values[i, j]}"
            ),
        )
        for i, j in bad
    ]


def check_model(model: MjnnModel, *, sector_samples: int = 1000) -> ModelReport:
    """Run every consistency check on a model and collect the results.

    Unlike [`validate_model`](#pymjnn.core.validate_model), nothing is raised; the
    report lists every violation found, and the warnings of the sampled sector check.

    Args:
        model (MjnnModel): The model to check.
        sector_samples (int, optional): Number of random states used by the sampled
            activation sector check, or `0` to skip it. Defaults to `1000`.

    Returns:
        ModelReport: The violations and warnings.
    """
    violations = _check_mode_dimensions(model)
    violations += _check_transitions(model.transitions)
    violations += _check_delay(model.delay)
    violations += _check_protocol(model)
    violations += _check_completion(model)
    sector_warnings: list[str] = []
    shapes_ok = not any(v.kind == "DimensionMismatch" for v in violations)
    if sector_samples > 0 and shapes_ok:
        sector_warnings = check_activation_sector(model, samples=sector_samples)
    return ModelReport(violations=violations, warnings=sector_warnings)


def validate_model(model: MjnnModel, *, sector_samples: int = 1000) -> MjnnModel:
    """Return the model if it passes every consistency check, raise otherwise.

    The raised error is the subclass matching the first violation found, and it carries
    the full list in `violations`.

    ???+ example
        ```python
        from pymjnn.core import validate_model
        from pymjnn.io import load_model

        model = validate_model(load_model("four_mode_network.json"))
        ```

    Args:
        model (MjnnModel): The model to check.
        sector_samples (int, optional): Number of random states used by the sampled
            activation sector check. Defaults to `1000`.

    Returns:
        MjnnModel: The unchanged model.

    Raises:
        ModelValidationError: The subclass of the first violation, e.g.
            `RowSumViolation` or `DelayOrderViolation`.
    """
    report = check_model(model, sector_samples=sector_samples)
    if not report.valid:
        first = report.violations[0]
        msg = "; ".join(str(v) for v in report.violations)
        logger.error(msg)
        raise _ERRORS[first.kind](msg, report.violations)
    return model


def known_index_sets(spec: TransitionSpec, i: int) -> KnownIndexSets:
    """Split the columns of row `i` into known and unknown transition probabilities.

    Args:
        spec (TransitionSpec): The partially known transition matrix.
        i (int): The zero-based row.

    Returns:
        KnownIndexSets: The known columns, the unknown columns and the known mass of
            the row.

    Raises:
        IndexOutOfRange: If `i` is not a mode of the spec.
    """
    if not 0 <= i < spec.N:
        msg = f"Mode index {i} out of range for {spec.N} mode(s)"
        logger.error(msg)
        raise IndexOutOfRange(msg)
    row = spec.entries[i]
    known = tuple(j for j, c in enumerate(row) if c != UNKNOWN)
    unknown = tuple(j for j, c in enumerate(row) if c == UNKNOWN)
    pi_known = float(sum(float(row[j]) for j in known))
    return KnownIndexSets(known=known, unknown=unknown, pi_known=pi_known)


def sample_next_mode(completion: TransitionCompletion, i: int, u: float) -> int:
    """Draw the next mode by inverse-CDF sampling of row `i`.

    Returns the zero-based `j` with `sum(pi[i, :j]) <= u < sum(pi[i, :j + 1])`. The
    cumulative sums are normalized so the last one is exactly `1`, which keeps
    trailing zero-probability modes out of reach of rounding.

    Args:
        completion (TransitionCompletion): The ground-truth chain.
        i (int): The zero-based current mode.
        u (float): A uniform draw in `[0, 1)`.

    Returns:
        int: The zero-based next mode.

    Raises:
        ValueError: If `u` is outside of `[0, 1)`.
    """
    if not 0.0 <= u < 1.0:
        msg = f"Uniform draw must lie in [0, 1), got {u}"
        logger.error(msg)
        raise ValueError(msg)
    cdf = np.cumsum(completion.pi[i])
    cdf /= cdf[-1]
    return int(np.searchsorted(cdf, u, side="right"))


def activation_apply(
    model: MjnnModel,
    x: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """Apply the activation of a model componentwise.

    Args:
        model (MjnnModel): The model.
        x (npt.NDArray[np.float64]): A plant state.

    Returns:
        npt.NDArray[np.float64]: `f(x)`.
    """
    return model.activation(np.asarray(x, dtype=np.float64))


def sector_residual(
    sector: SectorBounds,
    x: npt.NDArray[np.float64],
    fx: npt.NDArray[np.float64],
) -> float:
    """Evaluate `[fx - F1 x]^T [fx - F2 x]`, non-positive inside the sector.

    Args:
        sector (SectorBounds): The sector bounds.
        x (npt.NDArray[np.float64]): A plant state.
        fx (npt.NDArray[np.float64]): The activation at `x`.

    Returns:
        float: The residual.
    """
    return float((fx - sector.F1 @ x) @ (fx - sector.F2 @ x))


def incremental_sector_residual(
    sector: SectorBounds,
    a: npt.NDArray[np.float64],
    b: npt.NDArray[np.float64],
    fa: npt.NDArray[np.float64],
    fb: npt.NDArray[np.float64],
) -> float:
    """Evaluate the sector residual of the increment `f(a) - f(b)` against `a - b`.

    The estimation error channel is driven by `f(x) - f(x_hat)`, so the analysis needs
    the sector condition on increments, not only around the origin.

    Args:
        sector (SectorBounds): The sector bounds.
        a (npt.NDArray[np.float64]): A plant state.
        b (npt.NDArray[np.float64]): Another plant state.
        fa (npt.NDArray[np.float64]): The activation at `a`.
        fb (npt.NDArray[np.float64]): The activation at `b`.

    Returns:
        float: The residual.
    """
    return sector_residual(sector, a - b, fa - fb)


def check_activation_sector(
    model: MjnnModel,
    *,
    samples: int = 1000,
    seed: int = 0,
    box: float = 10.0,
) -> list[str]:
    """Check by sampling that the activation lies inside the sector bounds.

    States are drawn uniformly from `[-box, box]^n`. Both the plain and the incremental
    condition are checked. Any failure is logged and raised as a `UserWarning`, since a
    model with a wrong sector can still be simulated, but its certificates mean nothing.

    Args:
        model (MjnnModel): The model.
        samples (int, optional): Number of sampled states. Defaults to `1000`.
        seed (int, optional): Seed of the sampler. Defaults to `0`.
        box (float, optional): Half-width of the sampling box. Defaults to `10.0`.

    Returns:
        list[str]: One message per failed condition, empty when both hold.
    """
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-box, box, size=(samples, model.n))
    fs = np.array([activation_apply(model, x) for x in xs])
    plain = max(
        (sector_residual(model.sector, x, fx) for x, fx in zip(xs, fs, strict=True)),
        default=0.0,
    )
    incremental = max(
        (
            incremental_sector_residual(
                model.sector,
                xs[k],
                xs[k - 1],
                fs[k],
                fs[k - 1],
            )
            for k in range(1, samples)
        ),
        default=0.0,
    )
    out: list[str] = []
    if plain > SECTOR_TOL:
        out.append(f"Activation leaves the sector, worst residual {plain:.6g}")
    if incremental > SECTOR_TOL:
        out.append(
            "Activation increments leave the sector, "
            f"worst residual {incremental:.6g}",
        )
    for msg in out:
        logger.warning(msg)
        warnings.warn(msg, UserWarning, stacklevel=2)
    return out


def sample_delay(spec: DelaySpec, u: float) -> int:
    """Draw a delay uniformly from `tau_min..tau_max` by inverse-CDF sampling.

    Args:
        spec (DelaySpec): The delay bounds.
        u (float): A uniform draw in `[0, 1)`.

    Returns:
        int: The delay, in steps.
    """
    width = spec.tau_max - spec.tau_min + 1
    return spec.tau_min + min(int(np.floor(u * width)), width - 1)


def completion_from_spec(spec: TransitionSpec) -> TransitionCompletion:
    """Build the ground-truth chain of a fully known transition matrix.

    Args:
        spec (TransitionSpec): The transition matrix.

    Returns:
        TransitionCompletion: The same matrix as a completion.

    Raises:
        RequiresFullTP: If any cell is unknown.
    """
    if not spec.is_fully_known:
        msg = "Cannot build a completion from a transition matrix with unknown cells"
        logger.error(msg)
        raise RequiresFullTP(msg)
    return TransitionCompletion(pi=spec.known_values)


def complete_uniformly(spec: TransitionSpec) -> TransitionCompletion:
    """Spread the missing mass of every row evenly over its unknown cells.

    ???+ example
        ```python
        spec = TransitionSpec.model_validate([[0.5, "?"], ["?", "?"]])
        assert complete_uniformly(spec).pi.tolist() == [[0.5, 0.5], [0.5, 0.5]]
        ```

    Args:
        spec (TransitionSpec): The partially known transition matrix.

    Returns:
        TransitionCompletion: A completion agreeing with every known cell.
    """
    pi = np.nan_to_num(spec.known_values)
    for i in range(spec.N):
        sets = known_index_sets(spec, i)
        if sets.unknown:
            missing = max(1.0 - sets.pi_known, 0.0)
            pi[i, list(sets.unknown)] = missing / len(sets.unknown)
    return TransitionCompletion(pi=pi)


def mask_transitions(
    pi: npt.NDArray[np.float64],
    known: npt.NDArray[np.bool_],
) -> TransitionSpec:
    """Hide the cells of a full transition matrix where `known` is `False`.

    Args:
        pi (npt.NDArray[np.float64]): A full transition matrix.
        known (npt.NDArray[np.bool_]): Mask of the cells the designer knows.

    Returns:
        TransitionSpec: The partially known transition matrix.

    Raises:
        DimensionMismatch: If the mask and the matrix differ in shape.
    """
    pi = np.asarray(pi, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    if pi.shape != known.shape:
        msg = f"Mask shape {known.shape} differs from matrix shape {pi.shape}"
        logger.error(msg)
        raise DimensionMismatch(msg)
    return TransitionSpec(
        entries=[
            [float(p) if k else UNKNOWN for p, k in zip(row, mrow, strict=True)]
            for row, mrow in zip(pi, known, strict=True)
        ],
    )
