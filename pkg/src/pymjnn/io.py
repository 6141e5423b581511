"""Reading and writing models, gains and result tables.

Models and gains are JSON documents validated by the pydantic models in
[`pymjnn.models`](models/plant.md). A model document may carry its gain grid under a
top-level `"gains"` key; [`load_model`](#pymjnn.io.load_model) ignores it and
[`load_gains`](#pymjnn.io.load_gains) picks it up.

Tables are written with pandas, one row per step, at 17 significant digits so that every
float survives a round trip. Modes and nodes are one-based in every table.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from loguru import logger

from pymjnn.errors import DocumentFormatError
from pymjnn.models.gains import EstimatorGains
from pymjnn.models.plant import MjnnModel
from pymjnn.models.protocol import SchedulerState
from pymjnn.wtod import weighted_deviations

if TYPE_CHECKING:
    from pymjnn.models.results import (
        BisectionResult,
        EnsembleMetrics,
        LyapunovReport,
        SynthesisResult,
        Trajectory,
    )

FLOAT_FORMAT = "%.17g"
GAINS_KEY = "gains"


def _read_json(path: Path) -> dict[str, Any]:
    with Path(path).open(encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        msg = f"Expected a JSON object in {path}, got {type(doc).__name__}"
        logger.error(msg)
        raise DocumentFormatError(msg)
    return doc


def example_path(name: str = "four_mode_network.json") -> Path:
    """Locate a document shipped with the package.

    Args:
        name (str, optional): The file name. Defaults to
            `"four_mode_network.json"`, the two-neuron four-mode network;
            `"four_mode_network_gains.json"` holds its reference gain grid.

    Returns:
        Path: The path of the packaged file.
    """
    return Path(str(resources.files("pymjnn") / "data" / name))


def load_model(path: Path) -> MjnnModel:
    """Read a model document.

    ???+ example
        ```python
        model = load_model(example_path())
        assert model.N == 4
        ```

    Args:
        path (Path): The JSON file.

    Returns:
        MjnnModel: The parsed model. It is not validated beyond its own fields; see
            [`validate_model`](core.md#pymjnn.core.validate_model).

    Raises:
        OSError: If the file cannot be read.
        DocumentFormatError: If the file holds JSON but not an object.
        ValueError: If the file is not JSON or does not describe a model.
    """
    doc = _read_json(path)
    doc.pop(GAINS_KEY, None)
    logger.debug(f"Loaded model from {path}")
    return MjnnModel.model_validate(doc)


def load_gains(path: Path) -> EstimatorGains:
    """Read a gain grid, either a gains document or a model document with gains.

    Args:
        path (Path): The JSON file.

    Returns:
        EstimatorGains: The gains.

    Raises:
        OSError: If the file cannot be read.
        DocumentFormatError: If the file holds JSON but not an object.
        ValueError: If the file holds no gain grid.
    """
    doc = _read_json(path)
    if "modes" in doc:
        if GAINS_KEY not in doc:
            msg = f"Model document {path} carries no gain grid"
            logger.error(msg)
            raise ValueError(msg)
        doc = doc[GAINS_KEY]
    return EstimatorGains.model_validate(doc)


def dump_model(
    model: MjnnModel,
    path: Path,
    gains: EstimatorGains | None = None,
) -> None:
    """Write a model document, optionally with its gains.

    Args:
        model (MjnnModel): The model. A callable activation cannot be written.
        path (Path): The target file.
        gains (EstimatorGains | None, optional): Gains to embed. Defaults to `None`.

    Raises:
        ValueError: If the activation is a callable.
    """
    if model.activation.type == "callable":
        msg = "Models with a callable activation cannot be written to a file"
        logger.error(msg)
        raise ValueError(msg)
    doc = model.model_dump(mode="json", by_alias=True, exclude_none=True)
    if gains is not None:
        doc[GAINS_KEY] = gains.model_dump(mode="json")
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def dump_gains(gains: EstimatorGains, path: Path) -> None:
    """Write a gains document keyed by one-based `"i,m"` strings.

    Args:
        gains (EstimatorGains): The gains.
        path (Path): The target file.
    """
    Path(path).write_text(gains.model_dump_json(indent=2) + "\n", encoding="utf-8")


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    """Write a table without index at full precision.

    Args:
        frame (pd.DataFrame): The table.
        path (Path): The target file.
    """
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def trajectory_frame(
    trajectory: Trajectory,
    lyapunov: LyapunovReport | None = None,
) -> pd.DataFrame:
    """Tabulate a trajectory: `k, mode, node, x1.., e1.., ztilde_sq, V`.

    Args:
        trajectory (Trajectory): The trajectory.
        lyapunov (LyapunovReport | None, optional): Values of the functional; the `V`
            column is empty without it. Defaults to `None`.

    Returns:
        pd.DataFrame: One row per step `k < horizon`.
    """
    steps = range(trajectory.horizon)
    rows = [trajectory.at(k) for k in steps]
    n = trajectory.n
    data: dict[str, Any] = {
        "k": list(steps),
        "mode": [trajectory.modes[k] + 1 for k in steps],
        "node": [trajectory.nodes[k] + 1 for k in steps],
    }
    for c in range(n):
        data[f"x{c + 1}"] = trajectory.x_bar[rows, c]
    e = trajectory.e
    for c in range(n):
        data[f"e{c + 1}"] = e[rows, c]
    data["ztilde_sq"] = trajectory.ztilde_sq[: trajectory.horizon]
    data["V"] = (
        lyapunov.V if lyapunov is not None else np.full(trajectory.horizon, np.nan)
    )
    return pd.DataFrame(data)


def mode_path_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Tabulate the mode path: `k, mode`.

    Args:
        trajectory (Trajectory): The trajectory.

    Returns:
        pd.DataFrame: One row per step `k <= horizon`.
    """
    return pd.DataFrame(
        {"k": range(len(trajectory.modes)), "mode": [i + 1 for i in trajectory.modes]},
    )


def node_schedule_frame(trajectory: Trajectory, model: MjnnModel) -> pd.DataFrame:
    """Tabulate the scheduler: `k, node, score1..scoreM`.

    Scores are the weighted deviations the scheduler compared at step `k`.

    Args:
        trajectory (Trajectory): The trajectory.
        model (MjnnModel): The model it was simulated with.

    Returns:
        pd.DataFrame: One row per step `k < horizon`.
    """
    n = model.n
    partition, weights = model.wtod.partition, model.wtod.resolved_weights
    scores = []
    for k in range(trajectory.horizon):
        row = trajectory.at(k)
        mode = model.modes[trajectory.modes[k]]
        y = mode.E @ trajectory.x_bar[row, :n] + mode.D2 @ trajectory.v[k]
        memory = SchedulerState(y_bar=trajectory.x_bar[row, n:])
        scores.append(weighted_deviations(memory, y, weights, partition))
    data: dict[str, Any] = {
        "k": range(trajectory.horizon),
        "node": [o + 1 for o in trajectory.nodes],
    }
    table = np.array(scores).reshape(trajectory.horizon, partition.count)
    for m in range(partition.count):
        data[f"score{m + 1}"] = table[:, m]
    return pd.DataFrame(data)


def ensemble_frame(metrics: EnsembleMetrics) -> pd.DataFrame:
    """Tabulate the ensemble means: `k, ms_state_norm, mean_ztilde_sq`.

    Args:
        metrics (EnsembleMetrics): The ensemble statistics.

    Returns:
        pd.DataFrame: One row per step `k <= horizon`.
    """
    return pd.DataFrame(
        {
            "k": range(len(metrics.ms_state_norm)),
            "ms_state_norm": metrics.ms_state_norm,
            "mean_ztilde_sq": metrics.mean_ztilde_sq,
        },
    )


def ccl_trace_frame(result: SynthesisResult) -> pd.DataFrame:
    """Tabulate the synthesis loop: `iter, objective, trace_gap, max_coupling_residual`.

    Args:
        result (SynthesisResult): The synthesis result.

    Returns:
        pd.DataFrame: One row per iteration.
    """
    columns = ["iter", "objective", "trace_gap", "max_coupling_residual"]
    return pd.DataFrame(
        [
            (it.iteration, it.objective, it.trace_gap, it.max_coupling_residual)
            for it in result.ccl_trace
        ],
        columns=columns,
    )


def bisection_frame(result: BisectionResult) -> pd.DataFrame:
    """Tabulate the bracket log: `gamma, feasible, status`.

    Args:
        result (BisectionResult): The bisection result.

    Returns:
        pd.DataFrame: One row per probe, in probing order.
    """
    return pd.DataFrame(
        [(p.gamma, p.feasible, p.status) for p in result.probes],
        columns=["gamma", "feasible", "status"],
    )
