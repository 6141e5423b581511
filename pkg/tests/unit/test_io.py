import json

import numpy as np
import pandas as pd
import pytest

from pymjnn.errors import DocumentFormatError
from pymjnn.io import (
    bisection_frame,
    ccl_trace_frame,
    dump_gains,
    dump_model,
    ensemble_frame,
    example_path,
    load_gains,
    load_model,
    mode_path_frame,
    node_schedule_frame,
    trajectory_frame,
    write_csv,
)
from pymjnn.models.disturbance import DecayingSinusoid
from pymjnn.models.results import (
    BisectionProbe,
    BisectionResult,
    CclIteration,
    SynthesisResult,
)
from pymjnn.simulation import empirical_l2linf, simulate


def test_example_path():
    assert example_path().name == "four_mode_network.json"
    assert example_path().is_file()
    assert example_path("four_mode_network_gains.json").is_file()


def test_load_example(network_model, network_gains):
    assert network_model.N == 4
    assert network_model.n == 2
    assert network_model.n_nodes == 2
    assert network_model.completion is not None
    assert network_gains[0, 0].shape == (network_model.nb, network_model.m)


def test_model_round_trip(network_model, network_gains, tmp_path):
    path = tmp_path / "model.json"

    dump_model(network_model, path, gains=network_gains)

    dumped = load_model(path).model_dump(mode="json", by_alias=True)
    assert dumped == network_model.model_dump(mode="json", by_alias=True)
    loaded = load_gains(path)
    for i in range(network_model.N):
        for m in range(network_model.n_nodes):
            assert np.array_equal(loaded[i, m], network_gains[i, m])


def test_gains_round_trip(network_gains, tmp_path):
    path = tmp_path / "gains.json"

    dump_gains(network_gains, path)

    doc = json.loads(path.read_text())
    assert {"1,1", "4,2"} <= set(doc)
    assert np.array_equal(load_gains(path)[3, 1], network_gains[3, 1])


def test_load_gains_from_model_without_gains(network_model, tmp_path):
    path = tmp_path / "model.json"
    dump_model(network_model, path)

    with pytest.raises(ValueError, match="carries no gain grid"):
        load_gains(path)


def test_load_model_not_an_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")

    with pytest.raises(DocumentFormatError, match="Expected a JSON object"):
        load_model(path)
    with pytest.raises(DocumentFormatError, match="got list"):
        load_gains(path)


def test_dump_callable_activation(scalar_doc, tmp_path):
    from pymjnn.models.plant import MjnnModel

    doc = scalar_doc()
    doc["activation"] = {"type": "callable", "func": np.tanh}
    model = MjnnModel.model_validate(doc)

    with pytest.raises(ValueError, match="callable activation"):
        dump_model(model, tmp_path / "model.json")


def test_trajectory_frames(network_model, network_gains):
    traj = simulate(
        network_model,
        network_gains,
        disturbance=DecayingSinusoid(),
        horizon=12,
    )

    frame = trajectory_frame(traj)
    assert list(frame.columns) == [
        "k",
        "mode",
        "node",
        "x1",
        "x2",
        "e1",
        "e2",
        "ztilde_sq",
        "V",
    ]
    assert len(frame) == 12
    assert frame["mode"].between(1, 4).all()
    assert frame["V"].isna().all()

    modes = mode_path_frame(traj)
    assert len(modes) == 13
    assert modes["mode"].tolist() == [i + 1 for i in traj.modes]

    schedule = node_schedule_frame(traj, network_model)
    assert list(schedule.columns) == ["k", "node", "score1", "score2"]
    winners = schedule[["score1", "score2"]].to_numpy().argmax(axis=1) + 1
    assert schedule["node"].tolist() == winners.tolist()


def test_ensemble_frame(toy_model, zero_gains):
    metrics = empirical_l2linf(
        toy_model,
        zero_gains(toy_model),
        disturbance=DecayingSinusoid(),
        runs=1,
        horizon=5,
    )

    frame = ensemble_frame(metrics)

    assert list(frame.columns) == ["k", "ms_state_norm", "mean_ztilde_sq"]
    assert len(frame) == 6


def test_ccl_trace_frame():
    result = SynthesisResult(
        status="MaxIters",
        gamma=1.0,
        ccl_trace=[
            CclIteration(
                iteration=0,
                objective=5.0,
                trace_gap=1.0,
                max_coupling_residual=0.5,
            ),
        ],
    )

    frame = ccl_trace_frame(result)

    assert list(frame.columns) == [
        "iter",
        "objective",
        "trace_gap",
        "max_coupling_residual",
    ]
    assert frame.iloc[0].tolist() == [0, 5.0, 1.0, 0.5]


def test_bisection_frame_and_csv(tmp_path):
    result = BisectionResult(
        gamma=1.0,
        lower=0.5,
        probes=[
            BisectionProbe(gamma=1.0, feasible=True, status="Converged"),
            BisectionProbe(gamma=0.5, feasible=False, status="InfeasibleInit"),
        ],
    )
    path = tmp_path / "bisection.csv"

    write_csv(bisection_frame(result), path)

    assert path.read_text().splitlines() == [
        "gamma,feasible,status",
        "1,True,Converged",
        "0.5,False,InfeasibleInit",
    ]
    assert pd.read_csv(path)["feasible"].tolist() == [True, False]
