import numpy as np
import pytest

from pymjnn.augmentation import stacked_activation
from pymjnn.errors import CertificateMismatch, DimensionMismatch
from pymjnn.lmi.conditions import assemble_analysis_known
from pymjnn.models.disturbance import (
    DecayingSinusoid,
    TimeSeriesDisturbance,
    ZeroDisturbance,
)
from pymjnn.models.gains import EstimatorGains
from pymjnn.models.plant import MjnnModel, TransitionCompletion
from pymjnn.sdp import solve_feasibility
from pymjnn.simulation import (
    empirical_l2linf,
    empirical_transition_frequencies,
    lyapunov_delta_check,
    mean_square_decay,
    resolve_completion,
    sample_mode_path,
    simulate,
)
from pymjnn.synthesis import verify_gains


def test_resolve_completion_prefers_model(network_model):
    assert resolve_completion(network_model) is network_model.completion


def test_resolve_completion_fully_known(two_node_model):
    completion = resolve_completion(two_node_model)

    assert completion.pi.tolist() == [[0.7, 0.3], [0.4, 0.6]]


def test_resolve_completion_uniform(network_model):
    model = network_model.model_copy(update={"completion": None})

    pi = resolve_completion(model).pi

    assert pi[0] == pytest.approx([0.3, 0.3, 0.1, 0.3])
    assert pi[1] == pytest.approx([0.8 / 3, 0.8 / 3, 0.8 / 3, 0.2])
    assert pi.sum(axis=1) == pytest.approx(np.ones(4))


def test_sample_mode_path_frequencies():
    completion = TransitionCompletion(pi=[[0.7, 0.3], [0.4, 0.6]])

    path = sample_mode_path(completion, 100_000, seed=11)

    assert len(path) == 100_001
    assert path[0] == 0
    freq = empirical_transition_frequencies(path, 2)
    assert np.allclose(freq, completion.pi, atol=0.02)


def test_empirical_transition_frequencies_unvisited():
    freq = empirical_transition_frequencies([0, 0, 1, 0], 3)

    assert freq.tolist() == [[0.5, 0.5, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]


def test_simulate_is_deterministic(network_model, network_gains):
    kwargs = {"disturbance": DecayingSinusoid(), "horizon": 60, "seed": 7}

    first = simulate(network_model, network_gains, **kwargs)
    second = simulate(network_model, network_gains, **kwargs)
    other = simulate(network_model, network_gains, run=1, **kwargs)

    assert first.modes == second.modes
    assert first.nodes == second.nodes
    assert np.array_equal(first.x_hat, second.x_hat)
    assert np.array_equal(first.ztilde_sq, second.ztilde_sq)
    assert (first.modes, first.delays) != (other.modes, other.delays)


def test_simulate_shapes(network_model, network_gains):
    traj = simulate(
        network_model, network_gains, disturbance=DecayingSinusoid(), horizon=30
    )

    offset = network_model.delay.tau_max
    assert traj.offset == offset
    assert traj.x_bar.shape == (offset + 31, network_model.nb)
    assert len(traj.modes) == 31
    assert len(traj.nodes) == len(traj.delays) == 30
    assert set(traj.nodes) <= {0, 1}
    assert all(1 <= tau <= 3 for tau in traj.delays)
    assert traj.ztilde_sq.shape == (31,)
    assert traj.energy > 0


def test_simulate_zero_gain_error_is_state(toy_model, zero_gains):
    traj = simulate(
        toy_model, zero_gains(toy_model), disturbance=DecayingSinusoid(), horizon=20
    )

    assert np.array_equal(traj.x_hat, np.zeros_like(traj.x_hat))
    x = traj.x_bar[traj.offset :, 0]
    assert traj.ztilde_sq == pytest.approx(x**2)
    w = traj.w[:, 0]
    assert x[1:] == pytest.approx(0.5 * x[:-1] + 0.5 * w)


def test_simulate_initial_history(toy_model, zero_gains):
    traj = simulate(
        toy_model,
        zero_gains(toy_model),
        horizon=3,
        initial_history=np.array([[4.0], [2.0]]),
    )

    assert traj.x_bar[:, 0].tolist() == [4.0, 2.0, 1.0, 0.5, 0.25]


def test_simulate_bad_history(toy_model, zero_gains):
    with pytest.raises(DimensionMismatch, match="Initial history"):
        simulate(toy_model, zero_gains(toy_model), initial_history=np.zeros((3, 1)))


def test_simulate_short_time_series(toy_model, zero_gains):
    disturbance = TimeSeriesDisturbance(w=np.zeros((5, 1)), v=np.zeros((5, 1)))

    with pytest.raises(DimensionMismatch, match="5 steps"):
        simulate(toy_model, zero_gains(toy_model), disturbance=disturbance, horizon=10)


def test_empirical_l2linf(toy_model, zero_gains):
    metrics = empirical_l2linf(
        toy_model,
        zero_gains(toy_model),
        disturbance=DecayingSinusoid(),
        runs=3,
        horizon=80,
    )

    assert metrics.ratio_status == "ok"
    assert metrics.empirical_ratio > 0
    assert metrics.single_count_ratio == pytest.approx(2 * metrics.empirical_ratio)
    assert metrics.sup_ztilde_sq == metrics.mean_ztilde_sq[metrics.sup_index]
    assert metrics.ms_state_norm.shape == (81,)
    assert metrics.node_counts == [[80], [80], [80]]
    # Every run sees the same deterministic signal in a single-mode plant.
    assert metrics.standard_error == pytest.approx(0.0, abs=1e-12)


def test_empirical_l2linf_zero_disturbance(toy_model, zero_gains):
    metrics = empirical_l2linf(
        toy_model,
        zero_gains(toy_model),
        disturbance=ZeroDisturbance(),
        runs=2,
        horizon=10,
    )

    assert metrics.ratio_status == "NotApplicable"
    assert metrics.empirical_ratio is None
    assert metrics.single_count_ratio is None
    assert metrics.energy == 0.0


def test_empirical_l2linf_requires_runs(toy_model, zero_gains):
    with pytest.raises(ValueError, match="At least one run"):
        empirical_l2linf(toy_model, zero_gains(toy_model), runs=0)


def test_mean_square_decay(toy_model, zero_gains):
    report = mean_square_decay(toy_model, zero_gains(toy_model), runs=5, horizon=40)

    assert report.status == "Decayed"
    assert report.decay_step == 10
    assert report.diverged_at is None
    assert report.ms_state_norm[1] == pytest.approx(0.25 * report.initial)


def test_mean_square_decay_diverges(scalar_model, zero_gains):
    model = scalar_model(a=1.5)

    report = mean_square_decay(model, zero_gains(model), runs=2, horizon=500)

    assert report.status == "NoDecay"
    assert report.decay_step is None
    assert report.diverged_at is not None
    assert 50 < report.diverged_at < 100


def test_lyapunov_delta_check(toy_model, zero_gains, settings):
    gains = zero_gains(toy_model)
    certificate = verify_gains(toy_model, gains, 1.0, settings).outcome.assignment
    traj = simulate(toy_model, gains, horizon=25, initial_scale=1.0, seed=5)

    report = lyapunov_delta_check(traj, certificate, toy_model)

    assert report.V.shape == (25,)
    assert np.all(report.V >= 0)
    assert np.all(report.delta <= 1e-9)
    assert report.expected_delta == pytest.approx(report.delta, abs=1e-9)


def _sector_model(nodes: int) -> MjnnModel:
    """Single-mode tanh plant with a delay range and one node per output."""
    eye = np.eye(nodes)
    return MjnnModel.model_validate(
        {
            "modes": [
                {
                    "A": np.diag([0.5, 0.4][:nodes]).tolist(),
                    "B": (0.2 * eye).tolist(),
                    "C": (0.1 * eye).tolist(),
                    "D1": np.zeros((nodes, 1)).tolist(),
                    "D2": np.zeros((nodes, 1)).tolist(),
                    "E": eye.tolist(),
                    "M": eye.tolist(),
                },
            ],
            "transitions": [[1.0]],
            "sector": {"F1": np.zeros((nodes, nodes)).tolist(), "F2": eye.tolist()},
            "delay": {"min": 1, "max": 3},
            "activation": {"type": "tanh", "scales": [1.0] * nodes},
            "protocol": {"partition": [1] * nodes},
        },
    )


@pytest.mark.parametrize("nodes", [1, 2])
def test_increment_bounded_by_certified_form(nodes, settings):
    model = _sector_model(nodes)
    copy_memory = np.vstack([np.zeros((nodes, nodes)), np.eye(nodes)])
    gains = EstimatorGains(K=[[copy_memory] * nodes])
    outcome = solve_feasibility(assemble_analysis_known(model, gains), settings)
    assert outcome.feasible
    certificate = outcome.assignment
    # With a single mode the next Lyapunov block is the one the path realizes.
    forms = {}
    for m in range(nodes):
        for m_next in range(nodes):
            problem = assemble_analysis_known(model, gains, m=m, m_next=m_next)
            (constraint,) = problem.constraints
            forms[m, m_next] = constraint.expr.value(certificate)

    steps = 0
    for run in range(50):
        traj = simulate(model, gains, horizon=21, seed=13, run=run, initial_scale=1.0)
        report = lyapunov_delta_check(traj, certificate, model)
        eta, off = traj.eta, traj.offset
        for k in range(traj.horizon - 1):
            past = eta[k + off - traj.delays[k]]
            xi = np.concatenate(
                [
                    eta[k + off],
                    past,
                    stacked_activation(model, eta[k + off]),
                    stacked_activation(model, past),
                ],
            )
            z = np.concatenate([eta[k + 1 + off], xi])
            bound = z @ forms[traj.nodes[k], traj.nodes[k + 1]] @ z
            assert report.delta[k] <= bound + 1e-8
            steps += 1

    assert steps == 1000


def test_lyapunov_delta_check_missing_block(toy_model, zero_gains):
    traj = simulate(toy_model, zero_gains(toy_model), horizon=5)

    with pytest.raises(CertificateMismatch, match=r"P\[1,1\]"):
        lyapunov_delta_check(traj, {"Z": np.eye(4)}, toy_model)


def test_lyapunov_delta_check_wrong_shape(toy_model, zero_gains):
    traj = simulate(toy_model, zero_gains(toy_model), horizon=5)
    certificate = {"P[1,1]": np.eye(2), "Z": np.eye(2)}

    with pytest.raises(CertificateMismatch, match="Z has shape"):
        lyapunov_delta_check(traj, certificate, toy_model)
