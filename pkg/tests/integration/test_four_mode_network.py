import numpy as np
import pytest

from pymjnn.core import check_model
from pymjnn.simulation import lyapunov_delta_check, simulate
from pymjnn.synthesis import bisect_gamma, verify_gains

pytestmark = pytest.mark.slow


@pytest.mark.order(1)
@pytest.mark.dependency(name="validate_network", scope="session")
def test_validate_network(network_model):
    report = check_model(network_model)

    assert report.valid, report.violations


@pytest.mark.order(2)
@pytest.mark.dependency(depends=["validate_network"], scope="session")
def test_reference_gains_estimate(designer, network_model, reference_gains):
    traj = designer.simulate(network_model, reference_gains, horizon=200)

    error = np.linalg.norm(traj.e[traj.offset :, : network_model.n], axis=1)
    assert error[-1] < 1e-3 * error.max()


@pytest.mark.order(3)
@pytest.mark.dependency(depends=["validate_network"], scope="session")
def test_reference_gains_verify(designer, network_model, reference_gains):
    result = bisect_gamma(
        network_model,
        0.1,
        100.0,
        steps=6,
        gains=reference_gains,
        settings=designer,
    )

    assert result.verification is not None
    assert result.verification.feasible
    check = verify_gains(network_model, reference_gains, result.gamma, designer)
    assert check.feasible


@pytest.mark.order(4)
@pytest.mark.dependency(depends=["validate_network"], scope="session")
def test_synthesize_network_fixed_level(designer, network_model):
    result = designer.synthesize(network_model, 5.0)

    assert result.converged
    assert designer.ccl_mu == 1e-6
    assert len(result.ccl_trace) <= designer.ccl_max_iters == 50
    assert result.ccl_trace[-1].trace_gap < 1e-6
    assert verify_gains(network_model, result.gains, 5.0, designer).feasible


@pytest.mark.order(5)
@pytest.mark.dependency(
    name="synthesize_network",
    depends=["validate_network"],
    scope="session",
)
def test_synthesize_network(designer, network_model, results):
    sweep = designer.sweep(network_model, 0.1, 10.0, steps=4)

    assert sweep.synthesis is not None
    assert sweep.synthesis.converged
    assert sweep.synthesis.ccl_trace[-1].trace_gap < designer.ccl_mu
    results["gamma"] = sweep.gamma
    results["lower"] = sweep.lower
    results["gains"] = sweep.synthesis.gains
    results["certificate"] = sweep.synthesis.certificate.assignment


@pytest.mark.order(6)
@pytest.mark.dependency(depends=["synthesize_network"], scope="session")
def test_reverify_synthesized_gains(designer, network_model, results):
    result = verify_gains(network_model, results["gains"], results["gamma"], designer)

    assert result.feasible


@pytest.mark.order(7)
@pytest.mark.dependency(depends=["synthesize_network"], scope="session")
def test_empirical_ratio_below_certificate(designer, network_model, results):
    metrics = designer.ensemble(
        network_model,
        results["gains"],
        runs=100,
        horizon=200,
    )

    assert metrics.ratio_status == "ok"
    bound = results["gamma"] ** 2 + 3 * metrics.standard_error
    assert metrics.empirical_ratio <= bound


@pytest.mark.order(8)
@pytest.mark.dependency(depends=["synthesize_network"], scope="session")
def test_mean_square_decay(designer, network_model, results):
    report = designer.decay(network_model, results["gains"], runs=50, horizon=500)

    assert report.status == "Decayed"


@pytest.mark.order(9)
@pytest.mark.dependency(depends=["synthesize_network"], scope="session")
def test_expected_lyapunov_decrease(designer, network_model, results):
    burn_in = 5
    decreasing = []
    for run in range(20):
        traj = simulate(
            network_model,
            results["gains"],
            horizon=60,
            seed=designer.seed,
            run=run,
            initial_scale=1.0,
        )
        report = lyapunov_delta_check(traj, results["certificate"], network_model)
        decreasing.append(report.expected_delta[burn_in:] < 0)

    assert np.mean(decreasing) >= 0.99
