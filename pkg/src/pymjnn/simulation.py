"""Monte Carlo simulation of the plant, the scheduler and the estimator.

Every run owns a random stream derived from `SeedSequence([seed, run])`, so runs are
independent, reproducible and can be spread over worker processes without changing a
single bit of the output. At every step the stream is read in a fixed order: first the
delay draw, then the mode draw.

The plant is stepped in its original coordinates; the estimator in the augmented ones.
Their difference is the error the matrix inequalities reason about, which makes a
trajectory an independent check of the stacked closed loop in
[`pymjnn.augmentation`](augmentation.md).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from pymjnn.augmentation import augmented_activation, augmented_grid, build_closed_loop
from pymjnn.core import (
    activation_apply,
    complete_uniformly,
    completion_from_spec,
    sample_delay,
    sample_next_mode,
)
from pymjnn.errors import CertificateMismatch, DimensionMismatch, NumericOverflow
from pymjnn.lmi.conditions import p_name
from pymjnn.models.disturbance import TimeSeriesDisturbance, ZeroDisturbance
from pymjnn.models.protocol import SchedulerState
from pymjnn.models.results import (
    DecayReport,
    EnsembleMetrics,
    LyapunovReport,
    Trajectory,
)
from pymjnn.settings import Settings
from pymjnn.wtod import select_node, update_transmitted

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    import numpy.typing as npt

    from pymjnn.models.disturbance import Disturbance
    from pymjnn.models.gains import EstimatorGains
    from pymjnn.models.plant import MjnnModel, TransitionCompletion


def resolve_completion(model: MjnnModel) -> TransitionCompletion:
    """Pick the chain a model is simulated with.

    The model's own completion wins. A fully known transition matrix is its own
    completion. Otherwise the missing mass of every row is spread evenly over the
    unknown cells, which is logged since the result is a guess.

    Args:
        model (MjnnModel): The model.

    Returns:
        TransitionCompletion: The ground-truth chain.
    """
    if model.completion is not None:
        return model.completion
    if model.transitions.is_fully_known:
        return completion_from_spec(model.transitions)
    logger.info("No completion given, spreading the unknown mass uniformly")
    return complete_uniformly(model.transitions)


def _rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, run]))


def sample_mode_path(
    completion: TransitionCompletion,
    steps: int,
    seed: int = 0,
    initial_mode: int = 0,
) -> list[int]:
    """Sample a path of the Markov chain alone.

    Args:
        completion (TransitionCompletion): The chain.
        steps (int): Number of transitions.
        seed (int, optional): Seed of the stream. Defaults to `0`.
        initial_mode (int, optional): Zero-based starting mode. Defaults to `0`.

    Returns:
        list[int]: The zero-based modes, `steps + 1` of them.
    """
    rng = _rng(seed, 0)
    path = [initial_mode]
    for u in rng.random(steps):
        path.append(sample_next_mode(completion, path[-1], float(u)))
    return path


def empirical_transition_frequencies(
    trajectory: Trajectory | Sequence[int],
    N: int,  # noqa: N803
) -> npt.NDArray[np.float64]:
    """Count the observed transitions of a mode path, normalized per row.

    Args:
        trajectory (Trajectory | Sequence[int]): A trajectory or a bare mode path.
        N (int): The number of modes.

    Returns:
        npt.NDArray[np.float64]: `N x N` frequencies; rows of unvisited modes are zero.
    """
    modes = trajectory.modes if isinstance(trajectory, Trajectory) else list(trajectory)
    counts = np.zeros((N, N))
    np.add.at(counts, (modes[:-1], modes[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def simulate(  # noqa: PLR0913, PLR0915
    model: MjnnModel,
    gains: EstimatorGains,
    completion: TransitionCompletion | None = None,
    disturbance: Disturbance | None = None,
    horizon: int = 200,
    seed: int = 0,
    *,
    run: int = 0,
    initial_history: npt.NDArray[np.float64] | None = None,
    initial_scale: float = 0.0,
    initial_mode: int = 0,
    settings: Settings | None = None,
) -> Trajectory:
    """Run the closed loop for `horizon` steps.

    The estimator starts at zero and the scheduler memory `y_bar(-1)` is zero. The plant
    history `x(-tau_max)..x(0)` is `initial_history` when given, a standard normal draw
    scaled by `initial_scale` when that is positive, and zero otherwise.

    ???+ example
        ```python
        disturbance = DecayingSinusoid()
        traj = simulate(model, gains, disturbance=disturbance, horizon=200, seed=7)
        print(traj.nodes[:10], traj.ztilde_sq.max())
        ```

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The estimator gains.
        completion (TransitionCompletion | None, optional): The chain. Defaults to
            [`resolve_completion`](#pymjnn.simulation.resolve_completion).
        disturbance (Disturbance | None, optional): The disturbance. Defaults to none.
        horizon (int, optional): Number of steps. Defaults to `200`.
        seed (int, optional): Root seed. Defaults to `0`.
        run (int, optional): Run index, mixed into the seed. Defaults to `0`.
        initial_history (npt.NDArray[np.float64] | None, optional): Plant history,
            `(tau_max + 1) x n`, oldest row first. Defaults to `None`.
        initial_scale (float, optional): Scale of a random history. Defaults to `0.0`.
        initial_mode (int, optional): Zero-based starting mode. Defaults to `0`.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.

    Returns:
        Trajectory: Everything that happened.

    Raises:
        DimensionMismatch: If the history or a recorded disturbance has the wrong size.
        NumericOverflow: If a state entry exceeds `Settings.overflow_limit`.
    """
    settings = settings or Settings()
    completion = completion or resolve_completion(model)
    disturbance = disturbance or ZeroDisturbance()
    if isinstance(disturbance, TimeSeriesDisturbance) and disturbance.length < horizon:
        msg = (
            f"Recorded disturbance has {disturbance.length} steps, "
            f"horizon is {horizon}"
        )
        logger.error(msg)
        raise DimensionMismatch(msg)

    aug = augmented_grid(model)
    build_closed_loop(aug, gains)
    partition, weights = model.wtod.partition, model.wtod.resolved_weights
    n, nb, r = model.n, model.nb, model.r
    offset = model.delay.tau_max
    rng = _rng(seed, run)

    x_bar = np.zeros((offset + horizon + 1, nb))
    x_hat = np.zeros_like(x_bar)
    if initial_history is not None:
        history = np.asarray(initial_history, dtype=np.float64)
        if history.shape != (offset + 1, n):
            msg = (
                f"Initial history has shape {history.shape}, "
                f"expected {(offset + 1, n)}"
            )
            logger.error(msg)
            raise DimensionMismatch(msg)
        x_bar[: offset + 1, :n] = history
    elif initial_scale > 0:
        x_bar[: offset + 1, :n] = initial_scale * rng.standard_normal((offset + 1, n))

    modes, nodes, delays = [initial_mode], [], []
    w_rec, v_rec = np.zeros((horizon, r)), np.zeros((horizon, r))
    for k in range(horizon):
        row = k + offset
        i = modes[k]
        mode = model.modes[i]
        x = x_bar[row, :n]
        w, v = disturbance.sample(k, r)
        y = mode.E @ x + mode.D2 @ v
        memory = SchedulerState(y_bar=x_bar[row, n:])
        o = select_node(memory, y, weights, partition)
        y_bar = update_transmitted(memory, y, o, partition).y_bar
        u_delay, u_mode = rng.random(2)
        tau = sample_delay(model.delay, float(u_delay))
        past = row - tau

        x_next = (
            mode.A @ x
            + mode.B @ activation_apply(model, x)
            + mode.C @ activation_apply(model, x_bar[past, :n])
            + mode.D1 @ w
        )
        plant, k_gain = aug[i][o], gains[i, o]
        xh = x_hat[row]
        x_hat[row + 1] = (
            plant.A_bar @ xh
            + plant.B_bar @ augmented_activation(model, xh)
            + plant.C_bar @ augmented_activation(model, x_hat[past])
            + k_gain @ (y_bar - plant.E_bar @ xh)
        )
        x_bar[row + 1] = np.concatenate([x_next, y_bar])
        worst = max(np.abs(x_bar[row + 1]).max(), np.abs(x_hat[row + 1]).max())
        if not np.isfinite(worst) or worst > settings.overflow_limit:
            msg = f"Trajectory diverged at step {k + 1} (run {run})"
            logger.error(msg)
            raise NumericOverflow(msg, step=k + 1)

        modes.append(sample_next_mode(completion, i, float(u_mode)))
        nodes.append(o)
        delays.append(tau)
        w_rec[k], v_rec[k] = w, v

    e = x_bar[offset:, :n] - x_hat[offset:, :n]
    ztilde_sq = np.array(
        [float(np.sum((model.modes[i].M @ e[k]) ** 2)) for k, i in enumerate(modes)],
    )
    w_sq = 2 * (np.sum(w_rec**2, axis=1) + np.sum(v_rec**2, axis=1))
    return Trajectory(
        horizon=horizon,
        offset=offset,
        n=n,
        modes=modes,
        delays=delays,
        nodes=nodes,
        x_bar=x_bar,
        x_hat=x_hat,
        w=w_rec,
        v=v_rec,
        ztilde_sq=ztilde_sq,
        w_sq=w_sq,
    )


def _ensemble(
    model: MjnnModel,
    gains: EstimatorGains,
    runs: int,
    settings: Settings,
    **kwargs: object,
) -> list[Trajectory]:
    worker = partial(_simulate_run, model, gains, settings, kwargs)
    if settings.workers > 1 and runs > 1:
        # The model, including its activation, must be picklable.
        with ProcessPoolExecutor(max_workers=settings.workers) as executor:
            return list(executor.map(worker, range(runs)))
    return [worker(run) for run in range(runs)]


def _simulate_run(
    model: MjnnModel,
    gains: EstimatorGains,
    settings: Settings,
    kwargs: dict[str, object],
    run: int,
) -> Trajectory:
    return simulate(
        model,
        gains,
        run=run,
        settings=settings,
        **kwargs,  # type: ignore[arg-type]
    )


def _state_norms(traj: Trajectory) -> npt.NDArray[np.float64]:
    eta = traj.eta[traj.offset :]
    return np.sum(eta**2, axis=1)


def empirical_l2linf(  # noqa: PLR0913
    model: MjnnModel,
    gains: EstimatorGains,
    completion: TransitionCompletion | None = None,
    disturbance: Disturbance | None = None,
    runs: int = 100,
    horizon: int = 200,
    seed: int = 0,
    settings: Settings | None = None,
) -> EnsembleMetrics:
    """Estimate the peak-to-energy ratio of the closed loop from zero initial state.

    The supremum over `k` is taken after averaging over the ensemble. The ratio is
    reported twice: against `sum ||W(k)||^2`, which counts `[w; v]` twice since `W`
    stacks it twice, and against the single count.

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The estimator gains.
        completion (TransitionCompletion | None, optional): The chain. Defaults to
            [`resolve_completion`](#pymjnn.simulation.resolve_completion).
        disturbance (Disturbance | None, optional): The disturbance. Defaults to none.
        runs (int, optional): Ensemble size. Defaults to `100`.
        horizon (int, optional): Number of steps. Defaults to `200`.
        seed (int, optional): Root seed. Defaults to `0`.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.

    Returns:
        EnsembleMetrics: The ensemble statistics; the ratios are `None` and the status
            `NotApplicable` when the disturbance carries no energy.

    Raises:
        ValueError: If `runs < 1`.
    """
    if runs < 1:
        msg = f"At least one run is required, got {runs}"
        logger.error(msg)
        raise ValueError(msg)
    settings = settings or Settings()
    trajs = _ensemble(
        model,
        gains,
        runs,
        settings,
        completion=completion,
        disturbance=disturbance,
        horizon=horizon,
        seed=seed,
    )
    z = np.array([t.ztilde_sq for t in trajs])
    mean_z = z.mean(axis=0)
    sup_index = int(np.argmax(mean_z))
    energy = float(np.mean([t.energy for t in trajs]))
    counts = [
        np.bincount(t.nodes, minlength=model.n_nodes).astype(int).tolist()
        for t in trajs
    ]
    ratio = single = stderr = None
    status = "NotApplicable"
    if energy > 0:
        status = "ok"
        ratio = float(mean_z[sup_index] / energy)
        single = 2 * ratio
        if runs > 1:
            stderr = float(z[:, sup_index].std(ddof=1) / np.sqrt(runs) / energy)
    logger.info(f"Ensemble of {runs} runs: ratio={ratio}, energy={energy:.6g}")
    return EnsembleMetrics(
        runs=runs,
        horizon=horizon,
        ms_state_norm=np.mean([_state_norms(t) for t in trajs], axis=0),
        mean_ztilde_sq=mean_z,
        sup_index=sup_index,
        sup_ztilde_sq=float(mean_z[sup_index]),
        energy=energy,
        ratio_status=status,
        empirical_ratio=ratio,
        single_count_ratio=single,
        standard_error=stderr,
        node_counts=counts,
    )


def mean_square_decay(  # noqa: PLR0913
    model: MjnnModel,
    gains: EstimatorGains,
    completion: TransitionCompletion | None = None,
    runs: int = 50,
    horizon: int = 500,
    seed: int = 0,
    initial_scale: float = 1.0,
    threshold: float = 1e-6,
    settings: Settings | None = None,
) -> DecayReport:
    """Check that the unforced closed loop forgets random initial histories.

    Divergence is a legitimate answer here: it is reported as `NoDecay` with the step
    at which the first run left `Settings.overflow_limit`.

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The estimator gains.
        completion (TransitionCompletion | None, optional): The chain. Defaults to
            [`resolve_completion`](#pymjnn.simulation.resolve_completion).
        runs (int, optional): Ensemble size. Defaults to `50`.
        horizon (int, optional): Number of steps. Defaults to `500`.
        seed (int, optional): Root seed. Defaults to `0`.
        initial_scale (float, optional): Scale of the random histories. Defaults to
            `1.0`.
        threshold (float, optional): Fraction of the initial mean square to reach.
            Defaults to `1e-6`.
        settings (Settings | None, optional): Numerical settings. Defaults to
            `Settings()`.

    Returns:
        DecayReport: The first step below `threshold` times the initial mean square,
            or `NoDecay`.
    """
    settings = settings or Settings()
    try:
        trajs = _ensemble(
            model,
            gains,
            runs,
            settings,
            completion=completion,
            horizon=horizon,
            seed=seed,
            initial_scale=initial_scale,
        )
    except NumericOverflow as e:
        logger.info(f"Unforced closed loop diverged at step {e.step}")
        return DecayReport(
            status="NoDecay",
            initial=float("nan"),
            ms_state_norm=np.zeros(0),
            diverged_at=e.step,
        )
    ms = np.mean([_state_norms(t) for t in trajs], axis=0)
    initial = float(ms[0])
    below = np.flatnonzero(ms <= threshold * initial) if initial > 0 else np.array([0])
    if below.size == 0:
        return DecayReport(status="NoDecay", initial=initial, ms_state_norm=ms)
    return DecayReport(
        status="Decayed",
        decay_step=int(below[0]),
        initial=initial,
        ms_state_norm=ms,
    )


def _check_certificate(
    certificate: Mapping[str, npt.NDArray[np.float64]],
    model: MjnnModel,
) -> None:
    nb = model.nb
    expected = {
        p_name(j, m): (nb, nb) for j in range(model.N) for m in range(model.n_nodes)
    }
    expected["Z"] = (2 * nb, 2 * nb)
    for name, shape in expected.items():
        if name not in certificate or np.shape(certificate[name]) != shape:
            got = np.shape(certificate[name]) if name in certificate else None
            msg = f"Certificate block {name} has shape {got}, expected {shape}"
            logger.error(msg)
            raise CertificateMismatch(msg)


def lyapunov_delta_check(  # noqa: PLR0914
    trajectory: Trajectory,
    certificate: Mapping[str, npt.NDArray[np.float64]],
    model: MjnnModel,
    completion: TransitionCompletion | None = None,
) -> LyapunovReport:
    """Evaluate the Lyapunov-Krasovskii functional of a certificate along a trajectory.

    ```
    V(k) = eta^T diag(P, P) eta
         + sum_{d = k - tau(k)}^{k - 1} eta(d)^T Z eta(d)
         + sum_{l = k - tau_max + 1}^{k - tau_min} sum_{d = l}^{k - 1} eta(d)^T Z eta(d)
    ```

    with `P = P[r(k), o(k)]`. Next to the pathwise increment, the expected increment
    over the next mode is reported: for every candidate mode the next node follows from
    the scheduler, and the next delay is averaged over its range.

    Args:
        trajectory (Trajectory): The trajectory.
        certificate (Mapping[str, npt.NDArray[np.float64]]): The `P[j,m]` and `Z`
            blocks of a feasible analysis solve.
        model (MjnnModel): The model the trajectory was simulated with.
        completion (TransitionCompletion | None, optional): The chain for the expected
            increment. Defaults to
            [`resolve_completion`](#pymjnn.simulation.resolve_completion).

    Returns:
        LyapunovReport: `V(k)` for `k < horizon`, its pathwise increments and its
            expected increments.

    Raises:
        CertificateMismatch: If a block is missing or has the wrong size.
    """
    _check_certificate(certificate, model)
    completion = completion or resolve_completion(model)
    n, nb = model.n, model.nb
    off, horizon = trajectory.offset, trajectory.horizon
    tau_min, tau_max = model.delay.tau_min, model.delay.tau_max
    eta = trajectory.eta
    z = np.asarray(certificate["Z"])
    q = np.einsum("ki,ij,kj->k", eta, z, eta)
    cum = np.concatenate([[0.0], np.cumsum(q)])

    def window(a: int, b: int) -> float:
        return float(cum[b + off + 1] - cum[a + off]) if b >= a else 0.0

    def v2(k: int, tau: int) -> float:
        return window(k - tau, k - 1) + sum(
            window(low, k - 1) for low in range(k - tau_max + 1, k - tau_min + 1)
        )

    def v1(k: int, j: int, m: int) -> float:
        p = np.asarray(certificate[p_name(j, m)])
        x = eta[k + off]
        return float(x[:nb] @ p @ x[:nb] + x[nb:] @ p @ x[nb:])

    V = np.array(
        [
            v1(k, trajectory.modes[k], trajectory.nodes[k])
            + v2(k, trajectory.delays[k])
            for k in range(horizon)
        ],
    )
    partition, weights = model.wtod.partition, model.wtod.resolved_weights
    expected = []
    for k in range(horizon - 1):
        row = k + 1 + off
        memory = SchedulerState(y_bar=trajectory.x_bar[row, n:])
        x_next = trajectory.x_bar[row, :n]
        mean_v2 = float(np.mean([v2(k + 1, t) for t in range(tau_min, tau_max + 1)]))
        total = 0.0
        for j, pij in enumerate(completion.pi[trajectory.modes[k]]):
            if pij == 0:
                continue
            mode = model.modes[j]
            y = mode.E @ x_next + mode.D2 @ trajectory.v[k + 1]
            o = select_node(memory, y, weights, partition)
            total += pij * v1(k + 1, j, o)
        expected.append(total + mean_v2 - V[k])
    return LyapunovReport(V=V, delta=np.diff(V), expected_delta=np.array(expected))
