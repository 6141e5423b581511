"""Assembly of the stability, performance and synthesis conditions.

Every condition bounds the expected Lyapunov-Krasovskii increment

```
E[V(k+1)] - V(k) <= xi^T (Omega1^T Upsilon Omega1 + Omega2) xi
```

over the stacked vector `xi = [eta; eta_tau; f_tilde; f_tilde_tau]`, extended with the
disturbance `W` for the performance conditions. `Omega1 = [A_tilde, 0, B_tilde,
C_tilde, D_tilde]` is the one-step map, `Upsilon` the expected next-step Lyapunov
matrix and `Omega2` collects the current-step terms together with the S-procedure
multipliers of the sector and scheduling constraints.

The expectation over the next mode mixes the Lyapunov matrices of the successor modes
with the transition probabilities. When a row is only partially known, the mixture is
split into a known part, normalized by its known mass, and one vertex per unknown
successor; each piece gets its own condition, and all of them together imply the
original one since the row is a convex combination of the pieces. The next transmitting
node depends on the future output, so every condition is imposed for every candidate
next node.

Analysis conditions are linear for fixed gains: `Upsilon` multiplies `Omega1` from the
left. Synthesis conditions replace `Upsilon` by the inverses `X` of the Lyapunov
matrices, which leaves the gains entering linearly; the inverse relations are left as
couplings for the cone complementarity loop.

Variable names use one-based indices: `P[j,m]`, `X[j,m]`, `K[i,m]`, `Z`, `rho1[i]`,
`rho2[i]` and `sigma[i,m,m']`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Literal, NamedTuple

import numpy as np
from loguru import logger

from pymjnn.augmentation import AugmentedPlant, augmented_grid, build_closed_loop
from pymjnn.core import known_index_sets
from pymjnn.errors import RequiresFullTP
from pymjnn.lmi.blocks import BlockLayout, lifted_sector_multiplier
from pymjnn.lmi.expressions import ExprBuilder
from pymjnn.lmi.problem import Constraint, LmiProblem
from pymjnn.lmi.variables import DecisionVar
from pymjnn.models.gains import EstimatorGains
from pymjnn.wtod import selector_matrix

if TYPE_CHECKING:
    import numpy.typing as npt

    from pymjnn.augmentation import ClosedLoopSystem
    from pymjnn.models.plant import MjnnModel

AssemblyMode = Literal["vertex", "averaged"]


def p_name(j: int, m: int) -> str:
    """Name of the Lyapunov block of mode `j` and node `m`."""  # noqa: DOC201
    return f"P[{j + 1},{m + 1}]"


def x_name(j: int, m: int) -> str:
    """Name of the inverse Lyapunov block of mode `j` and node `m`."""  # noqa: DOC201
    return f"X[{j + 1},{m + 1}]"


def k_name(i: int, m: int) -> str:
    """Name of the gain of mode `i` and node `m`."""  # noqa: DOC201
    return f"K[{i + 1},{m + 1}]"


def sigma_name(i: int, m: int, other: int) -> str:
    """Name of the multiplier of mode `i`, node `m` against node `other`."""  # noqa: DOC201
    return f"sigma[{i + 1},{m + 1},{other + 1}]"


class Vertex(NamedTuple):
    """One piece of the expected next-step Lyapunov matrix."""

    weights: tuple[tuple[int, float], ...]
    label: str


def successor_vertices(
    model: MjnnModel,
    i: int,
    mode: AssemblyMode = "vertex",
) -> list[Vertex]:
    """Split the expectation over the successor of mode `i` into conditions.

    In `vertex` mode the known part yields one piece weighted by `pi_ij / pi_K` (by
    `pi_ij` when the row is fully known) and every unknown successor one piece of
    weight one. In `averaged` mode a single piece bounds the unknown part by
    `(1 - pi_K)` times the sum of the unknown successors.

    Args:
        model (MjnnModel): The model.
        i (int): The zero-based current mode.
        mode (AssemblyMode, optional): The split. Defaults to `"vertex"`.

    Returns:
        list[Vertex]: The pieces; zero-probability successors are left out.
    """
    sets = known_index_sets(model.transitions, i)
    values = model.transitions.known_values[i]
    if mode == "averaged":
        rest = max(1.0 - sets.pi_known, 0.0)
        weights = [(j, float(values[j])) for j in sets.known if values[j] > 0]
        weights += [(j, rest) for j in sets.unknown if rest > 0]
        return [Vertex(tuple(weights), "bound")]
    out = []
    if sets.pi_known > 0:
        scale = 1.0 if not sets.unknown else sets.pi_known
        weights = [(j, float(values[j]) / scale) for j in sets.known if values[j] > 0]
        out.append(Vertex(tuple(weights), "known"))
    out += [Vertex(((j, 1.0),), f"unknown j={j + 1}") for j in sets.unknown]
    return out


class _Assembly:
    """Constant data shared by every condition of one model."""

    def __init__(self, model: MjnnModel, kind: str) -> None:
        self.model = model
        self.kind = kind
        self.performance = kind != "stability"
        self.n, self.ny, self.r, self.nb = model.n, model.m, model.r, model.nb
        self.N, self.M = model.N, model.n_nodes
        self.partition = model.wtod.partition
        self.q_bar = model.wtod.resolved_weights.q_bar()
        self.aug = augmented_grid(model)
        self.f3, self.f4 = lifted_sector_multiplier(model.sector, self.n, self.ny)
        self.tau_span = 1 + model.delay.tau_max - model.delay.tau_min
        sizes = {
            "eta": 2 * self.nb,
            "eta_tau": 2 * self.nb,
            "f": 4 * self.n,
            "f_tau": 4 * self.n,
        }
        if self.performance:
            sizes["W"] = 4 * self.r
        self.xi = BlockLayout(**sizes)

    def variables(self) -> list[DecisionVar]:
        out = [
            DecisionVar.symmetric(p_name(j, m), self.nb)
            for j in range(self.N)
            for m in range(self.M)
        ]
        out.append(DecisionVar.symmetric("Z", 2 * self.nb))
        for i in range(self.N):
            out += [
                DecisionVar.scalar(f"rho1[{i + 1}]"),
                DecisionVar.scalar(f"rho2[{i + 1}]"),
            ]
            out += [
                DecisionVar.scalar(sigma_name(i, m, other), positivity="nonneg")
                for m in range(self.M)
                for other in range(self.M)
                if other != m
            ]
        return out

    def e_check(self, i: int) -> npt.NDArray[np.float64]:
        """`[E_i, -I, 0]`, the output deviation `y(k) - y_bar(k - 1)` from `eta`."""
        return np.hstack(
            [self.model.modes[i].E, -np.eye(self.ny), np.zeros((self.ny, self.nb))],
        )

    def d_hat(self, i: int) -> npt.NDArray[np.float64]:
        """`[0, D2_i, 0]`, the output deviation from `W`."""
        r = self.r
        return np.hstack(
            [
                np.zeros((self.ny, r)),
                self.model.modes[i].D2,
                np.zeros((self.ny, 2 * r)),
            ],
        )

    def omega1(
        self,
        plant: AugmentedPlant,
        k: npt.NDArray[np.float64],
    ) -> npt.NDArray[np.float64]:
        """One-step map `[A_tilde, 0, B_tilde, C_tilde, (D_tilde)]` for a fixed gain."""
        a_bar = plant.A_bar
        d1 = plant.D1_bar
        a_t = np.block(
            [
                [a_bar, np.zeros_like(a_bar)],
                [np.zeros_like(a_bar), a_bar - k @ plant.E_bar],
            ],
        )
        b_t = np.kron(np.eye(2), plant.B_bar)
        c_t = np.kron(np.eye(2), plant.C_bar)
        blocks = [a_t, np.zeros_like(a_t), b_t, c_t]
        if self.performance:
            d_t = np.block(
                [
                    [d1, np.zeros_like(d1)],
                    [np.zeros_like(d1), d1 - k @ plant.D2_bar],
                ],
            )
            blocks.append(d_t)
        return np.hstack(blocks)

    def add_omega2(self, b: ExprBuilder, i: int, m: int, top: int) -> None:
        """Add the current-step terms and the multipliers at offset `top`."""
        nb, xi = self.nb, self.xi
        eta, eta_tau = top + xi.offset("eta"), top + xi.offset("eta_tau")
        f, f_tau = top + xi.offset("f"), top + xi.offset("f_tau")
        eye_nb = np.eye(nb)
        for h in range(2):
            b.var(p_name(i, m), -eye_nb, eye_nb, eta + h * nb, eta + h * nb)
        eye_eta = np.eye(2 * nb)
        b.var("Z", self.tau_span * eye_eta, eye_eta, eta, eta)
        b.var("Z", -eye_eta, eye_eta, eta_tau, eta_tau)
        rho1, rho2 = f"rho1[{i + 1}]", f"rho2[{i + 1}]"
        eye_f = np.eye(4 * self.n)
        b.scalar(rho1, -self.f3, eta, eta)
        b.scalar(rho1, self.f4, eta, f)
        b.scalar(rho1, -eye_f, f, f)
        b.scalar(rho2, -self.f3, eta_tau, eta_tau)
        b.scalar(rho2, self.f4, eta_tau, f_tau)
        b.scalar(rho2, -eye_f, f_tau, f_tau)
        e_check = self.e_check(i)
        phi_m = selector_matrix(self.partition, m)
        if self.performance:
            w = top + xi.offset("W")
            d_hat = self.d_hat(i)
            b.constant(-np.eye(4 * self.r), w, w)
        for other in range(self.M):
            if other == m:
                continue
            g = self.q_bar @ (selector_matrix(self.partition, other) - phi_m)
            g = (g + g.T) / 2
            name = sigma_name(i, m, other)
            b.scalar(name, -e_check.T @ g @ e_check, eta, eta)
            if self.performance:
                b.scalar(name, -e_check.T @ g @ d_hat, eta, w)
                b.scalar(name, -d_hat.T @ g @ d_hat, w, w)

    def analysis_constraint(
        self,
        i: int,
        m: int,
        m_next: int,
        vertex: Vertex,
        gains: EstimatorGains,
    ) -> Constraint:
        nb = self.nb
        top = 2 * nb
        b = ExprBuilder(top + self.xi.size)
        omega1 = self.omega1(self.aug[i][m], gains[i, m])
        eye_nb = np.eye(nb)
        for j, w in vertex.weights:
            for h in range(2):
                rows = slice(h * nb, (h + 1) * nb)
                b.var(p_name(j, m_next), -w * eye_nb, eye_nb, h * nb, h * nb)
                b.var(p_name(j, m_next), w * eye_nb, omega1[rows], h * nb, top)
        self.add_omega2(b, i, m, top)
        return Constraint(
            expr=b.build(),
            sense="NegDef",
            label=f"{self.kind}(i={i + 1}, m={m + 1}, m'={m_next + 1}, {vertex.label})",
        )

    def synthesis_constraint(
        self,
        i: int,
        m: int,
        m_next: int,
        vertex: Vertex,
    ) -> Constraint:
        nb = self.nb
        blocks = len(vertex.weights)
        top = blocks * 2 * nb
        b = ExprBuilder(top + self.xi.size)
        plant = self.aug[i][m]
        omega1 = self.omega1(plant, np.zeros((nb, self.ny)))
        eye_nb = np.eye(nb)
        lift = np.vstack([np.zeros((nb, nb)), eye_nb])
        e_cols = np.hstack([np.zeros((self.ny, nb)), plant.E_bar])
        d_cols = np.hstack([np.zeros((self.ny, 2 * self.r)), plant.D2_bar])
        for s, (j, w) in enumerate(vertex.weights):
            row = s * 2 * nb
            root = float(np.sqrt(w))
            for h in range(2):
                b.var(x_name(j, m_next), -eye_nb, eye_nb, row + h * nb, row + h * nb)
            b.constant(root * omega1, row, top)
            b.var(k_name(i, m), -root * lift, e_cols, row, top + self.xi.offset("eta"))
            if self.performance:
                w_col = top + self.xi.offset("W")
                b.var(k_name(i, m), -root * lift, d_cols, row, w_col)
        self.add_omega2(b, i, m, top)
        return Constraint(
            expr=b.build(),
            sense="NegDef",
            label=f"synthesis(i={i + 1}, m={m + 1}, m'={m_next + 1}, {vertex.label})",
        )

    def plant_indices(self) -> list[int]:
        """Rows of an analysis constraint that only see `x_bar` and its inputs."""
        nb, xi, top = self.nb, self.xi, 2 * self.nb
        segments = [
            (0, nb),
            (top + xi.offset("eta"), nb),
            (top + xi.offset("eta_tau"), nb),
            (top + xi.offset("f"), 2 * self.n),
            (top + xi.offset("f_tau"), 2 * self.n),
        ]
        if self.performance:
            segments.append((top + xi.offset("W"), 2 * self.r))
        return [k for start, length in segments for k in range(start, start + length)]

    def plant_constraint(
        self,
        i: int,
        m: int,
        m_next: int,
        vertex: Vertex,
    ) -> Constraint:
        """The `x_bar` block of the analysis condition, which no gain enters."""
        zero = EstimatorGains.zeros(self.N, self.M, self.nb, self.ny)
        full = self.analysis_constraint(i, m, m_next, vertex, zero)
        return Constraint(
            expr=full.expr.restricted(self.plant_indices()),
            sense="NegDef",
            label=f"plant(i={i + 1}, m={m + 1}, m'={m_next + 1}, {vertex.label})",
        )

    def output_constraint(self, i: int, m: int, gamma: float) -> Constraint:
        """`[[P, M_tilde^T], [M_tilde, gamma^2 I]] > 0`, bounding the peak error."""
        nb = self.nb
        q = self.model.q
        m_bar = self.aug[i][m].M_bar
        m_tilde = np.hstack([np.zeros_like(m_bar), m_bar])
        b = ExprBuilder(2 * nb + q)
        eye_nb = np.eye(nb)
        for h in range(2):
            b.var(p_name(i, m), eye_nb, eye_nb, h * nb, h * nb)
        b.constant(m_tilde.T, 0, 2 * nb)
        b.constant(gamma**2 * np.eye(q), 2 * nb, 2 * nb)
        return Constraint(
            expr=b.build(),
            sense="PosDef",
            label=f"output(i={i + 1}, m={m + 1})",
        )


def _nodes(count: int, only: int | None) -> range:
    return range(count) if only is None else range(only, only + 1)


def _analysis(
    model: MjnnModel,
    gains: EstimatorGains,
    *,
    mode: AssemblyMode,
    gamma: float | None,
    m: int | None = None,
    m_next: int | None = None,
) -> LmiProblem:
    ctx = _Assembly(model, "performance" if gamma is not None else "stability")
    build_closed_loop(ctx.aug, gains)
    constraints = []
    for i in range(ctx.N):
        vertices = successor_vertices(model, i, mode)
        for mm in _nodes(ctx.M, m):
            for mn in _nodes(ctx.M, m_next):
                constraints += [
                    ctx.analysis_constraint(i, mm, mn, v, gains) for v in vertices
                ]
    if gamma is not None:
        constraints += [
            ctx.output_constraint(i, mm, gamma)
            for i in range(ctx.N)
            for mm in range(ctx.M)
        ]
    logger.debug(f"Assembled {len(constraints)} {ctx.kind} constraints")
    return LmiProblem(variables=ctx.variables(), constraints=constraints)


def assemble_analysis_known(
    model: MjnnModel,
    gains: EstimatorGains,
    m: int | None = None,
    m_next: int | None = None,
) -> LmiProblem:
    """Assemble the mean-square stability conditions of a fully known chain.

    One condition is emitted per mode, current node and next node, with the next-step
    Lyapunov matrix `sum_j pi_ij P[j, m']`.

    Args:
        model (MjnnModel): The model, with every transition probability known.
        gains (EstimatorGains): The estimator gains.
        m (int | None, optional): Restrict to one zero-based current node. Defaults to
            every node.
        m_next (int | None, optional): Restrict to one zero-based next node. Defaults
            to every node.

    Returns:
        LmiProblem: The stability conditions.

    Raises:
        RequiresFullTP: If any transition probability is unknown.
    """
    if not model.transitions.is_fully_known:
        msg = "Known-probability analysis requires a fully known transition matrix"
        logger.error(msg)
        raise RequiresFullTP(msg)
    return _analysis(model, gains, mode="vertex", gamma=None, m=m, m_next=m_next)


def assemble_analysis_partial(
    model: MjnnModel,
    gains: EstimatorGains,
    mode: AssemblyMode = "vertex",
) -> LmiProblem:
    """Assemble the mean-square stability conditions under a partially known chain.

    For a fully known chain this yields exactly the constraints of
    [`assemble_analysis_known`](#pymjnn.lmi.conditions.assemble_analysis_known).

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The estimator gains.
        mode (AssemblyMode, optional): How unknown successors are handled. Defaults to
            `"vertex"`.

    Returns:
        LmiProblem: The stability conditions.
    """
    return _analysis(model, gains, mode=mode, gamma=None)


def assemble_performance(
    model: MjnnModel,
    gains: EstimatorGains,
    gamma: float,
    mode: AssemblyMode = "vertex",
) -> LmiProblem:
    """Assemble the peak-to-energy performance conditions for fixed gains.

    The stability conditions gain the disturbance columns and a `-I` corner, so that
    `V(k) < sum ||W||^2` along every trajectory from rest, and one output condition per
    (mode, node) bounds `||z_tilde||^2 <= gamma^2 V`.

    ???+ example
        ```python
        problem = assemble_performance(model, gains, gamma=1.0)
        outcome = solve_feasibility(problem, Settings())
        ```

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The estimator gains.
        gamma (float): The performance level.
        mode (AssemblyMode, optional): How unknown successors are handled. Defaults to
            `"vertex"`.

    Returns:
        LmiProblem: The performance conditions.
    """
    return _analysis(model, gains, mode=mode, gamma=gamma)


def assemble_synthesis(
    model: MjnnModel,
    gamma: float,
    mode: AssemblyMode = "vertex",
) -> LmiProblem:
    """Assemble the gain synthesis conditions with inverse couplings.

    The gains `K[i,m]` are free variables. Each piece of the successor expectation
    becomes a block `-diag(X)` stacked with `sqrt(weight)` copies of the one-step map,
    and every pair `(P[j,m], X[j,m])` is registered as an inverse coupling.

    The plant part of `eta` evolves without the gains, so the `x_bar` block of every
    analysis condition is linear in `P` alone. It is added as well: it changes nothing
    once the couplings hold, but it keeps the relaxation from accepting a plant whose
    own state cannot meet the level.

    Args:
        model (MjnnModel): The model.
        gamma (float): The performance level.
        mode (AssemblyMode, optional): How unknown successors are handled. Defaults to
            `"vertex"`.

    Returns:
        LmiProblem: The synthesis conditions, with couplings.
    """
    ctx = _Assembly(model, "synthesis")
    constraints = []
    for i in range(ctx.N):
        vertices = successor_vertices(model, i, mode)
        for m in range(ctx.M):
            for m_next in range(ctx.M):
                constraints += [
                    ctx.synthesis_constraint(i, m, m_next, v) for v in vertices
                ]
    constraints += [
        ctx.output_constraint(i, m, gamma) for i in range(ctx.N) for m in range(ctx.M)
    ]
    for i in range(ctx.N):
        vertices = successor_vertices(model, i, mode)
        for m in range(ctx.M):
            for m_next in range(ctx.M):
                constraints += [ctx.plant_constraint(i, m, m_next, v) for v in vertices]
    variables = ctx.variables()
    variables += [
        DecisionVar.symmetric(x_name(j, m), ctx.nb)
        for j in range(ctx.N)
        for m in range(ctx.M)
    ]
    variables += [
        DecisionVar.matrix(k_name(i, m), ctx.nb, ctx.ny)
        for i in range(ctx.N)
        for m in range(ctx.M)
    ]
    couplings = [
        (p_name(j, m), x_name(j, m)) for j in range(ctx.N) for m in range(ctx.M)
    ]
    logger.debug(f"Assembled {len(constraints)} synthesis constraints")
    return LmiProblem(variables=variables, constraints=constraints, couplings=couplings)


def gains_from_assignment(
    assignment: dict[str, npt.NDArray[np.float64]],
    modes: int,
    nodes: int,
) -> EstimatorGains:
    """Read the gain grid out of a synthesis assignment.

    Args:
        assignment (dict[str, npt.NDArray[np.float64]]): The solved variables.
        modes (int): The number of modes.
        nodes (int): The number of nodes.

    Returns:
        EstimatorGains: The gains.
    """
    return EstimatorGains(
        K=[[assignment[k_name(i, m)] for m in range(nodes)] for i in range(modes)],
    )


def closed_loop_of(model: MjnnModel, gains: EstimatorGains) -> ClosedLoopSystem:
    """Close the loop of a model with a gain grid.

    Args:
        model (MjnnModel): The model.
        gains (EstimatorGains): The gains.

    Returns:
        ClosedLoopSystem: The stacked closed loop.
    """
    return build_closed_loop(augmented_grid(model), gains)
