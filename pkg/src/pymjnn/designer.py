"""High-level entry point bundling the numerical settings with the design workflow.

This module contains the `Designer` class. Every method is a thin composition of the
module-level operations in [`pymjnn.core`](core.md), [`pymjnn.synthesis`](synthesis.md)
and [`pymjnn.simulation`](simulation.md), called with the designer itself as settings.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from pymjnn.core import check_model, validate_model
from pymjnn.models.config import CclConfig
from pymjnn.models.disturbance import DecayingSinusoid
from pymjnn.settings import Settings
from pymjnn.simulation import empirical_l2linf, mean_square_decay, simulate
from pymjnn.synthesis import bisect_gamma, ccl_synthesize, verify_gains

if TYPE_CHECKING:
    from pathlib import Path

    from pymjnn.models.disturbance import Disturbance
    from pymjnn.models.gains import EstimatorGains
    from pymjnn.models.plant import MjnnModel
    from pymjnn.models.results import (
        BisectionResult,
        DecayReport,
        EnsembleMetrics,
        ModelReport,
        SynthesisResult,
        Trajectory,
        VerificationResult,
    )


class Designer(Settings):
    """Estimator designer for Markovian jumping neural networks.

    ??? example "Design and check an estimator"
        ```python
        from pymjnn import Designer
        from pymjnn.io import example_path, load_model

        designer = Designer(seed=7)
        model = designer.validate(load_model(example_path()))
        sweep = designer.sweep(model, 0.1, 10.0)
        metrics = designer.ensemble(model, sweep.synthesis.gains, runs=100)
        ```
        The designer inherits the `Settings` class, so every setting, including the
        environment variable parsing, is available on the designer. To see the
        available settings, refer to [`pymjnn.Settings`](settings.md).
    """

    def disturbance(self) -> DecayingSinusoid:
        """Build the default decaying disturbance, honoring `literal_exponent`.

        Returns:
            DecayingSinusoid: The disturbance.
        """
        return DecayingSinusoid(literal_exponent=self.literal_exponent)

    def ccl_config(self, gamma: float) -> CclConfig:
        """Build the synthesis configuration at a level from the settings.

        Args:
            gamma (float): The performance level.

        Returns:
            CclConfig: The configuration.
        """
        return CclConfig(
            gamma=gamma,
            max_iters=self.ccl_max_iters,
            mu=self.ccl_mu,
            eps=self.eps,
            seed=self.seed,
        )

    def check(self, model: MjnnModel) -> ModelReport:
        """Collect every violation and warning of a model.

        Args:
            model (MjnnModel): The model.

        Returns:
            ModelReport: The violations and warnings.
        """
        return check_model(model)

    def validate(self, model: MjnnModel) -> MjnnModel:
        """Validate a model, raising on the first kind of violation.

        Args:
            model (MjnnModel): The model.

        Returns:
            MjnnModel: The same model.
        """
        return validate_model(model)

    def synthesize(
        self,
        model: MjnnModel,
        gamma: float,
        log_path: Path | None = None,
    ) -> SynthesisResult:
        """Synthesize gains at a fixed level.

        Args:
            model (MjnnModel): The model.
            gamma (float): The performance level.
            log_path (Path | None, optional): CSV file every solve is appended to.
                Defaults to no log.

        Returns:
            SynthesisResult: The synthesis result.
        """
        return ccl_synthesize(model, self.ccl_config(gamma), self, log_path=log_path)

    def verify(
        self,
        model: MjnnModel,
        gains: EstimatorGains,
        gamma: float,
    ) -> VerificationResult:
        """Check fixed gains at a level.

        Args:
            model (MjnnModel): The model.
            gains (EstimatorGains): The gains.
            gamma (float): The performance level.

        Returns:
            VerificationResult: The verification result.
        """
        return verify_gains(model, gains, gamma, self)

    def sweep(
        self,
        model: MjnnModel,
        lo: float,
        hi: float,
        steps: int = 12,
        gains: EstimatorGains | None = None,
    ) -> BisectionResult:
        """Bisect the level, synthesizing gains or verifying fixed ones.

        Args:
            model (MjnnModel): The model.
            lo (float): Bracket low.
            hi (float): Bracket high.
            steps (int, optional): Number of halvings. Defaults to `12`.
            gains (EstimatorGains | None, optional): Fixed gains. Defaults to `None`.

        Returns:
            BisectionResult: The bisection result.
        """
        return bisect_gamma(
            model,
            lo,
            hi,
            steps,
            gains=gains,
            config=self.ccl_config(hi),
            settings=self,
        )

    def simulate(
        self,
        model: MjnnModel,
        gains: EstimatorGains,
        horizon: int = 200,
        run: int = 0,
        disturbance: Disturbance | None = None,
    ) -> Trajectory:
        """Simulate one run with the default disturbance.

        Args:
            model (MjnnModel): The model.
            gains (EstimatorGains): The gains.
            horizon (int, optional): Number of steps. Defaults to `200`.
            run (int, optional): Run index. Defaults to `0`.
            disturbance (Disturbance | None, optional): The disturbance. Defaults to
                `disturbance()`.

        Returns:
            Trajectory: The trajectory.
        """
        return simulate(
            model,
            gains,
            disturbance=disturbance or self.disturbance(),
            horizon=horizon,
            seed=self.seed,
            run=run,
            settings=self,
        )

    def ensemble(
        self,
        model: MjnnModel,
        gains: EstimatorGains,
        runs: int = 100,
        horizon: int = 200,
        disturbance: Disturbance | None = None,
    ) -> EnsembleMetrics:
        """Estimate the peak-to-energy ratio over an ensemble.

        Args:
            model (MjnnModel): The model.
            gains (EstimatorGains): The gains.
            runs (int, optional): Ensemble size. Defaults to `100`.
            horizon (int, optional): Number of steps. Defaults to `200`.
            disturbance (Disturbance | None, optional): The disturbance. Defaults to
                `disturbance()`.

        Returns:
            EnsembleMetrics: The ensemble statistics.
        """
        return empirical_l2linf(
            model,
            gains,
            disturbance=disturbance or self.disturbance(),
            runs=runs,
            horizon=horizon,
            seed=self.seed,
            settings=self,
        )

    def decay(
        self,
        model: MjnnModel,
        gains: EstimatorGains,
        runs: int = 50,
        horizon: int = 500,
    ) -> DecayReport:
        """Check mean-square decay of the unforced closed loop.

        Args:
            model (MjnnModel): The model.
            gains (EstimatorGains): The gains.
            runs (int, optional): Ensemble size. Defaults to `50`.
            horizon (int, optional): Number of steps. Defaults to `500`.

        Returns:
            DecayReport: The decay report.
        """
        return mean_square_decay(
            model,
            gains,
            runs=runs,
            horizon=horizon,
            seed=self.seed,
            settings=self,
        )
