from pymjnn.models.config import CclConfig, RunConfig
from pymjnn.models.disturbance import (
    DecayingSinusoid,
    Disturbance,
    TimeSeriesDisturbance,
    ZeroDisturbance,
)
from pymjnn.models.gains import EstimatorGains
from pymjnn.models.plant import (
    CallableActivation,
    DelaySpec,
    MjnnModel,
    ModeMatrices,
    SectorBounds,
    TanhActivation,
    TransitionCompletion,
    TransitionSpec,
)
from pymjnn.models.protocol import (
    NodePartition,
    SchedulerState,
    WtodProtocol,
    WtodWeights,
)
from pymjnn.models.results import (
    BisectionProbe,
    BisectionResult,
    CclIteration,
    DecayReport,
    EnsembleMetrics,
    LyapunovReport,
    ModelReport,
    SolveOutcome,
    SynthesisResult,
    Trajectory,
    VerificationResult,
    Violation,
)

__all__ = [
    "BisectionProbe",
    "BisectionResult",
    "CallableActivation",
    "CclConfig",
    "CclIteration",
    "DecayReport",
    "DecayingSinusoid",
    "DelaySpec",
    "Disturbance",
    "EnsembleMetrics",
    "EstimatorGains",
    "LyapunovReport",
    "MjnnModel",
    "ModeMatrices",
    "ModelReport",
    "NodePartition",
    "RunConfig",
    "SchedulerState",
    "SectorBounds",
    "SolveOutcome",
    "SynthesisResult",
    "TanhActivation",
    "TimeSeriesDisturbance",
    "Trajectory",
    "TransitionCompletion",
    "TransitionSpec",
    "VerificationResult",
    "Violation",
    "WtodProtocol",
    "WtodWeights",
    "ZeroDisturbance",
]
