"""Multi-phase projection-based car-following model: simulation and safety checks."""

from .core import (
    REFERENCE_PRESET,
    ModelParams,
    NominalSubPhase,
    PairState,
    ParamError,
    Phase,
    PhaseKind,
    Trajectory,
    kmh_to_ms,
    ms_to_kmh,
    validate_params,
)

__version__ = "0.1.0"
