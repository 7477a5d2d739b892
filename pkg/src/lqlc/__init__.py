"""Least quasi-log-cosh (LQLC) robust pseudorange positioning.

The estimator is the maximum-likelihood solution under logistic pseudorange
errors, solved by iteratively reweighted least squares. Least squares (LS)
is provided as the Gaussian baseline.
"""

from .errmodels import BgmmModel, GaussianModel, LogisticModel, StudentTModel
from .estimators import EstimatorSpec, cost, influence, weight
from .model import (
    Constellation,
    EcefPosition,
    EpochObservations,
    LlhPosition,
    SatelliteObservation,
    StateEstimate,
    build_linear_system,
    ecef_to_llh,
    llh_to_ecef,
)
from .simulate import GeometryScenario, MismatchSweepConfig, generate_epoch, scale_mismatch_sweep
from .solver import SolveReport, SolverConfig, irls_solve, objective_value, wls_step

__version__ = "0.1.0"

__all__ = [
    "BgmmModel",
    "Constellation",
    "EcefPosition",
    "EpochObservations",
    "EstimatorSpec",
    "GaussianModel",
    "GeometryScenario",
    "LlhPosition",
    "LogisticModel",
    "MismatchSweepConfig",
    "SatelliteObservation",
    "SolveReport",
    "SolverConfig",
    "StateEstimate",
    "StudentTModel",
    "build_linear_system",
    "cost",
    "ecef_to_llh",
    "generate_epoch",
    "influence",
    "irls_solve",
    "llh_to_ecef",
    "objective_value",
    "scale_mismatch_sweep",
    "weight",
    "wls_step",
]
