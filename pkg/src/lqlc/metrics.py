"""Positioning accuracy metrics: 3D error series, 3D RMSE and 3D STD.

3D STD is the population standard deviation of the per-epoch 3D error
magnitudes, so that ``rmse**2 == mean**2 + std**2`` holds exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InsufficientSeries, ValidationError
from .model import EcefPosition


@dataclass(frozen=True)
class ErrorSeries:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError("error magnitudes must be finite and non-negative")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


def error_series(solutions: Iterable, truth: EcefPosition) -> ErrorSeries:
    """3D error magnitude of each solution's position relative to ``truth``."""
    t = truth.as_array()
    positions = np.array([s.state.position.as_array() for s in solutions], dtype=float).reshape(-1, 3)
    if len(positions) == 0:
        raise ValidationError("no solutions to evaluate")
    return ErrorSeries(np.linalg.norm(positions - t, axis=1))


def rmse_3d(series: ErrorSeries) -> float:
    v = series.values
    if len(v) == 0:
        raise InsufficientSeries("RMSE of an empty series")
    return math.sqrt(float(np.mean(v * v)))


def std_3d(series: ErrorSeries) -> float:
    v = series.values
    if len(v) < 2:
        raise InsufficientSeries("3D STD needs at least two epochs")
    return float(np.std(v))


def reduction_pct(baseline: float, value: float) -> float:
    """Percentage reduction of ``value`` relative to ``baseline``."""
    return (baseline - value) / baseline * 100.0


def metrics_dict(estimator: str, series: ErrorSeries, baseline_rmse: float | None = None) -> dict:
    rmse = rmse_3d(series)
    return {
        "estimator": estimator,
        "rmse_3d": rmse,
        "std_3d": std_3d(series) if len(series) >= 2 else None,
        "epochs": len(series),
        "reduction_vs_baseline_pct": None if baseline_rmse is None else reduction_pct(baseline_rmse, rmse),
    }


def dumps_metrics(metrics: dict) -> str:
    return json.dumps(metrics, indent=2) + "\n"
