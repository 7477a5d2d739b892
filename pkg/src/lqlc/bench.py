"""Repeated-solve benchmark of one fixed positioning instance."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .estimators import EstimatorSpec
from .model import EpochObservations
from .solver import SolverConfig, irls_solve


@dataclass(frozen=True)
class BoxSummary:
    mean: float
    std: float
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _quantile(sorted_values: np.ndarray, q: float) -> float:
    # linear interpolation between order statistics (numpy's default method)
    pos = q * (len(sorted_values) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(sorted_values) - 1)
    return float(sorted_values[lo] + (pos - lo) * (sorted_values[hi] - sorted_values[lo]))


def box_summary(values) -> BoxSummary:
    """Mean, population std, quartiles and Tukey whiskers at 1.5 IQR.

    Whiskers are the most extreme observations still within
    ``[q1 - 1.5 IQR, q3 + 1.5 IQR]``.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValidationError("cannot summarize an empty sample")
    q1, med, q3 = (_quantile(v, q) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
    return BoxSummary(float(v.mean()), float(v.std()), med, q1, q3, float(inside[0]), float(inside[-1]))


@dataclass(frozen=True)
class BenchReport:
    estimator: EstimatorSpec
    runs: int
    iteration_counts: tuple[int, ...]
    times: tuple[float, ...]

    @property
    def time_summary(self) -> BoxSummary:
        return box_summary(self.times)

    @property
    def iteration_summary(self) -> BoxSummary:
        return box_summary(self.iteration_counts)

    @property
    def mean_iterations(self) -> float:
        return float(np.mean(self.iteration_counts))

    @property
    def mean_time(self) -> float:
        return float(np.mean(self.times))

    def summary_dict(self) -> dict:
        return {
            "estimator": self.estimator.value,
            "runs": self.runs,
            "iterations": self.iteration_summary.to_dict(),
            "time_s": self.time_summary.to_dict(),
        }


def run_bench(epoch: EpochObservations, spec: EstimatorSpec, runs: int = 1000,
              config: SolverConfig | None = None, warmup: int = 10) -> BenchReport:
    """Solve ``epoch`` ``runs`` times from the cold start, timing each solve.

    ``warmup`` extra solves precede the measured ones and are discarded.
    Solver errors propagate.
    """
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    if warmup < 0:
        raise ValidationError("warmup must be non-negative")
    config = config or SolverConfig()
    for _ in range(warmup):
        irls_solve(epoch, spec, config=config)
    iterations, times = [], []
    clock = time.perf_counter
    for _ in range(runs):
        t0 = clock()
        report = irls_solve(epoch, spec, config=config)
        times.append(clock() - t0)
        iterations.append(report.iterations)
    return BenchReport(spec, runs, tuple(iterations), tuple(times))
