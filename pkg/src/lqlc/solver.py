"""IRLS solution of the LS / LQLC positioning problem.

Each iteration relinearizes the pseudorange model at the current state,
reweights every observation with ``W_ii = w(r_i) / scale_i**2`` from the
normalized residuals of that linearization, and solves the weighted least
squares subproblem for a state increment. The first iteration uses unit
weights.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dgelss

from .errors import DivergedSolution, InsufficientObservations, SingularNormalMatrix, ValidationError
from .estimators import EstimatorSpec, cost, weight
from .model import EpochObservations, StateEstimate, in_shell, linearize

COND_LIMIT = 1e12


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    step_tolerance: float = 1e-4
    min_weight_floor: float = 0.0

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if not self.step_tolerance > 0:
            raise ValidationError(f"step_tolerance must be positive, got {self.step_tolerance}")
        if not self.min_weight_floor >= 0:
            raise ValidationError(f"min_weight_floor must be non-negative, got {self.min_weight_floor}")


@dataclass
class SolveReport:
    state: StateEstimate
    residuals: np.ndarray
    normalized_residuals: np.ndarray
    weights: np.ndarray
    iterations: int
    converged: bool
    objective: float
    wall_time: float
    epoch_index: int = 0
    estimator: EstimatorSpec = EstimatorSpec.LQLC


@dataclass
class FixedIrlsResult:
    """Outcome of IRLS on a fixed linear system ``y = Hx + e``."""

    x: np.ndarray
    iterations: int
    converged: bool
    weights: np.ndarray
    objective_trace: list = field(default_factory=list)


def _solve_weighted(H: np.ndarray, W: np.ndarray, y: np.ndarray) -> np.ndarray:
    sw = np.sqrt(W)
    d = H.shape[1]
    # SVD least squares (LAPACK gelss) on the row-scaled system
    _, x, sv, rank, _, info = dgelss(H * sw[:, None], y * sw)
    # cond(H^T W H) = cond(sqrt(W) H)^2
    if info != 0 or rank < d or sv[d - 1] == 0 or (sv[0] / sv[d - 1]) ** 2 > COND_LIMIT:
        raise SingularNormalMatrix("weighted normal matrix is singular or ill-conditioned")
    return x[:d]


def wls_step(H, W, y) -> np.ndarray:
    """Weighted least-squares solution of ``y ~ H x`` with diagonal weights ``W``.

    Solved through an orthogonal (SVD) factorization of ``sqrt(W) H`` rather
    than by forming ``(H^T W H)^{-1}``.

    Raises
    ------
    SingularNormalMatrix
        If the condition number of ``H^T W H`` exceeds 1e12.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    W = np.asarray(W, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n, d = H.shape
    if W.shape != (n,) or y.shape != (n,):
        raise ValidationError(f"shape mismatch: H {H.shape}, W {W.shape}, y {y.shape}")
    if n < d:
        raise ValidationError(f"underdetermined system: {n} rows for {d} unknowns")
    if not np.all(W > 0):
        raise ValidationError("all weights must be positive")
    return _solve_weighted(H, W, y)


def objective_value(spec: EstimatorSpec, normalized_residuals) -> float:
    return float(np.sum(cost(spec, np.asarray(normalized_residuals, dtype=float))))


def _irls_weights(spec: EstimatorSpec, rbar: np.ndarray, floor: float) -> np.ndarray:
    w = weight(spec, rbar)
    if floor > 0:
        w = np.maximum(w, floor)
    return w


def irls_fixed(H, y, scales, spec: EstimatorSpec, config: SolverConfig | None = None) -> FixedIrlsResult:
    """IRLS without relinearization, for a purely linear problem.

    The trace records the objective of the starting (unit-weight) solution
    followed by the objective after every reweighted solve.
    """
    config = config or SolverConfig()
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(scales, dtype=float)
    x = _solve_weighted(H, np.ones(len(y)), y)
    trace = [objective_value(spec, (y - H @ x) / s)]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        w = _irls_weights(spec, (y - H @ x) / s, config.min_weight_floor)
        x_new = _solve_weighted(H, w / s**2, y)
        step = np.linalg.norm(x_new - x)
        x = x_new
        trace.append(objective_value(spec, (y - H @ x) / s))
        if step < config.step_tolerance:
            converged = True
            break
    w = _irls_weights(spec, (y - H @ x) / s, config.min_weight_floor)
    return FixedIrlsResult(x, iterations, converged, w, trace)


def irls_solve(epoch: EpochObservations, spec: EstimatorSpec,
               initial: StateEstimate | None = None,
               config: SolverConfig | None = None) -> SolveReport:
    """Solve one epoch with the LS or LQLC estimator.

    Parameters
    ----------
    epoch : EpochObservations
        Satellite positions, corrected pseudoranges and per-observation scales.
    spec : EstimatorSpec
        ``LS`` or ``LQLC``.
    initial : StateEstimate, optional
        Starting state. Defaults to the Earth center with zero clock biases.
    config : SolverConfig, optional
        Iteration cap, step tolerance (meters) and weight floor.

    Returns
    -------
    SolveReport
        Residual, normalized-residual and weight vectors are evaluated at the
        final state and given in the epoch's observation order.

    Raises
    ------
    SingularNormalMatrix
        If a weighted subproblem is ill-conditioned.
    DivergedSolution
        If the iterate leaves the 1000 km shell around the Earth surface
        after having entered it, or does not end inside it.
    """
    t0 = time.perf_counter()
    config = config or SolverConfig()
    cons = epoch.constellations
    n, d = len(epoch), epoch.state_dim
    if n < d + 1:
        raise InsufficientObservations(
            f"epoch {epoch.epoch_index}: {n} observations for a {d}-state solution, need {d + 1}"
        )
    order = epoch.canonical_order
    sat = epoch.sat_positions[order]
    rho = epoch.pseudoranges[order]
    ci = epoch.clock_index[order]
    s = epoch.scales[order]
    inv_s2 = 1.0 / (s * s)
    n_clocks = len(cons)
    floor = config.min_weight_floor
    tol2 = config.step_tolerance**2

    x = (initial or StateEstimate.cold_start(cons)).to_vector(cons)
    entered = in_shell(x)
    W = np.ones(n)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        y, H = linearize(sat, rho, ci, n_clocks, x)
        if iterations > 1:
            W = _irls_weights(spec, y / s, floor) * inv_s2
        dx = _solve_weighted(H, W, y)
        x = x + dx
        step2 = float(dx @ dx)
        if not math.isfinite(step2):
            raise DivergedSolution(f"epoch {epoch.epoch_index}: non-finite state")
        if in_shell(x):
            entered = True
        elif entered:
            raise DivergedSolution(f"epoch {epoch.epoch_index}: state left the near-Earth shell")
        if step2 < tol2:
            converged = True
            break
    if not in_shell(x):
        raise DivergedSolution(f"epoch {epoch.epoch_index}: final state outside the near-Earth shell")

    y, _ = linearize(sat, rho, ci, n_clocks, x)
    rbar = y / s
    w = _irls_weights(spec, rbar, floor)
    objective = objective_value(spec, rbar)

    inverse = np.empty_like(order)
    inverse[order] = np.arange(n)
    return SolveReport(
        state=StateEstimate.from_vector(x, cons),
        residuals=y[inverse],
        normalized_residuals=rbar[inverse],
        weights=w[inverse],
        iterations=iterations,
        converged=converged,
        objective=objective,
        wall_time=time.perf_counter() - t0,
        epoch_index=epoch.epoch_index,
        estimator=spec,
    )
