"""Synthetic epochs and the scale-mismatch Monte-Carlo sweep."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import errmodels
from .errmodels import BgmmModel, DistributionModel, GaussianModel, LogisticModel, StudentTModel
from .errors import NumericalError, ValidationError
from .estimators import EstimatorSpec
from .metrics import ErrorSeries, rmse_3d, std_3d
from .model import (
    CONSTELLATION_ORDER,
    Constellation,
    EcefPosition,
    EpochObservations,
    LlhPosition,
    SatelliteObservation,
    StateEstimate,
    azimuth_elevation,
    enu_rotation,
    ecef_to_llh,
    llh_to_ecef,
)
from .solver import SolverConfig, irls_solve

MIN_ELEVATION_DEG = 5.0
BUNDLED_SCENARIOS = ("default", "dense")


@dataclass(frozen=True)
class ScenarioSatellite:
    sat_id: str
    position: EcefPosition
    constellation: Constellation


@dataclass(frozen=True)
class GeometryScenario:
    receiver_truth: EcefPosition
    satellites: tuple[ScenarioSatellite, ...]
    clock_biases: dict

    def __post_init__(self):
        object.__setattr__(self, "satellites", tuple(self.satellites))
        present = {s.constellation for s in self.satellites}
        missing = present - set(self.clock_biases)
        if missing:
            raise ValidationError(f"no clock bias for {sorted(c.value for c in missing)}")
        d = 3 + len(present)
        if len(self.satellites) < d + 1:
            raise ValidationError(f"scenario has {len(self.satellites)} satellites, needs {d + 1}")
        for sat in self.satellites:
            _, el = azimuth_elevation(self.receiver_truth, sat.position)
            if el <= MIN_ELEVATION_DEG:
                raise ValidationError(f"{sat.sat_id} at elevation {el:.2f} deg, below {MIN_ELEVATION_DEG}")

    @property
    def constellations(self) -> tuple[Constellation, ...]:
        present = {s.constellation for s in self.satellites}
        return tuple(c for c in CONSTELLATION_ORDER if c in present)

    def truth_state(self) -> StateEstimate:
        return StateEstimate(self.receiver_truth, {c: float(self.clock_biases[c]) for c in self.constellations})

    @classmethod
    def from_dict(cls, doc: dict) -> "GeometryScenario":
        llh = doc["receiver_llh"]
        receiver = llh_to_ecef(LlhPosition(float(llh["latitude"]), float(llh["longitude"]), float(llh["height"])))
        sats = tuple(
            ScenarioSatellite(str(s["sat_id"]), EcefPosition(float(s["x"]), float(s["y"]), float(s["z"])),
                              Constellation(s["constellation"]))
            for s in doc["satellites"]
        )
        biases = {Constellation(k): float(v) for k, v in doc["clock_biases"].items()}
        return cls(receiver, sats, biases)

    def to_dict(self) -> dict:
        llh = ecef_to_llh(self.receiver_truth)
        return {
            "receiver_llh": {"latitude": llh.latitude, "longitude": llh.longitude, "height": llh.height},
            "clock_biases": {c.value: self.clock_biases[c] for c in self.constellations},
            "satellites": [
                {"sat_id": s.sat_id, "constellation": s.constellation.value,
                 "x": s.position.x, "y": s.position.y, "z": s.position.z}
                for s in self.satellites
            ],
        }

    @classmethod
    def load(cls, path: str | Path) -> "GeometryScenario":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def default(cls) -> "GeometryScenario":
        """Bundled 5 GPS + 3 BDS geometry (PDOP about 2); not a recorded epoch."""
        return cls.bundled("default")

    @classmethod
    def bundled(cls, name: str) -> "GeometryScenario":
        """``"default"`` (8 satellites) or ``"dense"`` (8 GPS + 8 BDS, PDOP about 1.25)."""
        if name not in BUNDLED_SCENARIOS:
            raise ValidationError(f"unknown bundled scenario {name!r}; choose from {sorted(BUNDLED_SCENARIOS)}")
        text = resources.files("lqlc").joinpath(f"data/{name}_scenario.json").read_text()
        return cls.from_dict(json.loads(text))


GPS_ORBIT_RADIUS = 26_559_700.0
BDS_MEO_ORBIT_RADIUS = 27_906_100.0


def place_satellite(receiver: LlhPosition, azimuth: float, elevation: float, radius: float) -> EcefPosition:
    """ECEF point at ``radius`` from the Earth center seen at (azimuth, elevation) degrees."""
    rot = enu_rotation(receiver)
    a, e = math.radians(azimuth), math.radians(elevation)
    u = rot.T @ np.array([math.cos(e) * math.sin(a), math.cos(e) * math.cos(a), math.sin(e)])
    p = llh_to_ecef(receiver).as_array()
    b = p @ u
    t = -b + math.sqrt(b * b - (p @ p - radius * radius))
    return EcefPosition.from_array(p + t * u)


def scenario_from_azel(receiver: LlhPosition, layout, clock_biases: dict) -> GeometryScenario:
    """Build a scenario from ``(sat_id, constellation, azimuth, elevation)`` rows."""
    sats = []
    for sat_id, cons, az, el in layout:
        cons = Constellation(cons)
        radius = GPS_ORBIT_RADIUS if cons is Constellation.GPS else BDS_MEO_ORBIT_RADIUS
        sats.append(ScenarioSatellite(sat_id, place_satellite(receiver, az, el, radius), cons))
    biases = {Constellation(k): float(v) for k, v in clock_biases.items()}
    return GeometryScenario(llh_to_ecef(receiver), tuple(sats), biases)


def scenario_epoch(scenario: GeometryScenario, errors=None, scales=1.0,
                   epoch_index: int = 0) -> EpochObservations:
    """Epoch whose pseudoranges are range + clock bias + ``errors``."""
    n = len(scenario.satellites)
    errors = np.zeros(n) if errors is None else np.asarray(errors, dtype=float)
    scales = np.broadcast_to(np.asarray(scales, dtype=float), (n,))
    rx = scenario.receiver_truth
    obs = []
    for sat, err, scale in zip(scenario.satellites, errors, scales):
        rho = sat.position.distance_to(rx) + scenario.clock_biases[sat.constellation] + float(err)
        obs.append(SatelliteObservation(sat.sat_id, sat.constellation, sat.position, rho, float(scale)))
    return EpochObservations(epoch_index, tuple(obs))


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    # strictly inside (0, 1): midpoints of a 2**53 grid
    return (rng.integers(0, 2**53, size=size).astype(float) + 0.5) / 2.0**53


def draw_errors(model: DistributionModel, rng: np.random.Generator, size) -> np.ndarray:
    """Independent draws from ``model``."""
    if isinstance(model, LogisticModel):
        return np.asarray(errmodels.logistic_sample(_open_uniform(rng, size), model))
    if isinstance(model, GaussianModel):
        return rng.normal(model.mu, model.sigma, size)
    if isinstance(model, BgmmModel):
        first = rng.random(size) < model.p1
        z = rng.standard_normal(size)
        return np.where(first, model.mu1 + model.sigma1 * z, model.mu2 + model.sigma2 * z)
    if isinstance(model, StudentTModel):
        return model.c + model.lam * rng.standard_t(model.nu, size)
    raise ValidationError(f"unsupported error model {model!r}")


def generate_epoch(scenario: GeometryScenario, error_model: DistributionModel, rng_seed,
                   epoch_index: int = 0, *, scales=None, outlier_fraction: float = 0.0,
                   outlier_range: tuple[float, float] = (200.0, 400.0)) -> EpochObservations:
    """One synthetic epoch with independent per-satellite errors.

    Each pseudorange is, with probability ``outlier_fraction``, additionally
    biased by a uniform draw from ``outlier_range`` (meters). Scales default
    to the error model's scale parameter.
    """
    if not 0.0 <= outlier_fraction <= 1.0:
        raise ValidationError(f"outlier_fraction must lie in [0, 1], got {outlier_fraction}")
    rng = np.random.default_rng(rng_seed)
    n = len(scenario.satellites)
    errors = draw_errors(error_model, rng, n)
    if outlier_fraction > 0:
        hit = rng.random(n) < outlier_fraction
        errors = errors + np.where(hit, rng.uniform(outlier_range[0], outlier_range[1], n), 0.0)
    return scenario_epoch(scenario, errors, error_model.scale if scales is None else scales, epoch_index)


def default_alphas() -> list[float]:
    return [float(a) for a in np.logspace(-1.0, 1.0, 21)]


@dataclass(frozen=True)
class MismatchSweepConfig:
    s_true: float = 10.0
    alphas: Sequence[float] = field(default_factory=default_alphas)
    trials_per_alpha: int = 2000
    seed: int = 0
    # same error draws for every alpha (trial seed ignores the alpha index)
    common_random_numbers: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not (math.isfinite(self.s_true) and self.s_true > 0):
            raise ValidationError(f"s_true must be positive, got {self.s_true}")
        if not self.alphas or any(not (a > 0 and math.isfinite(a)) for a in self.alphas):
            raise ValidationError(f"alphas must be a non-empty list of positive ratios, got {self.alphas}")
        if self.trials_per_alpha < 1:
            raise ValidationError(f"trials_per_alpha must be positive, got {self.trials_per_alpha}")


@dataclass(frozen=True)
class SweepRecord:
    alpha: float
    rmse_3d: float
    std_3d: float
    mean_iterations: float
    failed_trials: int
    converged_trials: int


@dataclass(frozen=True)
class SweepResult:
    records: tuple[SweepRecord, ...]

    def by_alpha(self, alpha: float) -> SweepRecord:
        for r in self.records:
            if math.isclose(r.alpha, alpha, rel_tol=1e-12):
                return r
        raise KeyError(alpha)


def trial_seed(seed: int, alpha_index: int, trial: int, common: bool) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, trial] if common else [seed, alpha_index, trial])


def _sweep_alpha(scenario: GeometryScenario, config: MismatchSweepConfig, alpha_index: int) -> SweepRecord:
    alpha = config.alphas[alpha_index]
    truth = scenario.truth_state()
    truth_pos = scenario.receiver_truth.as_array()
    model = LogisticModel(0.0, config.s_true)
    assumed = alpha * config.s_true
    errors, iterations = [], []
    failed = converged = 0
    for trial in range(config.trials_per_alpha):
        seq = trial_seed(config.seed, alpha_index, trial, config.common_random_numbers)
        epoch = generate_epoch(scenario, model, seq, trial, scales=assumed)
        try:
            report = irls_solve(epoch, EstimatorSpec.LQLC, truth, config.solver)
        except NumericalError:
            failed += 1
            continue
        converged += report.converged
        errors.append(float(np.linalg.norm(report.state.position.as_array() - truth_pos)))
        iterations.append(report.iterations)
    if not errors:
        return SweepRecord(alpha, math.nan, math.nan, math.nan, failed, 0)
    series = ErrorSeries(np.array(errors))
    std = std_3d(series) if len(series) >= 2 else 0.0
    return SweepRecord(alpha, rmse_3d(series), std, float(np.mean(iterations)), failed, converged)


def scale_mismatch_sweep(scenario: GeometryScenario, config: MismatchSweepConfig,
                         workers: int = 1) -> SweepResult:
    """LQLC accuracy as the assumed logistic scale is ``alpha * s_true``.

    Errors are drawn from a zero-mean logistic with scale ``s_true``; every
    trial is solved from the true state. Failed trials are counted and left
    out of the statistics. Results do not depend on ``workers``.
    """
    indices = range(len(config.alphas))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_alpha, [scenario] * len(indices), [config] * len(indices), indices))
    else:
        records = [_sweep_alpha(scenario, config, i) for i in indices]
    return SweepResult(tuple(records))
