"""Pseudorange measurement model, WGS-84 conversions and linearization.

The state vector is ``[x, y, z, b_1, ..., b_C]``: ECEF position in meters
followed by one receiver clock bias (meters) per constellation present in
the epoch, ordered as in :data:`CONSTELLATION_ORDER`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateGeometry,
    DegeneratePosition,
    InsufficientObservations,
    MissingClockBias,
    ValidationError,
)

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

# Radial shell accepted as "near the Earth surface" by the solver.
SHELL_HALF_WIDTH = 1000e3
SHELL_MIN_RADIUS = WGS84_B - SHELL_HALF_WIDTH
SHELL_MAX_RADIUS = WGS84_A + SHELL_HALF_WIDTH


class Constellation(str, Enum):
    GPS = "GPS"
    BDS = "BDS"


CONSTELLATION_ORDER: tuple[Constellation, ...] = (Constellation.GPS, Constellation.BDS)


@dataclass(frozen=True)
class EcefPosition:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValidationError(f"non-finite ECEF position {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, v) -> "EcefPosition":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def distance_to(self, other: "EcefPosition") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class LlhPosition:
    """Geodetic position: latitude/longitude in degrees, height in meters."""

    latitude: float
    longitude: float
    height: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.latitude, self.longitude, self.height)):
            raise ValidationError(f"non-finite LLH position {self}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")

    @classmethod
    def parse(cls, text: str) -> "LlhPosition":
        """Parse ``"lat,lon,h"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"expected 'lat,lon,h', got {text!r}")
        try:
            lat, lon, h = (float(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"expected 'lat,lon,h', got {text!r}") from exc
        return cls(lat, lon, h)


@dataclass(frozen=True)
class SatelliteObservation:
    sat_id: str
    constellation: Constellation
    sat_pos: EcefPosition
    pseudorange: float
    scale: float

    def __post_init__(self):
        if not isinstance(self.constellation, Constellation):
            object.__setattr__(self, "constellation", Constellation(self.constellation))
        if not (math.isfinite(self.pseudorange) and self.pseudorange > 0):
            raise ValidationError(f"{self.sat_id}: pseudorange must be positive, got {self.pseudorange}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValidationError(f"{self.sat_id}: scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class EpochObservations:
    epoch_index: int
    observations: tuple[SatelliteObservation, ...]

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        if self.epoch_index < 0:
            raise ValidationError(f"epoch index must be non-negative, got {self.epoch_index}")
        needed = 3 + len(self.constellations)
        if len(self.observations) < needed:
            raise InsufficientObservations(
                f"epoch {self.epoch_index}: {len(self.observations)} observations, need at least {needed}"
            )

    def __len__(self) -> int:
        return len(self.observations)

    @cached_property
    def constellations(self) -> tuple[Constellation, ...]:
        present = {o.constellation for o in self.observations}
        return tuple(c for c in CONSTELLATION_ORDER if c in present)

    @property
    def state_dim(self) -> int:
        return 3 + len(self.constellations)

    @cached_property
    def sat_positions(self) -> np.ndarray:
        return np.array([o.sat_pos.as_array() for o in self.observations], dtype=float).reshape(-1, 3)

    @cached_property
    def pseudoranges(self) -> np.ndarray:
        return np.array([o.pseudorange for o in self.observations], dtype=float)

    @cached_property
    def scales(self) -> np.ndarray:
        return np.array([o.scale for o in self.observations], dtype=float)

    @cached_property
    def clock_index(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.constellations)}
        return np.array([lookup[o.constellation] for o in self.observations], dtype=int)

    @cached_property
    def canonical_order(self) -> np.ndarray:
        """Permutation sorting observations by (constellation, sat_id).

        Solving in this order makes results independent of input row order.
        """
        rank = {c: i for i, c in enumerate(CONSTELLATION_ORDER)}
        keys = [
            (rank[o.constellation], o.sat_id, o.pseudorange, o.sat_pos.x, o.sat_pos.y, o.sat_pos.z, o.scale)
            for o in self.observations
        ]
        return np.array(sorted(range(len(keys)), key=keys.__getitem__), dtype=int)

    def with_scales(self, scales) -> "EpochObservations":
        """Copy of the epoch with every observation's scale replaced."""
        scales = np.broadcast_to(np.asarray(scales, dtype=float), (len(self),))
        obs = tuple(replace(o, scale=float(s)) for o, s in zip(self.observations, scales))
        return EpochObservations(self.epoch_index, obs)


@dataclass(frozen=True)
class StateEstimate:
    position: EcefPosition
    clock_bias: Mapping[Constellation, float] = field(default_factory=dict)

    def to_vector(self, constellations: Sequence[Constellation]) -> np.ndarray:
        x = np.empty(3 + len(constellations))
        x[:3] = self.position.as_array()
        for i, c in enumerate(constellations):
            try:
                x[3 + i] = self.clock_bias[c]
            except KeyError:
                raise MissingClockBias(f"state has no clock bias for {c.value}") from None
        return x

    @classmethod
    def from_vector(cls, x, constellations: Sequence[Constellation]) -> "StateEstimate":
        return cls(
            EcefPosition.from_array(x[:3]),
            {c: float(x[3 + i]) for i, c in enumerate(constellations)},
        )

    @classmethod
    def cold_start(cls, constellations: Sequence[Constellation]) -> "StateEstimate":
        """Earth-center position with zero clock biases."""
        return cls(EcefPosition(0.0, 0.0, 0.0), {c: 0.0 for c in constellations})


@dataclass(frozen=True)
class LinearizedSystem:
    y: np.ndarray
    H: np.ndarray
    scales: np.ndarray
    nominal: StateEstimate
    constellations: tuple[Constellation, ...]


def llh_to_ecef(p: LlhPosition) -> EcefPosition:
    lat = math.radians(p.latitude)
    lon = math.radians(p.longitude)
    slat, clat = math.sin(lat), math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
    return EcefPosition(
        (n + p.height) * clat * math.cos(lon),
        (n + p.height) * clat * math.sin(lon),
        (n * (1.0 - WGS84_E2) + p.height) * slat,
    )


def ecef_to_llh(p: EcefPosition) -> LlhPosition:
    x, y, z = p.x, p.y, p.z
    if math.sqrt(x * x + y * y + z * z) < 1.0:
        raise DegeneratePosition(f"position {p} is at the Earth center")
    rho = math.hypot(x, y)
    lon = math.atan2(y, x)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    for _ in range(50):
        slat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
        new_lat = math.atan2(z + WGS84_E2 * n * slat, rho)
        if abs(new_lat - lat) < 1e-15:
            lat = new_lat
            break
        lat = new_lat
    slat, clat = math.sin(lat), math.cos(lat)
    # valid at the poles, unlike rho / cos(lat) - N
    h = rho * clat + z * slat - WGS84_A * math.sqrt(1.0 - WGS84_E2 * slat * slat)
    return LlhPosition(math.degrees(lat), math.degrees(lon), h)


def enu_rotation(origin: LlhPosition) -> np.ndarray:
    """Rows are the east, north and up unit vectors at ``origin``."""
    lat = math.radians(origin.latitude)
    lon = math.radians(origin.longitude)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])


def azimuth_elevation(receiver: EcefPosition, sat: EcefPosition) -> tuple[float, float]:
    """Azimuth and elevation of ``sat`` seen from ``receiver``, in degrees."""
    enu = enu_rotation(ecef_to_llh(receiver)) @ (sat.as_array() - receiver.as_array())
    az = math.degrees(math.atan2(enu[0], enu[1])) % 360.0
    el = math.degrees(math.atan2(enu[2], math.hypot(enu[0], enu[1])))
    return az, el


def predict_pseudorange(obs: SatelliteObservation, state: StateEstimate) -> float:
    try:
        bias = state.clock_bias[obs.constellation]
    except KeyError:
        raise MissingClockBias(f"state has no clock bias for {obs.constellation.value}") from None
    return obs.sat_pos.distance_to(state.position) + bias


def linearize(sat_pos: np.ndarray, pseudoranges: np.ndarray, clock_index: np.ndarray,
              n_clocks: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`build_linear_system`; returns ``(y, H)``."""
    los = sat_pos - x[:3]
    ranges = np.sqrt(np.einsum("ij,ij->i", los, los))
    if ranges.min() < 1e-3:
        raise DegenerateGeometry("a satellite coincides with the linearization point")
    n = len(pseudoranges)
    H = np.zeros((n, 3 + n_clocks))
    np.divide(los, -ranges[:, None], out=H[:, :3])
    H[np.arange(n), 3 + clock_index] = 1.0
    y = pseudoranges - ranges - x[3:][clock_index]
    return y, H


def build_linear_system(epoch: EpochObservations, nominal: StateEstimate) -> LinearizedSystem:
    """Measured-minus-predicted pseudoranges and geometry matrix at ``nominal``.

    Needs at least as many observations as states; the extra redundant
    observation IRLS requires is enforced by the solver.
    """
    d = epoch.state_dim
    if len(epoch) < d:
        raise InsufficientObservations(
            f"epoch {epoch.epoch_index}: {len(epoch)} observations for a {d}-state system"
        )
    x = nominal.to_vector(epoch.constellations)
    y, H = linearize(epoch.sat_positions, epoch.pseudoranges, epoch.clock_index,
                     len(epoch.constellations), x)
    return LinearizedSystem(y, H, epoch.scales.copy(), nominal, epoch.constellations)


def pdop(H: np.ndarray, W: np.ndarray | None = None) -> float:
    """Position dilution of precision of a geometry matrix."""
    A = H if W is None else H * np.sqrt(W)[:, None]
    cov = np.linalg.inv(A.T @ A)
    return float(math.sqrt(np.trace(cov[:3, :3])))


def in_shell(position: np.ndarray) -> bool:
    r2 = float(position[:3] @ position[:3])
    return SHELL_MIN_RADIUS**2 <= r2 <= SHELL_MAX_RADIUS**2
