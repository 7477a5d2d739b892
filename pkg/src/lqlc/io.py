"""CSV / JSON readers and writers used by the command line tools.

Floats are written with ``repr`` so files round-trip exactly and are
byte-identical across runs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientSamples, ValidationError
from .model import Constellation, EcefPosition, EpochObservations, SatelliteObservation
from .solver import SolveReport

OBS_COLUMNS = ("epoch", "sat_id", "constellation", "sat_x", "sat_y", "sat_z", "pseudorange", "scale")
SOLUTION_COLUMNS = ("epoch", "x", "y", "z", "bias_gps", "bias_bds", "iterations", "converged",
                    "objective", "wall_time_s", "status")
RESIDUAL_COLUMNS = ("epoch", "sat_id", "constellation", "residual", "normalized_residual", "weight")
SWEEP_COLUMNS = ("alpha", "rmse_3d", "std_3d", "mean_iterations", "failed_trials")
BENCH_COLUMNS = ("run", "iterations", "time_s")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return "nan" if math.isnan(v) else repr(v)


def _write_rows(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_json(path: Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


# -- observations -----------------------------------------------------------

def observation_rows(epoch: EpochObservations) -> list[list]:
    return [
        [epoch.epoch_index, o.sat_id, o.constellation.value, o.sat_pos.x, o.sat_pos.y, o.sat_pos.z,
         o.pseudorange, o.scale]
        for o in epoch.observations
    ]


def write_observations(path: Path, epochs: Iterable[EpochObservations]) -> None:
    _write_rows(Path(path), OBS_COLUMNS, (row for e in epochs for row in observation_rows(e)))


def read_observation_groups(path: Path) -> list[tuple[int, tuple[SatelliteObservation, ...]]]:
    """Rows of an observation CSV grouped by epoch.

    Epoch groups are returned unvalidated so one short epoch does not stop a
    batch; build :class:`EpochObservations` from each group.

    Raises
    ------
    ValidationError
        On a wrong header, a malformed row or epochs out of ascending order.
    """
    groups: list[tuple[int, list]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != OBS_COLUMNS:
            raise ValidationError(f"{path}: expected header {','.join(OBS_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(OBS_COLUMNS):
                raise ValidationError(f"{path}:{lineno}: expected {len(OBS_COLUMNS)} fields, got {len(row)}")
            try:
                epoch = int(row[0])
                obs = SatelliteObservation(
                    row[1].strip(), Constellation(row[2].strip().upper()),
                    EcefPosition(float(row[3]), float(row[4]), float(row[5])),
                    float(row[6]), float(row[7]),
                )
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            if groups and epoch == groups[-1][0]:
                groups[-1][1].append(obs)
            elif groups and epoch < groups[-1][0]:
                raise ValidationError(f"{path}:{lineno}: epoch {epoch} out of ascending order")
            else:
                groups.append((epoch, [obs]))
    return [(e, tuple(obs)) for e, obs in groups]


def read_observations(path: Path) -> list[EpochObservations]:
    return [EpochObservations(e, obs) for e, obs in read_observation_groups(path)]


# -- solutions --------------------------------------------------------------

def solution_row(report: SolveReport, record_time: bool = False) -> list:
    p = report.state.position
    b = report.state.clock_bias
    return [report.epoch_index, p.x, p.y, p.z, b.get(Constellation.GPS), b.get(Constellation.BDS),
            report.iterations, report.converged, report.objective,
            report.wall_time if record_time else None, "ok"]


def failed_solution_row(epoch_index: int, status: str) -> list:
    return [epoch_index] + [None] * 9 + [status]


def write_solutions(path: Path, rows: Iterable[list]) -> None:
    _write_rows(Path(path), SOLUTION_COLUMNS, rows)


def read_solutions(path: Path) -> list[dict]:
    """Solution rows as dicts; numeric fields are floats or ``None`` when blank."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {"epoch": int(row["epoch"]), "status": row["status"]}
            for key in ("x", "y", "z", "bias_gps", "bias_bds", "objective", "wall_time_s"):
                rec[key] = float(row[key]) if row[key] else None
            rec["iterations"] = int(row["iterations"]) if row["iterations"] else None
            rec["converged"] = row["converged"] == "true" if row["converged"] else None
            out.append(rec)
    return out


def residual_rows(epoch: EpochObservations, report: SolveReport) -> list[list]:
    return [
        [epoch.epoch_index, o.sat_id, o.constellation.value, r, rb, w]
        for o, r, rb, w in zip(epoch.observations, report.residuals, report.normalized_residuals, report.weights)
    ]


def write_residuals(path: Path, rows: Iterable[list]) -> None:
    _write_rows(Path(path), RESIDUAL_COLUMNS, rows)


# -- samples ----------------------------------------------------------------

def read_samples(path: Path) -> np.ndarray:
    """Error samples from a one-column CSV or the ``residual`` column of a solver export.

    A first row that does not parse as a number is treated as a header.
    """
    values = []
    column = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1:
                try:
                    float(row[0])
                except ValueError:
                    names = [h.strip() for h in row]
                    column = names.index("residual") if "residual" in names else 0
                    continue
            try:
                values.append(float(row[column]))
            except (ValueError, IndexError) as exc:
                raise ValidationError(f"{path}:{lineno}: not a number ({exc})") from exc
    if not values:
        raise InsufficientSamples(f"{path}: no samples")
    return np.array(values)


def write_samples(path: Path, values, name: str = "error") -> None:
    _write_rows(Path(path), (name,), ([v] for v in np.asarray(values, dtype=float)))


# -- sweep / bench / histogram ------------------------------------------------

def write_sweep(path: Path, result) -> None:
    _write_rows(Path(path), SWEEP_COLUMNS,
                ([r.alpha, r.rmse_3d, r.std_3d, r.mean_iterations, r.failed_trials] for r in result.records))


def read_sweep(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {"alpha": float(r["alpha"]), "rmse_3d": float(r["rmse_3d"]), "std_3d": float(r["std_3d"]),
             "mean_iterations": float(r["mean_iterations"]), "failed_trials": int(r["failed_trials"])}
            for r in csv.DictReader(fh)
        ]


def write_bench(path: Path, report) -> None:
    _write_rows(Path(path), BENCH_COLUMNS,
                ([i, it, t] for i, (it, t) in enumerate(zip(report.iteration_counts, report.times))))


def write_histogram(path: Path, table: dict) -> None:
    columns = list(table)
    _write_rows(Path(path), columns, zip(*(table[c] for c in columns)))
