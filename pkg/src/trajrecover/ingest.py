"""Trajectory ingestion and aggregation.

Raw timestamped GPS rows are parsed, floored onto a regular time grid,
gap-filled by repeating the last known location, discretized to grid cells,
and counted into the per-step per-cell population matrix that the recovery
attack consumes. Ground-truth discrete trajectories are retained for
evaluation.

File formats:
  raw input     CSV ``user_id,timestamp,lat,lon`` (integer Unix seconds)
  counts        CSV ``step,cell_0,...,cell_{m-1}`` plus a sidecar JSON
                carrying the temporal spec and the grid
  ground truth  CSV ``user_id,step,cell``
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .grid import GeoPoint, GridError, GridSpec, assign_cell, clamp

DAY_SECONDS = 86_400
NIGHT_END_SECONDS = 6 * 3600  # 06:00


class IngestError(ValueError):
    """Malformed input data or incompatible specs."""


@dataclass(frozen=True)
class RawTrajectory:
    """Time-ordered GPS fixes of one user; timestamps strictly increasing."""

    user_id: str
    points: tuple[tuple[int, GeoPoint], ...]

    def __post_init__(self) -> None:
        stamps = [ts for ts, _ in self.points]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise IngestError(f"timestamps of user {self.user_id!r} must strictly increase")


@dataclass(frozen=True)
class TemporalSpec:
    """Regular time grid: ``steps`` instants spaced ``interval`` seconds apart.

    Compliance rules (interval divides 24 h, start-of-day between 00:00 and
    06:00) are reported by :func:`validate_dataset` rather than enforced
    here, so non-compliant datasets can still be represented and inspected.
    """

    start_timestamp: int
    interval: int
    steps: int

    def __post_init__(self) -> None:
        if self.interval <= 0:
            raise IngestError(f"interval must be positive, got {self.interval}")
        if self.steps <= 0:
            raise IngestError(f"steps must be positive, got {self.steps}")

    @property
    def steps_per_day(self) -> int:
        if DAY_SECONDS % self.interval != 0:
            raise IngestError(f"interval {self.interval} does not divide 24 hours")
        return DAY_SECONDS // self.interval

    @property
    def num_days(self) -> int:
        # the final day may be partial
        return math.ceil(self.steps / self.steps_per_day)

    def step_time(self, step: int) -> int:
        return self.start_timestamp + step * self.interval

    def time_of_day(self, step: int) -> int:
        return self.step_time(step) % DAY_SECONDS

    def day_bounds(self, day: int) -> tuple[int, int]:
        """Step range [lo, hi) covered by the given day."""
        d = self.steps_per_day
        if not (0 <= day < self.num_days):
            raise IngestError(f"day {day} out of range [0, {self.num_days})")
        return day * d, min((day + 1) * d, self.steps)

    def to_dict(self) -> dict:
        return {
            "start_timestamp": self.start_timestamp,
            "interval": self.interval,
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TemporalSpec:
        return cls(int(d["start_timestamp"]), int(d["interval"]), int(d["steps"]))


@dataclass(frozen=True, eq=False)
class DiscreteTrajectory:
    """One user's cell id per time step; length equals the temporal spec's t."""

    user_id: str
    cells: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class AggregatedDataset:
    """Per-step per-cell person counts: the attack input.

    Structural shape is enforced at construction; population constancy and
    the temporal compliance rules are checked by :func:`validate_dataset`.
    """

    counts: np.ndarray
    temporal: TemporalSpec
    grid: GridSpec

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise IngestError(f"counts must be 2-D, got {counts.ndim}-D")
        if counts.shape != (self.temporal.steps, self.grid.num_cells):
            raise IngestError(
                f"counts shape {counts.shape} does not match "
                f"(steps, cells) = ({self.temporal.steps}, {self.grid.num_cells})"
            )
        counts = counts.copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def population(self) -> int:
        """n, the row sum (constant across rows for valid datasets)."""
        return int(self.counts[0].sum())


_CSV_HEADER = ["user_id", "timestamp", "lat", "lon"]


def parse_trajectories(source: TextIO | str, format: str = "csv") -> list[RawTrajectory]:
    """Parse raw rows into per-user, time-sorted trajectories.

    Duplicate (user, timestamp) rows collapse to the last occurrence. Users
    appear in input order.
    """
    if format != "csv":
        raise IngestError(f"unsupported format {format!r}")
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != _CSV_HEADER:
        raise IngestError(f"expected header {','.join(_CSV_HEADER)!r}, got {header}")
    by_user: dict[str, dict[int, GeoPoint]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise IngestError(f"line {lineno}: expected 4 fields, got {len(row)}")
        user_id = row[0]
        try:
            ts = int(row[1])
            point = GeoPoint(float(row[2]), float(row[3]))
        except (ValueError, GridError) as exc:
            raise IngestError(f"line {lineno}: {exc}") from exc
        by_user.setdefault(user_id, {})[ts] = point
    return [
        RawTrajectory(user_id, tuple(sorted(points.items())))
        for user_id, points in by_user.items()
    ]


def resample(traj: RawTrajectory, temporal: TemporalSpec) -> RawTrajectory:
    """Floor timestamps onto the time grid; last point per instant wins.

    Points outside [start, start + steps * interval) are dropped. Idempotent.
    """
    kept: dict[int, GeoPoint] = {}
    for ts, point in traj.points:
        k = (ts - temporal.start_timestamp) // temporal.interval
        if 0 <= k < temporal.steps:
            kept[temporal.step_time(int(k))] = point
    if not kept:
        raise IngestError(f"trajectory of user {traj.user_id!r} does not overlap the window")
    return RawTrajectory(traj.user_id, tuple(sorted(kept.items())))


def static_interpolate(
    traj: RawTrajectory, temporal: TemporalSpec, grid: GridSpec
) -> DiscreteTrajectory:
    """Total cell sequence: repeat the last known location across gaps.

    Steps before the first known point take the first known location. Each
    location is clamped into the grid box before cell lookup.
    """
    resampled = resample(traj, temporal)
    known: dict[int, int] = {}
    for ts, point in resampled.points:
        step = (ts - temporal.start_timestamp) // temporal.interval
        known[int(step)] = assign_cell(clamp(point, grid), grid)
    cells = np.empty(temporal.steps, dtype=np.int64)
    first_step = min(known)
    last_cell = known[first_step]
    for step in range(temporal.steps):
        last_cell = known.get(step, last_cell)
        cells[step] = last_cell
    cells[:first_step] = known[first_step]
    return DiscreteTrajectory(resampled.user_id, cells)


def aggregate(
    trajectories: Sequence[DiscreteTrajectory],
    temporal: TemporalSpec,
    grid: GridSpec,
) -> AggregatedDataset:
    """Count users per (step, cell). Every row sums to the population size."""
    if not trajectories:
        raise IngestError("need at least one trajectory to aggregate")
    t, m = temporal.steps, grid.num_cells
    stacked = np.empty((len(trajectories), t), dtype=np.int64)
    for i, traj in enumerate(trajectories):
        if traj.cells.shape != (t,):
            raise IngestError(
                f"trajectory of user {traj.user_id!r} has length "
                f"{traj.cells.shape[0]}, expected {t}"
            )
        if traj.cells.min() < 0 or traj.cells.max() >= m:
            raise IngestError(f"trajectory of user {traj.user_id!r} has cells outside [0, {m})")
        stacked[i] = traj.cells
    flat = (np.arange(t, dtype=np.int64) * m)[None, :] + stacked
    counts = np.bincount(flat.ravel(), minlength=t * m).reshape(t, m)
    return AggregatedDataset(counts, temporal, grid)


@dataclass(frozen=True)
class Violation:
    kind: str  # "row-sum" | "interval" | "start-time" | "negative"
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "dataset is valid"
        return "\n".join(str(v) for v in self.violations)


def validate_dataset(data: AggregatedDataset) -> ValidationReport:
    """Check the attack's input requirements; violations are reported, not raised."""
    report = ValidationReport()
    counts = data.counts
    if (counts < 0).any():
        rows = np.flatnonzero((counts < 0).any(axis=1))
        for row in rows:
            report.violations.append(
                Violation("negative", f"row {int(row)} contains negative counts")
            )
    sums = counts.sum(axis=1)
    n = int(sums[0])
    for row in np.flatnonzero(sums != n):
        report.violations.append(
            Violation("row-sum", f"row {int(row)} sums to {int(sums[row])}, expected {n}")
        )
    if DAY_SECONDS % data.temporal.interval != 0:
        report.violations.append(
            Violation("interval", f"interval {data.temporal.interval} s does not divide 24 hours")
        )
    start_tod = data.temporal.start_timestamp % DAY_SECONDS
    if not (0 <= start_tod < NIGHT_END_SECONDS):
        hh, mm = divmod(start_tod // 60, 60)
        report.violations.append(
            Violation(
                "start-time",
                f"records start at {hh:02d}:{mm:02d}, required between 00:00 and 06:00",
            )
        )
    return report


def write_aggregated(data: AggregatedDataset, counts_path, sidecar_path) -> None:
    t, m = data.counts.shape
    with open(counts_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"cell_{j}" for j in range(m)])
        for i in range(t):
            writer.writerow([i] + [int(c) for c in data.counts[i]])
    sidecar = {"temporal": data.temporal.to_dict(), "grid": data.grid.to_dict()}
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_aggregated(counts_path, sidecar_path) -> AggregatedDataset:
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    temporal = TemporalSpec.from_dict(sidecar["temporal"])
    grid = GridSpec.from_dict(sidecar["grid"])
    counts = np.zeros((temporal.steps, grid.num_cells), dtype=np.int64)
    with open(counts_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["step"] + [f"cell_{j}" for j in range(grid.num_cells)]
        if header != expected:
            raise IngestError(f"unexpected counts header in {counts_path}")
        for row in reader:
            counts[int(row[0])] = [int(x) for x in row[1:]]
    return AggregatedDataset(counts, temporal, grid)


def write_ground_truth(trajectories: Iterable[DiscreteTrajectory], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "step", "cell"])
        for traj in trajectories:
            for step, cell in enumerate(traj.cells):
                writer.writerow([traj.user_id, step, int(cell)])


def read_ground_truth(path) -> list[DiscreteTrajectory]:
    by_user: dict[str, dict[int, int]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["user_id", "step", "cell"]:
            raise IngestError(f"unexpected ground-truth header in {path}")
        for row in reader:
            by_user.setdefault(row[0], {})[int(row[1])] = int(row[2])
    out = []
    for user_id, steps in by_user.items():
        t = max(steps) + 1
        if sorted(steps) != list(range(t)):
            raise IngestError(f"ground truth of user {user_id!r} has missing steps")
        out.append(DiscreteTrajectory(user_id, np.array([steps[i] for i in range(t)])))
    return out
