"""Three-stage trajectory recovery from an aggregated dataset.

Each day is recovered step by step: the first step is read directly off the
expanded record, night-hour steps (00:00-06:00, and the 06:00 step itself,
which has too little history for extrapolation) are matched by plain
distance on the assumption that people rarely move at night, and the
remaining daytime steps are matched against a constant-velocity
extrapolation of each person's last two positions. Days are then chained
into full trajectories by matching consecutive days' sub-trajectories with
an information-gain cost, exploiting the repetitiveness of daily routines.

Every step's matching is a minimum-cost assignment, so the recovered set
re-aggregates exactly to the input counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .assignment import solve_min
from .grid import GridSpec, cell_center_arrays
from .grid import haversine_m
from .ingest import NIGHT_END_SECONDS, AggregatedDataset, IngestError, TemporalSpec, validate_dataset


class AttackError(ValueError):
    """Inconsistent attack inputs (dimensions, day ordering, ...)."""


@dataclass(frozen=True, eq=False)
class DayPrediction:
    """n recovered sub-trajectories for one day, shape (n, steps_in_day)."""

    day_index: int
    cells: np.ndarray


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """Recovered (or ground-truth) trajectories, shape (n, length).

    ``length`` is ``temporal.steps`` for complete sets; online snapshots
    carry the prefix recovered so far. ``user_ids`` is set for ground truth
    and None for anonymous recovered slots.
    """

    trajectories: np.ndarray
    grid: GridSpec
    temporal: TemporalSpec
    user_ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        traj = np.asarray(self.trajectories, dtype=np.int64)
        if traj.ndim != 2:
            raise AttackError("trajectories must be a 2-D array")
        if traj.shape[1] > self.temporal.steps:
            raise AttackError(
                f"trajectory length {traj.shape[1]} exceeds temporal steps {self.temporal.steps}"
            )
        if self.user_ids is not None and len(self.user_ids) != traj.shape[0]:
            raise AttackError("user_ids length does not match trajectory count")
        object.__setattr__(self, "trajectories", traj)

    @property
    def num_users(self) -> int:
        return self.trajectories.shape[0]

    @property
    def num_steps(self) -> int:
        return self.trajectories.shape[1]


class CellGeometry:
    """Precomputed cell-center coordinates for fast cost matrices."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.center_lat, self.center_lon = cell_center_arrays(grid)
        cells = np.arange(grid.num_cells)
        self.center_x = (cells % grid.cols + 0.5) * grid.cell_side_m
        self.center_y = (cells // grid.cols + 0.5) * grid.cell_side_m


def expand_record(record: np.ndarray) -> np.ndarray:
    """Unroll a count row into one column per person, ascending by cell id."""
    record = np.asarray(record)
    return np.repeat(np.arange(record.shape[0], dtype=np.int64), record)


def trivial_first_step(expanded: np.ndarray) -> np.ndarray:
    """Identity assignment onto the expanded record: slot i takes column i."""
    return np.asarray(expanded, dtype=np.int64).copy()


def night_step_costs(
    current_cells: np.ndarray,
    next_expanded: np.ndarray,
    grid: GridSpec,
    geometry: CellGeometry | None = None,
) -> np.ndarray:
    """cost[i][j] = distance from person i's cell center to column j's center."""
    g = geometry or CellGeometry(grid)
    cur = np.asarray(current_cells)
    nxt = np.asarray(next_expanded)
    return haversine_m(
        g.center_lat[cur][:, None],
        g.center_lon[cur][:, None],
        g.center_lat[nxt][None, :],
        g.center_lon[nxt][None, :],
    )


def _extrapolate(prev_cells, current_cells, geometry):
    """Eq. of motion in local meters: q = p + (p - p_prev), back to lat/lon."""
    qx = 2.0 * geometry.center_x[current_cells] - geometry.center_x[prev_cells]
    qy = 2.0 * geometry.center_y[current_cells] - geometry.center_y[prev_cells]
    grid = geometry.grid
    q_lat = grid.southwest.lat + qy / grid.m_per_deg_lat
    q_lon = grid.southwest.lon + qx / grid.m_per_deg_lon
    # extrapolation may leave the grid; keep it inside the haversine domain
    return np.clip(q_lat, -90.0, 90.0), q_lon


def velocity_step_costs(
    prev_cells: np.ndarray,
    current_cells: np.ndarray,
    next_expanded: np.ndarray,
    grid: GridSpec,
    geometry: CellGeometry | None = None,
) -> np.ndarray:
    """cost[i][j] = distance from column j's center to person i's extrapolated point.

    The extrapolated point is not snapped to a cell; a static person (equal
    previous and current cells) degenerates to the night distance cost.
    """
    g = geometry or CellGeometry(grid)
    q_lat, q_lon = _extrapolate(np.asarray(prev_cells), np.asarray(current_cells), g)
    nxt = np.asarray(next_expanded)
    return haversine_m(
        q_lat[:, None], q_lon[:, None], g.center_lat[nxt][None, :], g.center_lon[nxt][None, :]
    )


def recover_day(
    data: AggregatedDataset, day_index: int, geometry: CellGeometry | None = None
) -> DayPrediction:
    """Stage one and two: per-step assignments within one day."""
    g = geometry or CellGeometry(data.grid)
    lo, hi = data.temporal.day_bounds(day_index)
    n = data.population
    cells = np.empty((n, hi - lo), dtype=np.int64)
    cells[:, 0] = trivial_first_step(expand_record(data.counts[lo]))
    for idx in range(1, hi - lo):
        expanded = expand_record(data.counts[lo + idx])
        tod = data.temporal.time_of_day(lo + idx)
        if tod <= NIGHT_END_SECONDS or idx < 2:
            costs = night_step_costs(cells[:, idx - 1], expanded, data.grid, g)
        else:
            costs = velocity_step_costs(cells[:, idx - 2], cells[:, idx - 1], expanded, data.grid, g)
        mapping = solve_min(costs).mapping
        cells[:, idx] = expanded[list(mapping)]
    return DayPrediction(day_index, cells)


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain(a, b) -> float:
    """Similarity of two cell sequences; 0 for identical distributions.

    Entropy of the merged empirical cell distribution minus the
    length-weighted mean of the two separate entropies (the decision-tree
    split form), in bits. Symmetric and non-negative.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise AttackError("information gain requires non-empty sequences")
    width = int(max(a.max(), b.max())) + 1
    ca = np.bincount(a, minlength=width)
    cb = np.bincount(b, minlength=width)
    ha, hb = _entropy_bits(ca), _entropy_bits(cb)
    merged = _entropy_bits(ca + cb)
    if a.size == b.size:
        children = 0.5 * (ha + hb)
    else:
        children = (a.size * ha + b.size * hb) / (a.size + b.size)
    return max(0.0, merged - children)


def _count_rows(cells: np.ndarray, m: int) -> np.ndarray:
    """(n, m) per-row cell histograms."""
    n, length = cells.shape
    offsets = (np.arange(n, dtype=np.int64) * m)[:, None]
    return np.bincount((cells + offsets).ravel(), minlength=n * m).reshape(n, m).astype(np.float64)


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=-1, keepdims=True)
    p = counts / totals
    terms = np.where(counts > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def pairwise_information_gain(a_cells: np.ndarray, b_cells: np.ndarray, m: int) -> np.ndarray:
    """Matrix of information_gain between every row of a and every row of b."""
    ca = _count_rows(a_cells, m)
    cb = _count_rows(b_cells, m)
    ha = _entropy_rows(ca)
    hb = _entropy_rows(cb)
    la, lb = a_cells.shape[1], b_cells.shape[1]
    out = np.empty((ca.shape[0], cb.shape[0]))
    chunk = max(1, int(4e6) // (cb.shape[0] * m + 1))
    for start in range(0, ca.shape[0], chunk):
        stop = min(start + chunk, ca.shape[0])
        merged = ca[start:stop, None, :] + cb[None, :, :]
        out[start:stop] = _entropy_rows(merged)
    if la == lb:
        children = 0.5 * (ha[:, None] + hb[None, :])
    else:
        children = (la * ha[:, None] + lb * hb[None, :]) / (la + lb)
    return np.maximum(0.0, out - children)


def link_days(previous: TrajectorySet, next_day: DayPrediction) -> TrajectorySet:
    """Stage three: append a day by matching sub-trajectories across days.

    cost[u][v] = information gain between trajectory u's most recent daily
    sub-trajectory and candidate sub-trajectory v.
    """
    d = previous.temporal.steps_per_day
    if previous.num_steps % d != 0:
        raise AttackError("cannot link onto a partial day")
    x = previous.num_steps // d - 1
    if next_day.day_index != x + 1:
        raise AttackError(
            f"day {next_day.day_index} does not follow the {x + 1} completed days"
        )
    if next_day.cells.shape[0] != previous.num_users:
        raise AttackError("population mismatch between days")
    last = previous.trajectories[:, x * d : (x + 1) * d]
    costs = pairwise_information_gain(last, next_day.cells, previous.grid.num_cells)
    mapping = solve_min(costs).mapping
    extended = np.hstack([previous.trajectories, next_day.cells[list(mapping)]])
    return TrajectorySet(extended, previous.grid, previous.temporal, previous.user_ids)


def recover_all(data: AggregatedDataset) -> TrajectorySet:
    """Recover every day independently, then chain them in order."""
    report = validate_dataset(data)
    if not report.ok:
        raise IngestError(f"dataset failed validation:\n{report}")
    geometry = CellGeometry(data.grid)
    days = [recover_day(data, day, geometry) for day in range(data.temporal.num_days)]
    result = TrajectorySet(days[0].cells, data.grid, data.temporal)
    for day in days[1:]:
        result = link_days(result, day)
    return result


def write_trajectories(trajectories: TrajectorySet, path, with_coords: bool = False) -> None:
    """CSV ``user_slot,step,cell`` with optional cell-center ``lat,lon``."""
    geometry = CellGeometry(trajectories.grid) if with_coords else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["user_slot", "step", "cell"]
        if with_coords:
            header += ["lat", "lon"]
        writer.writerow(header)
        for slot in range(trajectories.num_users):
            for step in range(trajectories.num_steps):
                cell = int(trajectories.trajectories[slot, step])
                row = [slot, step, cell]
                if with_coords:
                    row += [
                        repr(float(geometry.center_lat[cell])),
                        repr(float(geometry.center_lon[cell])),
                    ]
                writer.writerow(row)


def read_trajectories(path, grid: GridSpec, temporal: TemporalSpec) -> TrajectorySet:
    by_slot: dict[int, dict[int, int]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["user_slot", "step", "cell"]:
            raise AttackError(f"unexpected trajectory header in {path}")
        for row in reader:
            by_slot.setdefault(int(row[0]), {})[int(row[1])] = int(row[2])
    if not by_slot:
        raise AttackError(f"no trajectories in {path}")
    slots = sorted(by_slot)
    length = max(by_slot[slots[0]]) + 1
    cells = np.empty((len(slots), length), dtype=np.int64)
    for i, slot in enumerate(slots):
        steps = by_slot[slot]
        if sorted(steps) != list(range(length)):
            raise AttackError(f"slot {slot} has missing steps in {path}")
        cells[i] = [steps[s] for s in range(length)]
    return TrajectorySet(cells, grid, temporal)
