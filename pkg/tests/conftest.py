"""Shared builders for small deterministic fixtures."""

import numpy as np

from trajrecover.grid import _M_PER_DEG_LAT, GeoPoint, GridSpec, grid_from_box
from trajrecover.ingest import AggregatedDataset, DiscreteTrajectory, TemporalSpec, aggregate

# a midnight UTC epoch instant, so derived start times are exact times of day
MIDNIGHT = 19675 * 86400


def equator_grid(rows: int, cols: int, cell_side_m: float = 1000.0) -> GridSpec:
    """Grid centered on the equator (east/west scale == north/south scale)."""
    half_lat = rows * cell_side_m / (2 * _M_PER_DEG_LAT)
    lon_extent = cols * cell_side_m / _M_PER_DEG_LAT
    return grid_from_box(
        GeoPoint(-half_lat, 0.0), GeoPoint(half_lat, lon_extent), cell_side_m
    )


def dataset_from_cells(
    cells, grid: GridSpec, interval: int = 3600, start: int = MIDNIGHT
) -> AggregatedDataset:
    """Aggregate an (n, t) matrix of per-user cell ids."""
    cells = np.asarray(cells, dtype=np.int64)
    temporal = TemporalSpec(start, interval, cells.shape[1])
    trajs = [DiscreteTrajectory(f"u{i}", row) for i, row in enumerate(cells)]
    return aggregate(trajs, temporal, grid)
