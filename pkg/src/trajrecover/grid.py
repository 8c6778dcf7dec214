"""Discrete location model: a geographic bounding box split into square cells.

Cells are square in *meters*, laid out on local east/north axes anchored at
the box's latitude midline, and enumerated row-major from the southwest
corner. Points are mapped to cells with half-open edges ([low, high) on each
axis) except the outermost row/column, which is closed so that clamped points
always land in a valid cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_008.8  # mean Earth radius
_M_PER_DEG_LAT = math.pi / 180.0 * EARTH_RADIUS_M

# Cell index into a GridSpec, in [0, rows * cols).
CellId = int


class GridError(ValueError):
    """Invalid grid construction or point/cell lookup."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise GridError(f"latitude out of range [-90, 90]: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise GridError(f"longitude out of range [-180, 180]: {self.lon}")


@dataclass(frozen=True)
class GridSpec:
    southwest: GeoPoint
    northeast: GeoPoint
    cell_side_m: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.southwest.lat >= self.northeast.lat:
            raise GridError("southwest corner must be strictly south of northeast corner")
        if self.southwest.lon >= self.northeast.lon:
            raise GridError("southwest corner must be strictly west of northeast corner")
        if self.cell_side_m <= 0:
            raise GridError(f"cell side must be positive, got {self.cell_side_m}")
        if self.rows < 1 or self.cols < 1:
            raise GridError(f"grid must have at least one cell, got {self.rows}x{self.cols}")

    @property
    def num_cells(self) -> int:
        return self.rows * self.cols

    @property
    def m_per_deg_lat(self) -> float:
        return _M_PER_DEG_LAT

    @property
    def m_per_deg_lon(self) -> float:
        # East/west meters are measured at the box's latitude midline.
        mid_lat = 0.5 * (self.southwest.lat + self.northeast.lat)
        return _M_PER_DEG_LAT * math.cos(math.radians(mid_lat))

    def local_xy(self, lat: float, lon: float) -> tuple[float, float]:
        """Meters east/north of the southwest corner."""
        x = (lon - self.southwest.lon) * self.m_per_deg_lon
        y = (lat - self.southwest.lat) * self.m_per_deg_lat
        return x, y

    def to_dict(self) -> dict:
        return {
            "sw_lat": self.southwest.lat,
            "sw_lon": self.southwest.lon,
            "ne_lat": self.northeast.lat,
            "ne_lon": self.northeast.lon,
            "cell_side_m": self.cell_side_m,
            "rows": self.rows,
            "cols": self.cols,
        }

    @classmethod
    def from_dict(cls, d: dict) -> GridSpec:
        return cls(
            southwest=GeoPoint(d["sw_lat"], d["sw_lon"]),
            northeast=GeoPoint(d["ne_lat"], d["ne_lon"]),
            cell_side_m=d["cell_side_m"],
            rows=int(d["rows"]),
            cols=int(d["cols"]),
        )

    def to_json(self) -> str:
        # json round-trips Python floats at full precision (repr semantics)
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> GridSpec:
        return cls.from_dict(json.loads(text))


def grid_from_box(southwest: GeoPoint, northeast: GeoPoint, cell_side_m: float) -> GridSpec:
    """Grid covering the box with square cells of the given side length.

    Row/column counts are the minimum needed to cover the box, so the tiled
    area may extend slightly past the northeast corner.
    """
    if cell_side_m <= 0:
        raise GridError(f"cell side must be positive, got {cell_side_m}")
    ns_extent = (northeast.lat - southwest.lat) * _M_PER_DEG_LAT
    mid_lat = 0.5 * (southwest.lat + northeast.lat)
    ew_extent = (northeast.lon - southwest.lon) * _M_PER_DEG_LAT * math.cos(math.radians(mid_lat))
    if ns_extent <= 0:
        raise GridError("degenerate box: zero extent in latitude")
    if ew_extent <= 0:
        raise GridError("degenerate box: zero extent in longitude")
    # the 1e-9 slack avoids a spurious extra row/col when extent/side is integral
    rows = max(1, math.ceil(ns_extent / cell_side_m - 1e-9))
    cols = max(1, math.ceil(ew_extent / cell_side_m - 1e-9))
    return GridSpec(southwest, northeast, cell_side_m, rows, cols)


def build_grid(
    points: Sequence[GeoPoint],
    lower_percentile: float,
    upper_percentile: float,
    cell_area_m2: float,
) -> GridSpec:
    """Bounding box at the given latitude/longitude percentiles, square cells.

    ``cell_area_m2`` is the physical area of one cell; the side length is its
    square root (1 km² cells have 1000 m sides).
    """
    if len(points) < 2:
        raise GridError("need at least 2 points to build a grid")
    if not (0.0 <= lower_percentile < upper_percentile <= 1.0):
        raise GridError(
            f"percentiles must satisfy 0 <= lower < upper <= 1, got "
            f"{lower_percentile}, {upper_percentile}"
        )
    if cell_area_m2 <= 0:
        raise GridError(f"cell area must be positive, got {cell_area_m2}")
    lats = np.array([p.lat for p in points], dtype=np.float64)
    lons = np.array([p.lon for p in points], dtype=np.float64)
    sw_lat, ne_lat = np.quantile(lats, [lower_percentile, upper_percentile])
    sw_lon, ne_lon = np.quantile(lons, [lower_percentile, upper_percentile])
    if ne_lat <= sw_lat:
        raise GridError("degenerate box: zero extent in latitude")
    if ne_lon <= sw_lon:
        raise GridError("degenerate box: zero extent in longitude")
    side = math.sqrt(cell_area_m2)
    return grid_from_box(GeoPoint(float(sw_lat), float(sw_lon)), GeoPoint(float(ne_lat), float(ne_lon)), side)


def clamp(point: GeoPoint, grid: GridSpec) -> GeoPoint:
    """Clamp each coordinate independently into the grid's bounding box."""
    lat = min(max(point.lat, grid.southwest.lat), grid.northeast.lat)
    lon = min(max(point.lon, grid.southwest.lon), grid.northeast.lon)
    if lat == point.lat and lon == point.lon:
        return point
    return GeoPoint(lat, lon)


# meter tolerance when testing whether a point sits inside the tiled area
_EDGE_EPS_M = 1e-6


def assign_cell(point: GeoPoint, grid: GridSpec) -> CellId:
    """Row-major index of the cell containing the point.

    Points exactly on an interior cell edge belong to the cell with the
    larger index along that axis. The point must lie within the grid's
    coverage (clamp first otherwise); cells of the last row/column may extend
    slightly past the northeast corner and are accepted.
    """
    x, y = grid.local_xy(point.lat, point.lon)
    side = grid.cell_side_m
    if not (-_EDGE_EPS_M <= y <= grid.rows * side + _EDGE_EPS_M):
        raise GridError(f"point {point} outside grid box (north/south)")
    if not (-_EDGE_EPS_M <= x <= grid.cols * side + _EDGE_EPS_M):
        raise GridError(f"point {point} outside grid box (east/west)")
    row = min(max(int(y // side), 0), grid.rows - 1)
    col = min(max(int(x // side), 0), grid.cols - 1)
    return row * grid.cols + col


def cell_center(cell: CellId, grid: GridSpec) -> GeoPoint:
    """Geographic midpoint of the cell's rectangle."""
    if not (0 <= cell < grid.num_cells):
        raise GridError(f"cell index {cell} out of range [0, {grid.num_cells})")
    row, col = divmod(cell, grid.cols)
    y = (row + 0.5) * grid.cell_side_m
    x = (col + 0.5) * grid.cell_side_m
    lat = grid.southwest.lat + y / grid.m_per_deg_lat
    lon = grid.southwest.lon + x / grid.m_per_deg_lon
    return GeoPoint(lat, lon)


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle (haversine) distance in meters."""
    return float(haversine_m(a.lat, a.lon, b.lat, b.lon))


def haversine_m(lat1, lon1, lat2, lon2):
    """Vectorized haversine distance in meters (degrees in, array-friendly)."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def cell_center_arrays(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Latitudes and longitudes of every cell center, indexed by CellId."""
    rows = np.arange(grid.num_cells) // grid.cols
    cols = np.arange(grid.num_cells) % grid.cols
    lats = grid.southwest.lat + (rows + 0.5) * grid.cell_side_m / grid.m_per_deg_lat
    lons = grid.southwest.lon + (cols + 0.5) * grid.cell_side_m / grid.m_per_deg_lon
    return lats, lons


def pairwise_cell_distances(grid: GridSpec) -> np.ndarray:
    """(m, m) matrix of haversine distances between all cell centers."""
    lats, lons = cell_center_arrays(grid)
    return haversine_m(lats[:, None], lons[:, None], lats[None, :], lons[None, :])
