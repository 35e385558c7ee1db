"""Spatial and temporal binning.

Coordinates are projected with a local equirectangular approximation
around the grid's south-west corner, then floored into square cells.
Timestamps are floored into fixed-length steps counted from an epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


class OutOfBounds(ValueError):
    """A projected point falls outside the grid extent."""


@dataclass(frozen=True)
class GridSpec:
    """Discretization parameters.

    ``origin_lat``/``origin_lon`` is the grid's minimum (south-west) corner
    and also the projection centre, so cell (0, 0) starts at projected
    coordinate (0, 0).
    """

    origin_lat: float
    origin_lon: float
    n_rows: int
    n_cols: int
    cell_size_m: float = 100.0
    time_step_s: float = 1200.0

    def __post_init__(self):
        if not (self.cell_size_m > 0):
            raise ValueError(f"cell_size_m must be > 0, got {self.cell_size_m}")
        if not (self.time_step_s > 0):
            raise ValueError(f"time_step_s must be > 0, got {self.time_step_s}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.n_rows}x{self.n_cols}")
        if not (math.isfinite(self.origin_lat) and math.isfinite(self.origin_lon)):
            raise ValueError("grid origin must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @classmethod
    def from_bbox(cls, lat_min, lon_min, lat_max, lon_max, cell_size_m=100.0,
                  time_step_s=1200.0, pad_cells=0) -> "GridSpec":
        """Grid covering a lat/lon box, padded by ``pad_cells`` on every side."""
        if lat_max < lat_min or lon_max < lon_min:
            raise ValueError("bbox max must not be below bbox min")
        pad_m = pad_cells * cell_size_m
        # pad south/west by moving the origin, then size the grid from the
        # projected north-east corner
        lat0 = lat_min - math.degrees(pad_m / EARTH_RADIUS_M)
        lon0 = lon_min - math.degrees(pad_m / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
        probe = cls(lat0, lon0, 1, 1, cell_size_m, time_step_s)
        x_max, y_max = project(lat_max, lon_max, probe)
        n_cols = int(math.floor(x_max / cell_size_m)) + 1 + pad_cells
        n_rows = int(math.floor(y_max / cell_size_m)) + 1 + pad_cells
        return cls(lat0, lon0, n_rows, n_cols, cell_size_m, time_step_s)


@dataclass(frozen=True, order=True)
class CellIndex:
    row: int
    col: int


def _check_latlon(lat, lon):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
        raise ValueError("non-finite coordinate")
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
        raise ValueError("coordinate outside [-90, 90] x [-180, 180]")
    return lat, lon


def project(lat, lon, spec: GridSpec):
    """Equirectangular projection to metres east/north of the grid origin.

    Accepts scalars or arrays; returns ``(x_m, y_m)`` of matching shape.

    Raises:
        ValueError: on non-finite or out-of-range coordinates.
    """
    lat_a, lon_a = _check_latlon(lat, lon)
    k = math.cos(math.radians(spec.origin_lat))
    x = EARTH_RADIUS_M * np.radians(lon_a - spec.origin_lon) * k
    y = EARTH_RADIUS_M * np.radians(lat_a - spec.origin_lat)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def unproject(x_m, y_m, spec: GridSpec):
    """Inverse of :func:`project`; returns ``(lat, lon)``."""
    k = math.cos(math.radians(spec.origin_lat))
    lat = spec.origin_lat + np.degrees(np.asarray(y_m, dtype=float) / EARTH_RADIUS_M)
    lon = spec.origin_lon + np.degrees(np.asarray(x_m, dtype=float) / (EARTH_RADIUS_M * k))
    if np.ndim(lat) == 0:
        return float(lat), float(lon)
    return lat, lon


def to_cell(x_m: float, y_m: float, spec: GridSpec) -> CellIndex:
    """Cell containing a projected point. Points on an edge go to the higher cell."""
    row = math.floor(y_m / spec.cell_size_m)
    col = math.floor(x_m / spec.cell_size_m)
    if not (0 <= row < spec.n_rows and 0 <= col < spec.n_cols):
        raise OutOfBounds(f"point ({x_m:.1f}, {y_m:.1f}) m maps to cell ({row}, {col}) "
                          f"outside {spec.n_rows}x{spec.n_cols} grid")
    return CellIndex(row, col)


def to_cells(x_m, y_m, spec: GridSpec):
    """Vectorised :func:`to_cell`.

    Returns ``(rows, cols, inside)``; rows/cols are only meaningful where
    ``inside`` is True.
    """
    rows = np.floor(np.asarray(y_m) / spec.cell_size_m).astype(np.int64)
    cols = np.floor(np.asarray(x_m) / spec.cell_size_m).astype(np.int64)
    inside = (rows >= 0) & (rows < spec.n_rows) & (cols >= 0) & (cols < spec.n_cols)
    return rows, cols, inside


def cell_center(cell: CellIndex, spec: GridSpec) -> tuple[float, float]:
    """Projected (x_m, y_m) of a cell centre."""
    return ((cell.col + 0.5) * spec.cell_size_m, (cell.row + 0.5) * spec.cell_size_m)


def to_time_index(timestamp: datetime, epoch: datetime, spec: GridSpec) -> int:
    """Number of whole time steps between ``epoch`` and ``timestamp``."""
    dt = (timestamp - epoch).total_seconds()
    if dt < 0:
        raise ValueError(f"timestamp {timestamp.isoformat()} precedes epoch {epoch.isoformat()}")
    return int(dt // spec.time_step_s)


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in metres (vectorised)."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
