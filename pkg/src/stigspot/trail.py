"""Pheromone trail field.

Each event drops a truncated-cone mark centred on its cell. Between steps
the whole field loses a fixed amount ``delta`` per cell (clamped at zero),
so only areas with sustained deposit activity keep a trail::

    T_i = max(0, T_{i-1} - delta) + sum(marks deposited during step i)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geo_grid import CellIndex, GridSpec


@dataclass(frozen=True)
class MarkSpec:
    """Truncated cone: flat top of radius ``top_radius_frac * width_eps``,
    linear fall-off to zero at ``width_eps`` (both in cells)."""

    width_eps: float = 10.0
    intensity: float = 1.0
    top_radius_frac: float = 0.5

    def __post_init__(self):
        if not self.width_eps >= 0:
            raise ValueError(f"width_eps must be >= 0, got {self.width_eps}")
        if not self.intensity > 0:
            raise ValueError(f"intensity must be > 0, got {self.intensity}")
        if not 0 <= self.top_radius_frac < 1:
            raise ValueError(f"top_radius_frac must be in [0, 1), got {self.top_radius_frac}")

    @property
    def top_radius(self) -> float:
        return self.top_radius_frac * self.width_eps


@dataclass(frozen=True)
class EvaporationSpec:
    delta: float

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    def check_against(self, mark: MarkSpec):
        if self.delta > mark.intensity:
            raise ValueError(f"delta {self.delta} exceeds mark intensity {mark.intensity}: "
                             "no mark would survive a single step")


@dataclass(frozen=True, eq=False)
class TrailField:
    """Snapshot ``T_i`` of the trail at time step ``time``.

    ``n_skipped`` counts events handed to :func:`run` that fell outside its
    window.
    """

    spec: GridSpec
    time: int
    values: np.ndarray
    n_skipped: int = 0

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise ValueError(f"trail shape {self.values.shape} does not match grid {self.spec.shape}")
        self.values.setflags(write=False)

    @classmethod
    def zeros(cls, spec: GridSpec, time: int = -1) -> "TrailField":
        return cls(spec, time, np.zeros(spec.shape))

    @property
    def max(self) -> float:
        return float(self.values.max())


def cone_value(d, mark: MarkSpec):
    """Mark intensity at centre-distance ``d`` (cells); works on arrays."""
    d = np.asarray(d, dtype=float)
    eps, r_top = mark.width_eps, mark.top_radius
    out = np.zeros_like(d)
    out[d <= r_top] = mark.intensity
    ramp = (d > r_top) & (d < eps)
    out[ramp] = mark.intensity * (eps - d[ramp]) / (eps - r_top)
    return out


@lru_cache(maxsize=32)
def _kernel(mark: MarkSpec) -> np.ndarray:
    h = int(math.ceil(mark.width_eps))
    off = np.arange(-h, h + 1)
    d = np.hypot(off[:, None], off[None, :])
    k = cone_value(d, mark)
    k.setflags(write=False)
    return k


def mark_footprint(center: CellIndex, mark: MarkSpec, spec: GridSpec) -> dict[CellIndex, float]:
    """Cells touched by a mark at ``center`` and the intensity each receives.

    Cells outside the grid are clipped; zero-valued cells are not emitted.
    """
    k = _kernel(mark)
    h = k.shape[0] // 2
    out = {}
    for i, j in zip(*np.nonzero(k)):
        r, c = center.row + i - h, center.col + j - h
        if 0 <= r < spec.n_rows and 0 <= c < spec.n_cols:
            out[CellIndex(int(r), int(c))] = float(k[i, j])
    return out


def _as_rc(deposits) -> tuple[np.ndarray, np.ndarray]:
    if len(deposits) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if isinstance(deposits[0], CellIndex):
        rc = np.array([(d.row, d.col) for d in deposits], dtype=np.int64)
    else:
        rc = np.asarray(deposits, dtype=np.int64).reshape(-1, 2)
    return rc[:, 0], rc[:, 1]


def _deposit(values: np.ndarray, rows: np.ndarray, cols: np.ndarray, mark: MarkSpec):
    """Add one mark per (row, col) pair to ``values`` in place."""
    if rows.size == 0:
        return
    k = _kernel(mark)
    h = k.shape[0] // 2
    n_rows, n_cols = values.shape
    if np.any((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)):
        raise ValueError("deposit centre outside the grid")
    # stack repeated centres into one weighted kernel add
    flat = rows * n_cols + cols
    uniq, counts = np.unique(flat, return_counts=True)
    for f, n in zip(uniq.tolist(), counts.tolist()):
        r, c = divmod(f, n_cols)
        r0, r1 = max(r - h, 0), min(r + h + 1, n_rows)
        c0, c1 = max(c - h, 0), min(c + h + 1, n_cols)
        patch = k[r0 - r + h:r1 - r + h, c0 - c + h:c1 - c + h]
        if n == 1:
            values[r0:r1, c0:c1] += patch
        else:
            values[r0:r1, c0:c1] += n * patch


def step(trail: TrailField, deposits, mark: MarkSpec, evap: EvaporationSpec) -> TrailField:
    """Advance the trail one time step: evaporate, then add this step's marks.

    ``deposits`` is a sequence of :class:`CellIndex` or an ``(n, 2)`` array of
    ``(row, col)``.
    """
    out = np.maximum(trail.values - evap.delta, 0.0)
    rows, cols = _as_rc(deposits)
    _deposit(out, rows, cols, mark)
    return TrailField(trail.spec, trail.time + 1, out)


def run(spec: GridSpec, rows, cols, steps, window: tuple[int, int],
        mark: MarkSpec, evap: EvaporationSpec) -> TrailField:
    """Trail snapshot at ``window[1] - 1`` starting from an empty field at
    ``window[0]``.

    Events are given as parallel arrays of cell rows, cols and time steps;
    those outside ``[t_start, t_end)`` are skipped and counted.
    """
    t0, t1 = window
    if t1 <= t0:
        raise ValueError(f"empty window {window}")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    steps = np.asarray(steps, dtype=np.int64)
    inside = (steps >= t0) & (steps < t1)
    n_skipped = int(inside.size - np.count_nonzero(inside))
    rows, cols, steps = rows[inside], cols[inside], steps[inside]
    order = np.argsort(steps, kind="stable")
    rows, cols, steps = rows[order], cols[order], steps[order]
    bounds = np.searchsorted(steps, np.arange(t0, t1 + 1))

    values = np.zeros(spec.shape)
    for i in range(t1 - t0):
        if i:
            np.subtract(values, evap.delta, out=values)
            np.maximum(values, 0.0, out=values)
        a, b = bounds[i], bounds[i + 1]
        if b > a:
            _deposit(values, rows[a:b], cols[a:b], mark)
    return TrailField(spec, t1 - 1, values, n_skipped)
