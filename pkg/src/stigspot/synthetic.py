"""Synthetic event streams with planted hotspots.

Clusters are discs of grid cells. While a cluster is active it emits
Poisson(rate) events per time step, each in a uniformly chosen cell of its
disc. Background events fall anywhere on the grid at any time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .behavior import CustomerProfile
from .geo_grid import GridSpec, unproject
from .io import Event, write_events, write_json, write_profiles
from .pipeline import SLOT_SECONDS, TemporalTuple, classify_day

EVENTS_PER_CUSTOMER_YEAR = 68.0
TAU_GRID = (0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95)


@dataclass(frozen=True)
class PlantedCluster:
    name: str
    center: tuple[int, int]  # (row, col)
    radius: float  # cells
    rate: float  # expected events per active time step
    schedule: str | tuple[tuple[str, int], ...] = "always"
    income_mean: float = 3000.0

    @property
    def kind(self) -> str:
        return "permanent" if self.schedule == "always" else "intermittent"

    def active(self, day_type: str, slot: int) -> bool:
        if self.schedule == "always":
            return True
        return (day_type, slot) in self.schedule

    def cells(self, n_rows: int, n_cols: int) -> np.ndarray:
        r0, c0 = self.center
        h = int(math.ceil(self.radius))
        rr, cc = np.mgrid[r0 - h:r0 + h + 1, c0 - h:c0 + h + 1]
        inside = np.hypot(rr - r0, cc - c0) <= self.radius
        inside &= (rr >= 0) & (rr < n_rows) & (cc >= 0) & (cc < n_cols)
        return np.column_stack([rr[inside], cc[inside]])


@dataclass(frozen=True)
class SyntheticScenario:
    origin_lat: float
    origin_lon: float
    n_rows: int
    n_cols: int
    period_start: date
    period_end: date
    clusters: tuple[PlantedCluster, ...] = ()
    background_rate: float = 0.0  # expected events per step over the whole grid
    background_income_mean: float = 3000.0
    online_fraction: float = 0.0
    tz_offset_h: float = 0.0
    cell_size_m: float = 100.0
    time_step_s: float = 1200.0

    def __post_init__(self):
        for c in self.clusters:
            r, col = c.center
            if not (c.radius <= r < self.n_rows - c.radius and c.radius <= col < self.n_cols - c.radius):
                raise ValueError(f"cluster {c.name!r} does not fit inside the grid")
            if c.schedule != "always":
                for dt, slot in c.schedule:
                    TemporalTuple(dt, slot)
            if c.rate < 0:
                raise ValueError(f"cluster {c.name!r} has a negative rate")
        if self.background_rate < 0:
            raise ValueError("background_rate must be >= 0")

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.origin_lat, self.origin_lon, self.n_rows, self.n_cols,
                        self.cell_size_m, self.time_step_s)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        g = self.grid
        lat1, lon1 = unproject(g.n_cols * g.cell_size_m, g.n_rows * g.cell_size_m, g)
        return (self.origin_lat, self.origin_lon, lat1, lon1)

    def to_json(self) -> dict:
        d = asdict(self)
        d["period_start"] = self.period_start.isoformat()
        d["period_end"] = self.period_end.isoformat()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SyntheticScenario":
        d = dict(d)
        d["period_start"] = date.fromisoformat(d["period_start"])
        d["period_end"] = date.fromisoformat(d["period_end"])
        clusters = []
        for c in d.get("clusters", ()):
            c = dict(c)
            c["center"] = tuple(c["center"])
            if c.get("schedule", "always") != "always":
                c["schedule"] = tuple((str(a), int(b)) for a, b in c["schedule"])
            clusters.append(PlantedCluster(**c))
        d["clusters"] = tuple(clusters)
        return cls(**d)


def planted_month(origin_lat: float = 41.0, origin_lon: float = 28.9) -> SyntheticScenario:
    """September 2014 on a 25 km square near Istanbul.

    Three always-on discs (radius 3 km), a weekday daytime disc active
    06:00-20:00 and a weekend night disc active 14:00-04:00, over uniform
    background activity. Intermittent shoppers earn twice as much as the
    rest.
    """
    weekday_day = tuple(("weekday", s) for s in range(3, 10))
    weekend_night = tuple(("weekend", s) for s in (0, 1, 7, 8, 9, 10, 11))
    n = 250
    lo, hi, mid = 60, n - 60, n // 2
    clusters = (
        PlantedCluster("market", (lo, lo), 30, 12.0, "always", 3000.0),
        PlantedCluster("station", (lo, hi), 30, 12.0, "always", 3000.0),
        PlantedCluster("bazaar", (hi, lo), 30, 12.0, "always", 3000.0),
        PlantedCluster("offices", (hi, hi), 28, 20.0, weekday_day, 6000.0),
        PlantedCluster("nightlife", (mid, mid), 28, 20.0, weekend_night, 6000.0),
    )
    return SyntheticScenario(origin_lat, origin_lon, n, n, date(2014, 9, 1),
                             date(2014, 10, 1), clusters, background_rate=6.0,
                             background_income_mean=3000.0, online_fraction=0.02,
                             tz_offset_h=3.0)


@dataclass(frozen=True, eq=False)
class SyntheticData:
    scenario: SyntheticScenario
    events: list[Event]
    profiles: list[CustomerProfile]
    truth: dict
    source: list[str] = field(default_factory=list)  # cluster name or "background" per event


def _income(rng, mean, n):
    sigma = 0.4
    return np.round(rng.lognormal(math.log(mean) - sigma ** 2 / 2, sigma, n), 2)


def generate(scenario: SyntheticScenario, seed: int = 0) -> SyntheticData:
    """Deterministic event stream, customer profiles and ground truth."""
    rng = np.random.default_rng(seed)
    g = scenario.grid
    tz = timezone(timedelta(hours=scenario.tz_offset_h))
    n_days = (scenario.period_end - scenario.period_start).days
    spd = round(86400 / g.time_step_s)
    sps = round(SLOT_SECONDS / g.time_step_s)
    epoch = datetime.combine(scenario.period_start, datetime.min.time(), tzinfo=tz)

    day_types = [classify_day(scenario.period_start + timedelta(days=d)) for d in range(n_days)]
    n_steps = n_days * spd
    step_day = np.arange(n_steps) // spd
    step_slot = (np.arange(n_steps) % spd) // sps

    sources = [(c.name, c.cells(g.n_rows, g.n_cols), c) for c in scenario.clusters]
    all_cells = np.column_stack([a.ravel() for a in np.mgrid[0:g.n_rows, 0:g.n_cols]])
    sources.append(("background", all_cells, None))

    cell_idx, step_idx, src_idx = [], [], []
    for k, (name, cells, c) in enumerate(sources):
        if c is None:
            rate = np.full(n_steps, scenario.background_rate)
        else:
            active = np.array([c.active(day_types[d], s) for d, s in zip(step_day, step_slot)])
            rate = np.where(active, c.rate, 0.0)
        counts = rng.poisson(rate)
        n = int(counts.sum())
        step_idx.append(np.repeat(np.arange(n_steps), counts))
        cell_idx.append(cells[rng.integers(0, len(cells), n)] if n else np.empty((0, 2), int))
        src_idx.append(np.full(n, k))
    steps = np.concatenate(step_idx)
    cells = np.concatenate(cell_idx).reshape(-1, 2)
    src = np.concatenate(src_idx)
    order = np.lexsort((src, steps))
    steps, cells, src = steps[order], cells[order], src[order]
    n = len(steps)

    # uniform position inside the cell, uniform time inside the step
    x = (cells[:, 1] + rng.random(n)) * g.cell_size_m
    y = (cells[:, 0] + rng.random(n)) * g.cell_size_m
    lat, lon = unproject(x, y, g) if n else (np.empty(0), np.empty(0))
    secs = np.floor((steps + rng.random(n)) * g.time_step_s)

    # customers: one pool per source, sized for ~68 events per customer-year
    per_customer = EVENTS_PER_CUSTOMER_YEAR * n_days / 365.0
    profiles, cust = [], np.empty(n, dtype=object)
    for k, (name, cells_k, c) in enumerate(sources):
        sel = np.flatnonzero(src == k)
        if sel.size == 0:
            continue
        pool = max(1, int(round(sel.size / per_customer)))
        mean = c.income_mean if c is not None else scenario.background_income_mean
        incomes = _income(rng, mean, pool)
        ages = rng.integers(18, 80, pool)
        edu = rng.integers(0, 9, pool)
        home_cells = cells_k[rng.integers(0, len(cells_k), pool)]
        work_cells = all_cells[rng.integers(0, len(all_cells), pool)]
        hlat, hlon = unproject((home_cells[:, 1] + 0.5) * g.cell_size_m,
                               (home_cells[:, 0] + 0.5) * g.cell_size_m, g)
        wlat, wlon = unproject((work_cells[:, 1] + 0.5) * g.cell_size_m,
                               (work_cells[:, 0] + 0.5) * g.cell_size_m, g)
        ids = [f"{name[:3].upper()}{i:05d}" for i in range(pool)]
        for i in range(pool):
            profiles.append(CustomerProfile(ids[i], float(incomes[i]), int(ages[i]), int(edu[i]),
                                            (float(hlat[i]), float(hlon[i])),
                                            (float(wlat[i]), float(wlon[i]))))
        cust[sel] = np.array(ids, dtype=object)[rng.integers(0, pool, sel.size)]

    amounts = np.round(rng.lognormal(3.5, 1.0, n), 2)
    online = rng.random(n) < scenario.online_fraction
    expense = rng.choice(["grocery", "restaurant", "retail", "fuel", "service"], n)
    events = []
    for i in range(n):
        ts = epoch + timedelta(seconds=float(secs[i]))
        r, c = int(cells[i, 0]), int(cells[i, 1])
        events.append(Event(str(cust[i]), ts.astimezone(timezone.utc), float(amounts[i]),
                            f"S{r:04d}{c:04d}", float(lat[i]), float(lon[i]), bool(online[i]),
                            str(expense[i]), "TRY"))

    truth = {"seed": seed, "grid": asdict(g), "clusters": []}
    for k, (name, cells_k, c) in enumerate(sources[:-1]):
        truth["clusters"].append({
            "name": name, "kind": c.kind, "radius": c.radius, "center": list(c.center),
            "schedule": c.schedule if c.schedule == "always" else [list(t) for t in c.schedule],
            "income_mean": c.income_mean, "cells": cells_k.tolist(),
            "n_events": int(np.count_nonzero(src == k))})
    names = [s[0] for s in sources]
    return SyntheticData(scenario, events, profiles, truth, [names[k] for k in src])


def truth_mask(cluster: dict, truth_grid: GridSpec, spec: GridSpec) -> np.ndarray:
    """Ground-truth disc of one cluster mapped onto another grid via cell centres."""
    from .geo_grid import project, to_cells

    cells = np.asarray(cluster["cells"], dtype=float).reshape(-1, 2)
    lat, lon = unproject((cells[:, 1] + 0.5) * truth_grid.cell_size_m,
                         (cells[:, 0] + 0.5) * truth_grid.cell_size_m, truth_grid)
    x, y = project(np.atleast_1d(lat), np.atleast_1d(lon), spec)
    rows, cols, inside = to_cells(x, y, spec)
    mask = np.zeros(spec.shape, dtype=bool)
    mask[rows[inside], cols[inside]] = True
    return mask


def pipeline_config_text(scenario: SyntheticScenario, events="events.csv",
                         profiles="profiles.csv", seed: int | None = None) -> str:
    """Flat config for running the pipeline on a generated scenario."""
    b = scenario.bbox
    return "\n".join([
        "# generated alongside the synthetic scenario",
        f"events = {events}",
        f"profiles = {profiles}",
        f"cell_size_m = {scenario.cell_size_m}",
        f"time_step_s = {scenario.time_step_s}",
        "eps_cells = 10",
        "intensity = 1.0",
        "top_radius_frac = 0.5",
        "delta_permanent = 0.01",
        "delta_intermittent = 0.15",
        f"tau_permanent_candidates = {','.join(map(str, TAU_GRID))}",
        f"tau_intermittent_candidates = {','.join(map(str, TAU_GRID))}",
        "objective = contrast",
        "min_area = 300",
        f"bbox = {b[0]!r},{b[1]!r},{b[2]!r},{b[3]!r}",
        f"timezone_offset = {scenario.tz_offset_h}",
        f"period = {scenario.period_start.isoformat()}/{scenario.period_end.isoformat()}",
        *([f"seed = {seed}"] if seed is not None else []),
        "",
    ])


def write_synthetic(data: SyntheticData, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"events": out / "events.csv", "profiles": out / "profiles.csv",
             "truth": out / "ground_truth.json", "scenario": out / "scenario.json",
             "config": out / "pipeline.cfg"}
    write_events(data.events, paths["events"])
    write_profiles(data.profiles, paths["profiles"])
    write_json(data.truth, paths["truth"])
    write_json(data.scenario.to_json(), paths["scenario"])
    paths["config"].write_text(pipeline_config_text(data.scenario, seed=data.truth.get("seed")))
    return paths


def load_scenario(path) -> SyntheticScenario:
    return SyntheticScenario.from_json(json.loads(Path(path).read_text()))
