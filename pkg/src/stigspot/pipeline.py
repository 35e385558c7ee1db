"""Permanent / intermittent hotspot procedure.

1. One trail per local calendar day (slow evaporation); a cell is a
   permanent hotspot if it is above threshold on *every* day.
2. Events inside the permanent mask are dropped.
3. One trail per 2-hour slot occurrence (fast evaporation) on what is left;
   each occurrence gets its own hotspot set. Occurrences are grouped into
   (day type, slot) tuples; thresholds are picked by maximizing the
   similarity between occurrences of the same tuple within a month.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta, timezone
from itertools import combinations

import numpy as np

from .geo_grid import GridSpec, project, to_cells
from .hotspots import (HotspotSet, ThresholdSpec, hotspot_set, intersect_masks,
                       drop_small, jaccard_matrix, jaccard_matrix_from_cells, threshold_mask)
from .trail import EvaporationSpec, MarkSpec, TrailField, run

log = logging.getLogger(__name__)

WEEKDAY = "weekday"
WEEKEND = "weekend"
SLOTS_PER_DAY = 12
SLOT_SECONDS = 7200
DAY_SECONDS = 86400


@dataclass(frozen=True, order=True)
class TemporalTuple:
    day_type: str
    slot: int

    def __post_init__(self):
        if self.day_type not in (WEEKDAY, WEEKEND):
            raise ValueError(f"unknown day type {self.day_type!r}")
        if not 0 <= self.slot < SLOTS_PER_DAY:
            raise ValueError(f"slot must be in [0, {SLOTS_PER_DAY}), got {self.slot}")

    @property
    def hours(self) -> tuple[int, int]:
        return (2 * self.slot, 2 * self.slot + 2)


def all_tuples() -> list[TemporalTuple]:
    return [TemporalTuple(d, s) for d in (WEEKDAY, WEEKEND) for s in range(SLOTS_PER_DAY)]


def classify_day(d: date, tz_offset_h: float = 0.0) -> str:
    """Weekend for local Saturday/Sunday, weekday otherwise.

    ``d`` is already a local calendar date, so the offset does not change the
    answer; it is accepted for datetimes, which are converted first.
    """
    if isinstance(d, datetime):
        if d.tzinfo is not None:
            d = d.astimezone(timezone(timedelta(hours=tz_offset_h)))
        d = d.date()
    return WEEKEND if d.weekday() >= 5 else WEEKDAY


@dataclass(frozen=True)
class AnalysisConfig:
    grid: GridSpec
    period_start: date
    period_end: date  # exclusive
    mark: MarkSpec = MarkSpec()
    evap_permanent: EvaporationSpec = EvaporationSpec(0.01)
    evap_intermittent: EvaporationSpec = EvaporationSpec(0.15)
    tau_permanent: ThresholdSpec = ThresholdSpec(0.5)
    tau_intermittent: ThresholdSpec = ThresholdSpec(0.5)
    tz_offset_h: float = 0.0
    consensus: float = 0.5

    def __post_init__(self):
        if (self.period_end - self.period_start).days < 1:
            raise ValueError("period must cover at least one full day")
        self.evap_permanent.check_against(self.mark)
        self.evap_intermittent.check_against(self.mark)
        for span in (DAY_SECONDS, SLOT_SECONDS):
            ratio = span / self.grid.time_step_s
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"time_step_s={self.grid.time_step_s} does not divide {span} s")
        if not 0 < self.consensus <= 1:
            raise ValueError(f"consensus must be in (0, 1], got {self.consensus}")

    @property
    def tz(self) -> timezone:
        return timezone(timedelta(hours=self.tz_offset_h))

    @property
    def epoch(self) -> datetime:
        return datetime.combine(self.period_start, time(0), tzinfo=self.tz)

    @property
    def steps_per_day(self) -> int:
        return round(DAY_SECONDS / self.grid.time_step_s)

    @property
    def steps_per_slot(self) -> int:
        return round(SLOT_SECONDS / self.grid.time_step_s)

    @property
    def n_days(self) -> int:
        return (self.period_end - self.period_start).days

    @property
    def dates(self) -> list[date]:
        return [self.period_start + timedelta(days=i) for i in range(self.n_days)]

    def with_taus(self, tau_p: float, tau_i: float) -> "AnalysisConfig":
        return replace(self,
                       tau_permanent=replace(self.tau_permanent, tau=tau_p),
                       tau_intermittent=replace(self.tau_intermittent, tau=tau_i))


@dataclass(frozen=True, eq=False)
class IndexedEvents:
    """Events reduced to grid coordinates. ``ids`` points back to the source rows."""

    rows: np.ndarray
    cols: np.ndarray
    steps: np.ndarray
    ids: np.ndarray

    def __len__(self):
        return len(self.ids)

    def subset(self, keep: np.ndarray) -> "IndexedEvents":
        return IndexedEvents(self.rows[keep], self.cols[keep], self.steps[keep], self.ids[keep])

    @classmethod
    def empty(cls) -> "IndexedEvents":
        z = np.empty(0, np.int64)
        return cls(z, z, z, z)


def index_events(lat, lon, epoch_seconds, cfg: AnalysisConfig):
    """Map coordinates and POSIX timestamps onto grid cells and time steps.

    Returns ``(IndexedEvents, counts)`` where counts reports events dropped
    for falling outside the grid or the analysis period.
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    t = np.asarray(epoch_seconds, dtype=float)
    if lat.size == 0:
        return IndexedEvents.empty(), {"outside_grid": 0, "outside_period": 0}
    x, y = project(lat, lon, cfg.grid)
    rows, cols, inside = to_cells(np.atleast_1d(x), np.atleast_1d(y), cfg.grid)
    rel = t - cfg.epoch.timestamp()
    steps = np.floor(rel / cfg.grid.time_step_s).astype(np.int64)
    in_period = (rel >= 0) & (steps < cfg.n_days * cfg.steps_per_day)
    keep = inside & in_period
    counts = {"outside_grid": int(np.count_nonzero(~inside)),
              "outside_period": int(np.count_nonzero(inside & ~in_period))}
    ids = np.flatnonzero(keep)
    return IndexedEvents(rows[keep], cols[keep], steps[keep], ids), counts


def _split_by_window(ev: IndexedEvents, width: int, n: int) -> list[IndexedEvents]:
    order = np.argsort(ev.steps, kind="stable")
    s = ev.steps[order]
    bounds = np.searchsorted(s, np.arange(n + 1) * width)
    return [ev.subset(order[bounds[i]:bounds[i + 1]]) for i in range(n)]


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def daily_trails(ev: IndexedEvents, cfg: AnalysisConfig, workers: int = 1) -> list[TrailField]:
    """End-of-day trail for every day of the period."""
    spd = cfg.steps_per_day
    chunks = _split_by_window(ev, spd, cfg.n_days)

    def one(i):
        c = chunks[i]
        return run(cfg.grid, c.rows, c.cols, c.steps, (i * spd, (i + 1) * spd),
                   cfg.mark, cfg.evap_permanent)

    return _map(one, range(cfg.n_days), workers)


@dataclass(frozen=True, eq=False)
class PermanentResult:
    hotspots: HotspotSet
    daily_masks: list[np.ndarray]
    empty_days: list[date] = field(default_factory=list)


def detect_permanent(ev: IndexedEvents, cfg: AnalysisConfig, workers: int = 1,
                     trails: list[TrailField] | None = None) -> PermanentResult:
    """Cells above threshold on every day of the period.

    Per-day masks are thresholded without the area filter; ``min_area`` is
    applied once to the intersection.
    """
    if trails is None:
        trails = daily_trails(ev, cfg, workers)
    masks = [threshold_mask(t.values, cfg.tau_permanent.tau) for t in trails]
    empty_days = [d for d, t in zip(cfg.dates, trails) if t.max <= 0]
    if empty_days:
        log.warning("%d day(s) without events; permanent set will be empty", len(empty_days))
    inter = intersect_masks(masks)
    hs = hotspot_set(inter, cfg.grid, cfg.tau_permanent.min_area)
    return PermanentResult(hs, masks, empty_days)


def remove_in_mask(ev: IndexedEvents, mask: np.ndarray) -> tuple[IndexedEvents, int]:
    """Drop events whose cell is inside ``mask``; returns (kept, n_removed)."""
    if len(ev) == 0:
        return ev, 0
    inside = mask[ev.rows, ev.cols]
    return ev.subset(~inside), int(np.count_nonzero(inside))


@dataclass(frozen=True, order=True)
class Occurrence:
    """One concrete 2-hour slot on one calendar date."""

    date: date
    slot: int
    day_type: str

    @property
    def tuple(self) -> TemporalTuple:
        return TemporalTuple(self.day_type, self.slot)

    @property
    def month(self) -> tuple[int, int]:
        return (self.date.year, self.date.month)

    @property
    def label(self) -> str:
        return f"{self.date.isoformat()}/{self.slot:02d}"


def occurrences(cfg: AnalysisConfig) -> list[Occurrence]:
    return [Occurrence(d, s, classify_day(d)) for d in cfg.dates for s in range(SLOTS_PER_DAY)]


def slot_trails(ev: IndexedEvents, cfg: AnalysisConfig, workers: int = 1):
    """Yield ``(Occurrence, TrailField)`` for every slot occurrence, in order."""
    sps = cfg.steps_per_slot
    occ = occurrences(cfg)
    chunks = _split_by_window(ev, sps, len(occ))

    def one(i):
        c = chunks[i]
        return run(cfg.grid, c.rows, c.cols, c.steps, (i * sps, (i + 1) * sps),
                   cfg.mark, cfg.evap_intermittent)

    # batch so memory stays bounded by a day's worth of trails per worker
    batch = max(workers, 1) * SLOTS_PER_DAY
    for start in range(0, len(occ), batch):
        idx = range(start, min(start + batch, len(occ)))
        for i, tr in zip(idx, _map(one, idx, workers)):
            yield occ[i], tr


def detect_intermittent(ev: IndexedEvents, cfg: AnalysisConfig,
                        workers: int = 1) -> dict[tuple[date, TemporalTuple], HotspotSet]:
    """Hotspots of every slot occurrence; expects permanent-area events removed."""
    th = cfg.tau_intermittent
    out = {}
    for o, tr in slot_trails(ev, cfg, workers):
        out[(o.date, o.tuple)] = hotspot_set(threshold_mask(tr.values, th.tau), cfg.grid,
                                             th.min_area)
    return out


def _as_occurrence(key) -> Occurrence:
    if isinstance(key, Occurrence):
        return key
    d, tt = key
    if isinstance(tt, TemporalTuple):
        return Occurrence(d, tt.slot, tt.day_type)
    return Occurrence(d, int(tt), classify_day(d))


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    labels: list[Occurrence]
    values: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError(f"matrix shape {self.values.shape} does not match {n} labels")

    def tuple_stats(self) -> tuple[float, float]:
        return tuple_similarity(self.labels, self.values)


def similarity_matrix(occ_sets: dict) -> SimilarityMatrix:
    """Jaccard between every pair of slot occurrences, labels in chronological order.

    Keys may be :class:`Occurrence`, ``(date, TemporalTuple)`` or ``(date, slot)``.
    """
    items = sorted(((_as_occurrence(k), v) for k, v in occ_sets.items()),
                   key=lambda kv: (kv[0].date, kv[0].slot))
    labels = [k for k, _ in items]
    vals = jaccard_matrix([v for _, v in items])
    return SimilarityMatrix(labels, vals)


def _groups(labels: list[Occurrence]) -> dict:
    g = defaultdict(list)
    for i, o in enumerate(labels):
        g[(o.month, o.tuple)].append(i)
    return g


def intra_tuple_similarity(labels, values) -> float:
    """Mean same-tuple Jaccard per (month, tuple), averaged over groups of >= 2.

    Raises:
        ValueError: if no tuple occurs twice within a month.
    """
    scores = []
    for idx in _groups(labels).values():
        if len(idx) < 2:
            continue
        sub = values[np.ix_(idx, idx)]
        iu = np.triu_indices(len(idx), k=1)
        scores.append(float(sub[iu].mean()))
    if not scores:
        raise ValueError("no temporal tuple occurs at least twice within a month")
    return float(np.mean(scores))


def inter_tuple_similarity(labels, values) -> float:
    """Mean cross-tuple Jaccard per pair of tuple groups in the same month."""
    by_month = defaultdict(list)
    for (month, _), idx in _groups(labels).items():
        by_month[month].append(idx)
    scores = [float(values[np.ix_(a, b)].mean())
              for groups in by_month.values() for a, b in combinations(groups, 2)]
    if not scores:
        raise ValueError("need at least two temporal tuples within a month")
    return float(np.mean(scores))


def tuple_similarity(labels, values) -> tuple[float, float]:
    return intra_tuple_similarity(labels, values), inter_tuple_similarity(labels, values)


OBJECTIVES = ("intra", "contrast")


def tuning_objective(labels, values, kind: str = "intra") -> float:
    if kind == "intra":
        return intra_tuple_similarity(labels, values)
    if kind == "contrast":
        intra, inter = tuple_similarity(labels, values)
        return intra - inter
    raise ValueError(f"unknown objective {kind!r}; expected one of {OBJECTIVES}")


def recurring_regions(occ_sets: dict, cfg: AnalysisConfig) -> HotspotSet:
    """Consolidate per-occurrence hotspots into distinct intermittent regions.

    Within each (month, tuple) with at least two occurrences a cell is kept if
    it is a hotspot in at least ``cfg.consensus`` of them; the union over
    tuples is then split into regions.
    """
    items = [(_as_occurrence(k), v) for k, v in occ_sets.items()]
    groups = defaultdict(list)
    for o, hs in items:
        groups[(o.month, o.tuple)].append(hs.mask)
    union = np.zeros(cfg.grid.shape, dtype=bool)
    for masks in groups.values():
        if len(masks) < 2:
            continue
        votes = np.sum(masks, axis=0)
        union |= votes >= cfg.consensus * len(masks) - 1e-12
    return hotspot_set(union, cfg.grid, cfg.tau_intermittent.min_area)


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    cfg: AnalysisConfig
    permanent: PermanentResult
    n_removed: int
    residual: IndexedEvents
    intermittent: dict
    recurring: HotspotSet
    matrix: SimilarityMatrix


def analyze(ev: IndexedEvents, cfg: AnalysisConfig, workers: int = 1,
            trails: list[TrailField] | None = None) -> AnalysisResult:
    perm = detect_permanent(ev, cfg, workers, trails)
    residual, n_removed = remove_in_mask(ev, perm.hotspots.mask)
    inter = detect_intermittent(residual, cfg, workers)
    return AnalysisResult(cfg, perm, n_removed, residual, inter,
                          recurring_regions(inter, cfg), similarity_matrix(inter))


@dataclass(frozen=True, eq=False)
class TuningResult:
    tau_permanent: float
    tau_intermittent: float
    table: list[dict]  # one row per candidate: tau_p, tau_i, objective, n_permanent


def tune_thresholds(ev: IndexedEvents, cfg: AnalysisConfig, candidates,
                    objective: str = "intra", workers: int = 1) -> TuningResult:
    """Grid sweep over ``(tau_p, tau_i)`` pairs.

    Each pair runs the full permanent -> removal -> intermittent chain. The
    best objective wins; ties go to the larger tau_p, then the larger tau_i.
    """
    candidates = [(float(a), float(b)) for a, b in candidates]
    if not candidates:
        raise ValueError("candidate list is empty")
    for a, b in candidates:
        if not (0 < a < 1 and 0 < b < 1):
            raise ValueError(f"candidate thresholds must lie in (0, 1), got {(a, b)}")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")

    trails = daily_trails(ev, cfg, workers)
    by_tau_p = defaultdict(list)
    for a, b in candidates:
        by_tau_p[a].append(b)

    scores = {}
    seen = {}  # permanent mask bytes -> {tau_i: objective}
    for tau_p, tau_is in by_tau_p.items():
        c = cfg.with_taus(tau_p, tau_is[0])
        perm = detect_permanent(ev, c, trails=trails)
        key = np.packbits(perm.hotspots.mask).tobytes()
        done = seen.setdefault(key, {})
        todo = sorted(set(tau_is) - set(done))
        if todo:
            done.update(_slot_objectives(ev, perm.hotspots.mask, c, todo, objective, workers))
        for b in tau_is:
            scores[(tau_p, b)] = (done[b], len(perm.hotspots))

    table = [{"tau_permanent": a, "tau_intermittent": b, "objective": scores[(a, b)][0],
              "n_permanent": scores[(a, b)][1]} for a, b in candidates]
    best = max(candidates, key=lambda ab: (scores[ab][0], ab[0], ab[1]))
    return TuningResult(best[0], best[1], table)


def _slot_objectives(ev, perm_mask, cfg, tau_is, objective, workers) -> dict[float, float]:
    residual, _ = remove_in_mask(ev, perm_mask)
    # slot trails do not depend on tau_i: threshold each one for every candidate
    cells = {b: [] for b in tau_is}
    labels = []
    for o, tr in slot_trails(residual, cfg, workers):
        labels.append(o)
        for b in tau_is:
            m = drop_small(threshold_mask(tr.values, b), cfg.tau_intermittent.min_area)
            cells[b].append(np.flatnonzero(m))
    n_cells = cfg.grid.n_rows * cfg.grid.n_cols
    return {b: tuning_objective(labels, jaccard_matrix_from_cells(cells[b], n_cells), objective)
            for b in tau_is}


def grid_for_events(lat, lon, cell_size_m=100.0, time_step_s=1200.0, pad_cells=0) -> GridSpec:
    """Grid covering the events' bounding box plus ``pad_cells`` on each side."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if lat.size == 0:
        raise ValueError("cannot size a grid from zero events")
    return GridSpec.from_bbox(float(lat.min()), float(lon.min()), float(lat.max()),
                              float(lon.max()), cell_size_m, time_step_s,
                              int(math.ceil(pad_cells)))
