"""End-to-end run: ingest, (optionally) tune, detect, report, export."""

from __future__ import annotations

import csv
import logging
import time
from datetime import datetime, timedelta, timezone
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import behavior, io
from .config import ConfigError, RunConfig
from .geo_grid import GridSpec
from .hotspots import ThresholdSpec
from .pipeline import (AnalysisConfig, IndexedEvents, TemporalTuple, analyze,
                       classify_day, grid_for_events, index_events, tune_thresholds)
from .trail import EvaporationSpec

log = logging.getLogger(__name__)

DEFAULT_TAU = 0.5


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class _Stages:
    timings: dict = field(default_factory=dict)
    current: str = ""

    def __call__(self, name):
        self.current = name
        return self

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.current] = round(time.perf_counter() - self._t0, 3)
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.current, str(exc)) from exc
        return False


@dataclass(frozen=True, eq=False)
class LoadedData:
    events: list
    report: io.IngestReport
    lat: np.ndarray
    lon: np.ndarray
    t: np.ndarray
    profiles: dict


def load_inputs(cfg: RunConfig) -> LoadedData:
    if cfg.events is None:
        raise ConfigError("config has no 'events' path")
    events, report = io.ingest_events(cfg.events, cfg.columns, cfg.bbox, cfg.delimiter)
    lat, lon, t = io.events_to_arrays(events)
    profiles = io.read_profiles(cfg.profiles) if cfg.profiles is not None else {}
    return LoadedData(events, report, lat, lon, t, profiles)


def analysis_config(cfg: RunConfig, data: LoadedData, tau_p=None, tau_i=None) -> AnalysisConfig:
    if data.lat.size:
        grid = grid_for_events(data.lat, data.lon, cfg.cell_size_m, cfg.time_step_s,
                               cfg.pad_cells)
    elif cfg.bbox is not None:
        grid = GridSpec.from_bbox(*cfg.bbox, cfg.cell_size_m, cfg.time_step_s)
    else:
        grid = GridSpec(0.0, 0.0, 1, 1, cfg.cell_size_m, cfg.time_step_s)
    if cfg.period is not None:
        start, end = cfg.period
    elif len(data.events):
        local = [e.timestamp.timestamp() + cfg.timezone_offset * 3600 for e in data.events]
        start = datetime.fromtimestamp(min(local), tz=timezone.utc).date()
        end = datetime.fromtimestamp(max(local), tz=timezone.utc).date() + timedelta(days=1)
    else:
        raise ConfigError("no events and no period configured")
    tau_p = tau_p if tau_p is not None else (cfg.tau_permanent or DEFAULT_TAU)
    tau_i = tau_i if tau_i is not None else (cfg.tau_intermittent or DEFAULT_TAU)
    return AnalysisConfig(
        grid, start, end, cfg.mark, EvaporationSpec(cfg.delta_permanent),
        EvaporationSpec(cfg.delta_intermittent), ThresholdSpec(tau_p, cfg.min_area),
        ThresholdSpec(tau_i, cfg.min_area), cfg.timezone_offset, cfg.consensus)


def occurrence_keys(ev: IndexedEvents, acfg: AnalysisConfig) -> list:
    """(date, TemporalTuple) of every indexed event."""
    dates = acfg.dates
    day = ev.steps // acfg.steps_per_day
    slot = (ev.steps % acfg.steps_per_day) // acfg.steps_per_slot
    return [(dates[d], TemporalTuple(classify_day(dates[d]), int(s)))
            for d, s in zip(day.tolist(), slot.tolist())]


def write_tuning_table(table, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tau_permanent", "tau_intermittent", "objective", "n_permanent"))
        for r in table:
            w.writerow((repr(r["tau_permanent"]), repr(r["tau_intermittent"]),
                        repr(float(r["objective"])), r["n_permanent"]))


def tune(cfg: RunConfig, data: LoadedData, workers=1):
    """Sweep the configured candidates; returns ``(TuningResult, AnalysisConfig, events)``."""
    acfg = analysis_config(cfg, data)
    ev, _ = index_events(data.lat, data.lon, data.t, acfg)
    result = tune_thresholds(ev, acfg, cfg.candidates, cfg.objective, workers)
    return result, acfg, ev


def run_pipeline(cfg: RunConfig, out_dir, workers: int = 1) -> dict:
    """Execute the whole chain and write all artifacts into ``out_dir``.

    Returns the run manifest (also written as ``manifest.json``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = _Stages()
    warnings = []

    with stage("ingest"):
        data = load_inputs(cfg)
    if not data.events:
        warnings.append("no valid events; outputs are empty")
        log.warning(warnings[-1])

    tuning = None
    with stage("tune"):
        if cfg.wants_sweep and data.events:
            tuning, acfg, _ = tune(cfg, data, workers)
            io.write_json({"tau_permanent": tuning.tau_permanent,
                           "tau_intermittent": tuning.tau_intermittent,
                           "objective": cfg.objective}, out / "tuned.json")
            write_tuning_table(tuning.table, out / "tuning.csv")
    with stage("index"):
        acfg = analysis_config(cfg, data, tuning and tuning.tau_permanent,
                               tuning and tuning.tau_intermittent)
        ev, drop_counts = index_events(data.lat, data.lon, data.t, acfg)
    with stage("detect"):
        res = analyze(ev, acfg, workers)
    if res.permanent.empty_days:
        warnings.append(f"{len(res.permanent.empty_days)} day(s) without events; "
                        "permanent set is empty")

    with stage("report"):
        keys = occurrence_keys(ev, acfg)
        inter_masks = {k: hs.mask for k, hs in res.intermittent.items()}
        types = behavior.assign_types(ev.rows, ev.cols, keys, res.permanent.hotspots.mask,
                                      inter_masks)
        cust = [data.events[i].customer_id for i in ev.ids]
        records, skipped_dist = behavior.purchase_distances(
            data.profiles, [e.customer_id for e in data.events], data.lat, data.lon)
        traits = behavior.traits_by_customer(records)
        report = behavior.hotspot_population_report(cust, types, data.profiles, traits)

    with stage("export"):
        _export(out, res, report, acfg)

    n_active = sum(1 for hs in res.intermittent.values() if len(hs))
    manifest = {
        "parameters": cfg.as_dict(),
        "analysis": {
            "grid": {"origin_lat": acfg.grid.origin_lat, "origin_lon": acfg.grid.origin_lon,
                     "n_rows": acfg.grid.n_rows, "n_cols": acfg.grid.n_cols,
                     "cell_size_m": acfg.grid.cell_size_m,
                     "time_step_s": acfg.grid.time_step_s},
            "period": [acfg.period_start.isoformat(), acfg.period_end.isoformat()],
            "tau_permanent": acfg.tau_permanent.tau,
            "tau_intermittent": acfg.tau_intermittent.tau,
            "tuned": tuning is not None,
        },
        "seed": cfg.seed,
        "counts": {
            **data.report.as_dict(),
            "online_excluded": data.report.rejections.get("online", 0),
            "indexed": len(ev), **drop_counts,
            "removed_in_permanent": res.n_removed,
            "residual": len(res.residual),
            "n_permanent_regions": len(res.permanent.hotspots),
            "n_intermittent_regions": len(res.recurring),
            "n_occurrences": len(res.intermittent),
            "n_occurrences_with_hotspots": n_active,
            "distance_records": len(records),
            "distance_skipped": skipped_dist,
        },
        "population": report.summary(),
        "similarity": _matrix_summary(res.matrix),
        "warnings": warnings,
        "timings": stage.timings,
    }
    io.write_json(manifest, out / "manifest.json")
    return manifest


def _matrix_summary(m):
    try:
        intra, inter = m.tuple_stats()
    except ValueError:
        return {"intra_tuple": None, "inter_tuple": None}
    return {"intra_tuple": intra, "inter_tuple": inter}


def _export(out: Path, res, report, acfg):
    io.export_mask_geojson(res.permanent.hotspots, out / "permanent_regions.geojson",
                           {"kind": "permanent"})
    io.export_mask_csv(res.permanent.hotspots, out / "permanent_cells.csv")
    io.export_mask_geojson(res.recurring, out / "intermittent_regions.geojson",
                           {"kind": "intermittent"})
    io.export_mask_csv(res.recurring, out / "intermittent_regions.csv")

    items = sorted(res.intermittent.items(), key=lambda kv: (kv[0][0], kv[0][1].slot))
    io.export_collection_geojson(
        [(hs, {"date": d.isoformat(), "slot": tt.slot, "day_type": tt.day_type})
         for (d, tt), hs in items if len(hs)],
        out / "intermittent_occurrences.geojson")
    path = out / "intermittent_cells.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("date", "slot", "day_type", "region", "row", "col"))
        for (d, tt), hs in items:
            for reg in hs.regions:
                for r, c in reg.cells.tolist():
                    w.writerow((d.isoformat(), tt.slot, tt.day_type, reg.label, r, c))

    io.export_matrix_csv([o.label for o in res.matrix.labels], res.matrix.values,
                         out / "similarity_matrix.csv")

    with (out / "population_report.csv").open("w", newline="") as fh:
        cols = ("customer_id", "education", "income", "age", "avg_dist_m", "std_dist_m")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("hotspot_type",) + cols)
        for t in behavior.HOTSPOT_TYPES:
            for r in report.rows[t]:
                w.writerow([t] + [io._fmt(r[c]) for c in cols])
    io.write_json(report.summary(), out / "population_summary.json")
