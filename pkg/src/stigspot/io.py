"""Reading event/profile CSVs and writing analysis artifacts.

Exports:
  * heatmap: ``row,col,value`` CSV of non-zero cells, optional 16-bit PGM
  * mask: GeoJSON polygons per region plus ``region,row,col`` CSV
  * matrix: square CSV with labels as header row and first column
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from shapely.geometry import box, mapping
from shapely.ops import unary_union

from .behavior import CustomerProfile
from .geo_grid import GridSpec, unproject
from .hotspots import HotspotSet, label_regions

EVENT_FIELDS = ("customer_id", "timestamp", "amount", "shop_id", "lat", "lon", "online",
                "expense_type", "currency")
PROFILE_FIELDS = ("customer_id", "income", "age", "education", "home_lat", "home_lon",
                  "work_lat", "work_lon")

REJECT_REASONS = ("missing_field", "bad_timestamp", "bad_coordinate", "online", "out_of_area")

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n", ""}


@dataclass(frozen=True)
class Event:
    customer_id: str
    timestamp: datetime  # tz-aware, UTC
    amount: float
    shop_id: str
    lat: float
    lon: float
    online: bool = False
    expense_type: str = ""
    currency: str = ""


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_kept: int = 0
    rejections: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {"rows_read": self.rows_read, "rows_kept": self.rows_kept,
                "rejections": {r: self.rejections.get(r, 0) for r in REJECT_REASONS}}

    @property
    def reconciles(self) -> bool:
        return self.rows_read == self.rows_kept + sum(self.rejections.values())


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 instant; naive values are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def iter_events(path, columns: dict[str, str] | None = None, bbox=None, delimiter=",",
                report: IngestReport | None = None):
    """Stream valid events from a CSV file.

    ``columns`` maps event field names to header names in the file (missing
    entries default to the field name). ``bbox`` is ``(lat_min, lon_min,
    lat_max, lon_max)``; rows outside it are rejected as ``out_of_area``.
    Online transactions are rejected as ``online``. Rejections are counted in
    ``report``.

    Raises:
        FileNotFoundError: if ``path`` does not exist.
        ValueError: if a required column is absent from the header.
    """
    columns = dict(columns or {})
    report = report if report is not None else IngestReport()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"events file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        pos = {name.strip(): i for i, name in enumerate(header)}
        col = {}
        for f in EVENT_FIELDS:
            name = columns.get(f, f)
            if name in pos:
                col[f] = pos[name]
            elif f in ("customer_id", "timestamp", "lat", "lon"):
                raise ValueError(f"{path}: malformed header, required column {name!r} "
                                 f"(field {f}) not found in {header}")
        for row in reader:
            if not row:
                continue
            report.rows_read += 1
            ev = _parse_row(row, col, bbox, report)
            if ev is not None:
                report.rows_kept += 1
                yield ev


def _parse_row(row, col, bbox, report) -> Event | None:
    def get(f, default=""):
        i = col.get(f)
        if i is None:
            return default
        return row[i] if i < len(row) else None

    cid, ts_text = get("customer_id"), get("timestamp")
    if cid is None or ts_text is None or get("lat") is None or get("lon") is None:
        report.rejections["missing_field"] += 1
        return None
    try:
        ts = parse_timestamp(ts_text)
    except ValueError:
        report.rejections["bad_timestamp"] += 1
        return None
    try:
        online = _parse_bool(get("online", "false") or "false")
    except ValueError:
        online = False
    if online:
        report.rejections["online"] += 1
        return None
    try:
        lat, lon = _float(get("lat")), _float(get("lon"))
        if abs(lat) > 90 or abs(lon) > 180:
            raise ValueError("range")
    except (TypeError, ValueError):
        report.rejections["bad_coordinate"] += 1
        return None
    if bbox is not None:
        lat_min, lon_min, lat_max, lon_max = bbox
        if not (lat_min <= lat <= lat_max and lon_min <= lon <= lon_max):
            report.rejections["out_of_area"] += 1
            return None
    amount_text = get("amount", "") or ""
    try:
        amount = float(amount_text) if amount_text.strip() else float("nan")
    except ValueError:
        amount = float("nan")
    return Event(cid, ts, amount, get("shop_id", "") or "", lat, lon, False,
                 get("expense_type", "") or "", get("currency", "") or "")


def ingest_events(path, columns=None, bbox=None, delimiter=",") -> tuple[list[Event], IngestReport]:
    report = IngestReport()
    events = list(iter_events(path, columns, bbox, delimiter, report))
    return events, report


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, datetime):
        return format_timestamp(v)
    return "" if v is None else str(v)


def write_events(events, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_FIELDS)
        for e in events:
            w.writerow([_fmt(getattr(e, f)) for f in EVENT_FIELDS])


def events_to_arrays(events):
    """``(lat, lon, posix_seconds)`` arrays for a list of events."""
    lat = np.array([e.lat for e in events], dtype=float)
    lon = np.array([e.lon for e in events], dtype=float)
    t = np.array([e.timestamp.timestamp() for e in events], dtype=float)
    return lat, lon, t


def write_profiles(profiles, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_FIELDS)
        for p in profiles:
            home = p.home or (None, None)
            work = p.work or (None, None)
            w.writerow([_fmt(v) for v in (p.customer_id, p.income, p.age, p.education,
                                          home[0], home[1], work[0], work[1])])


def read_profiles(path) -> dict[str, CustomerProfile]:
    def opt(a, b):
        if a.strip() and b.strip():
            return (float(a), float(b))
        return None

    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            p = CustomerProfile(r["customer_id"], float(r["income"]), float(r["age"]),
                                int(r["education"]), opt(r["home_lat"], r["home_lon"]),
                                opt(r["work_lat"], r["work_lon"]))
            out[p.customer_id] = p
    return out


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- heatmaps ----------------------------------------------------------------

def export_heatmap_csv(values: np.ndarray, path):
    rows, cols = np.nonzero(values)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "col", "value"))
        for r, c in zip(rows.tolist(), cols.tolist()):
            w.writerow((r, c, repr(float(values[r, c]))))


def export_heatmap_pgm(values: np.ndarray, path):
    """Binary 16-bit PGM scaled so the snapshot maximum is 65535.

    Row 0 of the grid is the southern edge, so it becomes the last image row.
    """
    peak = float(values.max()) if values.size else 0.0
    if peak > 0:
        scaled = np.rint(values / peak * 65535.0)
    else:
        scaled = np.zeros(values.shape)
    img = np.flipud(scaled).astype(">u2")
    h, w = img.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    pix = np.frombuffer(parts[4], dtype=dtype, count=w * h).reshape(h, w)
    return np.flipud(pix)


# --- masks ---------------------------------------------------------------------

def region_polygons(hs: HotspotSet):
    """Shapely geometry (projected metres) of each region, cells merged."""
    cs = hs.spec.cell_size_m
    out = []
    for reg in hs.regions:
        out.append(unary_union([box(c0 * cs, r * cs, c1 * cs, (r + 1) * cs)
                                for r, c0, c1 in _row_runs(reg.cells)]))
    return out


def _row_runs(cells: np.ndarray):
    """Maximal horizontal runs ``(row, col_start, col_stop)`` of a cell list."""
    if not len(cells):
        return []
    rc = cells[np.lexsort((cells[:, 1], cells[:, 0]))]
    brk = np.flatnonzero((np.diff(rc[:, 0]) != 0) | (np.diff(rc[:, 1]) != 1)) + 1
    starts = np.r_[0, brk]
    stops = np.r_[brk, len(rc)]
    return [(int(rc[a, 0]), int(rc[a, 1]), int(rc[b - 1, 1]) + 1) for a, b in zip(starts, stops)]


def _to_lonlat(geom, spec: GridSpec):
    from shapely.ops import transform

    def fn(x, y, z=None):
        lat, lon = unproject(np.asarray(x), np.asarray(y), spec)
        return lon, lat

    return transform(fn, geom)


def mask_geojson(hs: HotspotSet, properties: dict | None = None) -> dict:
    feats = []
    for reg, geom in zip(hs.regions, region_polygons(hs)):
        props = {"region": reg.label, "area_cells": reg.area}
        props.update(properties or {})
        feats.append({"type": "Feature", "properties": props,
                      "geometry": mapping(_to_lonlat(geom, hs.spec))})
    return {"type": "FeatureCollection", "features": feats}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def export_mask_geojson(hs: HotspotSet, path, properties=None):
    write_json(_jsonable(mask_geojson(hs, properties)), path)


def export_collection_geojson(items, path):
    """One FeatureCollection from several ``(HotspotSet, properties)`` pairs."""
    feats = []
    for hs, props in items:
        feats.extend(mask_geojson(hs, props)["features"])
    write_json(_jsonable({"type": "FeatureCollection", "features": feats}), path)


def export_mask_csv(hs: HotspotSet, path, extra: dict | None = None, append=False):
    extra = extra or {}
    p = Path(path)
    new = not (append and p.exists())
    with p.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(list(extra) + ["region", "row", "col"])
        for reg in hs.regions:
            for r, c in reg.cells.tolist():
                w.writerow(list(extra.values()) + [reg.label, r, c])


def read_mask_csv(path, spec: GridSpec) -> HotspotSet:
    mask = np.zeros(spec.shape, dtype=bool)
    with Path(path).open(newline="") as fh:
        for r in csv.DictReader(fh):
            mask[int(r["row"]), int(r["col"])] = True
    m, regions = label_regions(mask)
    return HotspotSet(spec, m, regions)


# --- matrices ------------------------------------------------------------------

def export_matrix_csv(labels, values: np.ndarray, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [str(l) for l in labels])
        for lab, row in zip(labels, values):
            w.writerow([str(lab)] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    vals = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
    if [r[0] for r in rows[1:]] != labels:
        raise ValueError("row labels do not match column labels")
    return labels, vals.reshape(len(labels), len(labels))


def dataclass_row(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}
