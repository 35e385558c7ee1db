"""Flat ``key = value`` run configuration.

Example::

    events = events.csv
    profiles = profiles.csv
    column.customer_id = cust
    eps_cells = 10
    tau_permanent = 0.2
    tau_intermittent = 0.35
    bbox = 40.8,28.6,41.3,29.4
    period = 2014-09-01/2014-10-01
    timezone_offset = 3

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .trail import MarkSpec

_SECTION = "run"

KNOWN_KEYS = {
    "events", "profiles", "delimiter", "cell_size_m", "time_step_s", "eps_cells", "intensity",
    "top_radius_frac", "delta_permanent", "delta_intermittent", "tau_permanent",
    "tau_intermittent", "min_area", "bbox", "timezone_offset", "period",
    "tau_permanent_candidates", "tau_intermittent_candidates", "objective", "consensus",
    "grid_pad_cells", "seed", "export_pgm",
}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    events: Path | None = None
    profiles: Path | None = None
    delimiter: str = ","
    columns: dict = field(default_factory=dict)
    cell_size_m: float = 100.0
    time_step_s: float = 1200.0
    eps_cells: float = 10.0
    intensity: float = 1.0
    top_radius_frac: float = 0.5
    delta_permanent: float = 0.01
    delta_intermittent: float = 0.15
    tau_permanent: float | None = None
    tau_intermittent: float | None = None
    min_area: int = 1
    bbox: tuple[float, float, float, float] | None = None
    timezone_offset: float = 0.0
    period: tuple[date, date] | None = None
    tau_permanent_candidates: tuple[float, ...] = ()
    tau_intermittent_candidates: tuple[float, ...] = ()
    objective: str = "contrast"
    consensus: float = 0.5
    grid_pad_cells: float | None = None
    seed: int | None = None
    export_pgm: bool = False

    @property
    def mark(self) -> MarkSpec:
        return MarkSpec(self.eps_cells, self.intensity, self.top_radius_frac)

    @property
    def pad_cells(self) -> float:
        return self.eps_cells if self.grid_pad_cells is None else self.grid_pad_cells

    @property
    def wants_sweep(self) -> bool:
        return bool(self.tau_permanent_candidates and self.tau_intermittent_candidates)

    @property
    def candidates(self) -> list[tuple[float, float]]:
        return [(a, b) for a in self.tau_permanent_candidates
                for b in self.tau_intermittent_candidates]

    def as_dict(self) -> dict:
        out = {}
        for k in sorted(KNOWN_KEYS | {"columns"}):
            v = getattr(self, k)
            if isinstance(v, Path):
                v = v.name
            elif isinstance(v, tuple) and v and isinstance(v[0], date):
                v = [d.isoformat() for d in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    vals = tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _check_tau(name, v):
    if v is not None and not 0 < v <= 1:
        raise ConfigError(f"{name} must be in (0, 1], got {v}")


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    base = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#",), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config: {e}") from e
    raw = dict(cp[_SECTION])
    kw, columns = {}, {}
    try:
        for key, val in raw.items():
            val = val.strip()
            if key.startswith("column."):
                columns[key[len("column."):]] = val
            elif key not in KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            elif key in ("events", "profiles"):
                kw[key] = (base / val) if val else None
            elif key in ("delimiter", "objective"):
                kw[key] = "\t" if val == "\\t" else val
            elif key in ("min_area", "seed"):
                kw[key] = int(val)
            elif key == "export_pgm":
                kw[key] = val.lower() in ("1", "true", "yes", "on")
            elif key == "bbox":
                kw[key] = _floats(val, 4)
            elif key == "period":
                a, b = val.split("/")
                kw[key] = (date.fromisoformat(a.strip()), date.fromisoformat(b.strip()))
            elif key.endswith("_candidates"):
                kw[key] = _floats(val)
            else:
                kw[key] = float(val)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad config value: {e}") from e
    kw["columns"] = columns
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    _check_tau("tau_permanent", cfg.tau_permanent)
    _check_tau("tau_intermittent", cfg.tau_intermittent)
    for name in ("tau_permanent_candidates", "tau_intermittent_candidates"):
        for v in getattr(cfg, name):
            if not 0 < v < 1:
                raise ConfigError(f"{name} entries must be in (0, 1), got {v}")
    if cfg.objective not in ("intra", "contrast"):
        raise ConfigError(f"objective must be 'intra' or 'contrast', got {cfg.objective!r}")
    if cfg.min_area < 1:
        raise ConfigError("min_area must be >= 1")
    if cfg.bbox is not None:
        lat0, lon0, lat1, lon1 = cfg.bbox
        if lat1 < lat0 or lon1 < lon0:
            raise ConfigError("bbox must be lat_min,lon_min,lat_max,lon_max")
    if cfg.period is not None and (cfg.period[1] - cfg.period[0]).days < 1:
        raise ConfigError("period must cover at least one full day")
    if not (cfg.delta_permanent >= 0 and cfg.delta_intermittent >= 0):
        raise ConfigError("evaporation deltas must be >= 0")
    if max(cfg.delta_permanent, cfg.delta_intermittent) > cfg.intensity:
        raise ConfigError("evaporation delta exceeds mark intensity")
    try:
        cfg.mark
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent)
