"""Customer purchase-distance traits and hotspot population reports.

The purchase distance of an event is the great-circle distance from the
shop to the nearer of the customer's home and workplace. Its per-customer
mean says how far a customer travels to shop ("exploratory"), its sample
standard deviation how much that varies ("erratic").
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .geo_grid import haversine_m

PERMANENT = "permanent"
INTERMITTENT = "intermittent"
NEITHER = "neither"
HOTSPOT_TYPES = (PERMANENT, INTERMITTENT, NEITHER)

LatLon = tuple[float, float]


@dataclass(frozen=True)
class CustomerProfile:
    customer_id: str
    income: float
    age: float
    education: int  # 0 unknown, 1 none ... 8 PhD
    home: LatLon | None = None
    work: LatLon | None = None

    def __post_init__(self):
        if self.education not in range(9):
            raise ValueError(f"education must be in 0..8, got {self.education}")
        if self.income < 0:
            raise ValueError(f"income must be >= 0, got {self.income}")
        if not self.age > 0:
            raise ValueError(f"age must be > 0, got {self.age}")


@dataclass(frozen=True)
class PurchaseDistanceRecord:
    customer_id: str
    event_id: int
    dist_m: float


@dataclass(frozen=True)
class TraitSummary:
    customer_id: str
    avg_dist_m: float
    std_dist_m: float | None  # None with fewer than two records
    n_events: int


def purchase_distance(profile: CustomerProfile, shop: LatLon) -> float | None:
    """Distance in metres from ``shop`` to the nearer of home and work.

    Falls back to whichever anchor is known; None when neither is.
    """
    anchors = [a for a in (profile.home, profile.work) if a is not None]
    if not anchors:
        return None
    return min(float(haversine_m(a[0], a[1], shop[0], shop[1])) for a in anchors)


def purchase_distances(profiles: dict[str, CustomerProfile], customer_ids, lats, lons,
                       event_ids=None) -> tuple[list[PurchaseDistanceRecord], int]:
    """Records for every event whose customer has at least one anchor.

    Returns the records and the number of events skipped (no profile or no
    anchor).
    """
    if event_ids is None:
        event_ids = range(len(customer_ids))
    records, skipped = [], 0
    for cid, lat, lon, eid in zip(customer_ids, lats, lons, event_ids):
        p = profiles.get(cid)
        d = purchase_distance(p, (lat, lon)) if p is not None else None
        if d is None:
            skipped += 1
            continue
        records.append(PurchaseDistanceRecord(cid, int(eid), d))
    return records, skipped


def traits(records) -> TraitSummary | None:
    """Mean and sample standard deviation of one customer's purchase distances."""
    records = list(records)
    if not records:
        return None
    d = np.array([r.dist_m for r in records], dtype=float)
    std = float(d.std(ddof=1)) if len(d) >= 2 else None
    return TraitSummary(records[0].customer_id, float(d.mean()), std, len(d))


def traits_by_customer(records) -> dict[str, TraitSummary]:
    grouped = defaultdict(list)
    for r in records:
        grouped[r.customer_id].append(r)
    return {cid: traits(rs) for cid, rs in sorted(grouped.items())}


@dataclass(frozen=True, eq=False)
class PopulationReport:
    """Per hotspot type: one row per distinct customer plus summary stats."""

    rows: dict[str, list[dict]]
    mean_income: dict[str, float | None]
    n_events: dict[str, int]
    n_unknown: dict[str, int]  # events by customers without a profile

    def summary(self) -> dict:
        return {t: {"customers": len(self.rows[t]), "events": self.n_events[t],
                    "unknown_customer_events": self.n_unknown[t],
                    "mean_income": self.mean_income[t]} for t in HOTSPOT_TYPES}


def assign_types(rows, cols, occ_index, permanent_mask, intermittent_masks) -> np.ndarray:
    """Hotspot type of every event.

    ``occ_index[k]`` is the key into ``intermittent_masks`` for event k's
    (date, slot); permanent membership wins over intermittent.
    """
    out = np.full(len(rows), NEITHER, dtype=object)
    for k, (r, c, key) in enumerate(zip(rows, cols, occ_index)):
        if permanent_mask[r, c]:
            out[k] = PERMANENT
        else:
            m = intermittent_masks.get(key)
            if m is not None and m[r, c]:
                out[k] = INTERMITTENT
    return out


def hotspot_population_report(customer_ids, types, profiles: dict[str, CustomerProfile],
                              trait_map: dict[str, TraitSummary]) -> PopulationReport:
    """Demographics of the distinct customers who purchased in each hotspot type.

    ``types`` gives each event's hotspot type (see :func:`assign_types`).
    Traits are the customer's overall purchase-distance traits.
    """
    seen = {t: set() for t in HOTSPOT_TYPES}
    n_events = Counter()
    n_unknown = Counter()
    for cid, t in zip(customer_ids, types):
        n_events[t] += 1
        if cid not in profiles:
            n_unknown[t] += 1
            continue
        seen[t].add(cid)
    rows, mean_income = {}, {}
    for t in HOTSPOT_TYPES:
        rows[t] = []
        for cid in sorted(seen[t]):
            p = profiles[cid]
            tr = trait_map.get(cid)
            rows[t].append({"customer_id": cid, "education": p.education, "income": p.income,
                            "age": p.age,
                            "avg_dist_m": tr.avg_dist_m if tr else None,
                            "std_dist_m": tr.std_dist_m if tr else None})
        incomes = [r["income"] for r in rows[t]]
        mean_income[t] = float(math.fsum(incomes) / len(incomes)) if incomes else None
    return PopulationReport(rows, mean_income, {t: n_events[t] for t in HOTSPOT_TYPES},
                            {t: n_unknown[t] for t in HOTSPOT_TYPES})
