# %% [markdown]
# Permanent and intermittent hotspots on a synthetic fortnight
#
# A small scenario with one always-on cluster and one weekday-evening
# cluster. Permanent areas are hot on every day; once their events are
# removed, the rest is analysed per 2-hour slot.

# %%
from datetime import date

import numpy as np

from stigspot.hotspots import ThresholdSpec
from stigspot.pipeline import AnalysisConfig, analyze, index_events, tune_thresholds
from stigspot.synthetic import PlantedCluster, SyntheticScenario, generate

evening = tuple(("weekday", s) for s in (8, 9, 10))
sc = SyntheticScenario(41.0, 29.0, 80, 80, date(2014, 9, 1), date(2014, 9, 15),
                       (PlantedCluster("perm", (22, 22), 12, 8.0),
                        PlantedCluster("eve", (56, 56), 12, 12.0, evening)),
                       background_rate=0.3, tz_offset_h=3)
data = generate(sc, seed=3)
print(len(data.events), "events")

# %% Index events onto the grid
ts = np.array([e.timestamp.timestamp() for e in data.events])
lat = np.array([e.lat for e in data.events])
lon = np.array([e.lon for e in data.events])
cfg = AnalysisConfig(sc.grid, sc.period_start, sc.period_end, tz_offset_h=3,
                     tau_permanent=ThresholdSpec(0.2, 100), tau_intermittent=ThresholdSpec(0.35, 100))
ev, dropped = index_events(lat, lon, ts, cfg)
print(len(ev), "indexed, dropped", dropped)

# %% Run the chain
res = analyze(ev, cfg)
print("permanent regions:", len(res.permanent.hotspots), "cells", res.permanent.hotspots.area)
print("events removed inside them:", res.n_removed)
print("distinct intermittent regions:", len(res.recurring))
# the small one is background noise that happened to recur; min_area and the
# consensus fraction decide how much of that survives
for reg in res.recurring.regions:
    print("  centre", reg.cells.mean(axis=0).round(1), "area", reg.area)

# %% The evening disc at (56, 56) only lights up in its slots. A relative
# threshold always finds something, so quiet slots still show noise.
eve = np.zeros(sc.grid.shape, bool)
eve[tuple(np.array(data.truth["clusters"][1]["cells"]).T)] = True
for (d, tt), hs in sorted(res.intermittent.items(), key=lambda kv: (kv[0][0], kv[0][1].slot)):
    if d == date(2014, 9, 2) and tt.slot in (6, 7, 8, 9, 10, 11):
        print(f"  {d} slot {tt.slot:2d}: {len(hs)} regions, {int((hs.mask & eve).sum())} cells on the disc")

# %% Same-slot occurrences look alike, different slots less so
intra, inter = res.matrix.tuple_stats()
print(f"intra-tuple {intra:.3f}  inter-tuple {inter:.3f}")

# %% Threshold sweep. On a two-week toy the objective is noisy; the planted
# month in 06_files_and_cli.py is the calibrated case.
grid = [(a, b) for a in (0.2, 0.5) for b in (0.2, 0.35, 0.5)]
tr = tune_thresholds(ev, cfg, grid, objective="contrast")
for row in tr.table:
    print(row)
print("chosen", (tr.tau_permanent, tr.tau_intermittent))
