# %% [markdown]
# From trail to hotspots
#
# Cells above a fraction tau of the snapshot maximum form the hotspot mask;
# 8-connected groups of those cells are regions. Jaccard compares masks.

# %%
import numpy as np

from stigspot.geo_grid import GridSpec
from stigspot.hotspots import ThresholdSpec, extract, intersect_masks, jaccard, jaccard_matrix
from stigspot.trail import EvaporationSpec, MarkSpec, run

g = GridSpec(41.0, 29.0, 80, 80)
rng = np.random.default_rng(1)
centres = np.array([(20, 20), (20, 60), (60, 40)])
pick = rng.integers(0, 3, 300)
rows = np.clip(centres[pick, 0] + rng.normal(0, 3, 300).round(), 0, 79).astype(int)
cols = np.clip(centres[pick, 1] + rng.normal(0, 3, 300).round(), 0, 79).astype(int)
trail = run(g, rows, cols, rng.integers(0, 72, 300), (0, 72), MarkSpec(), EvaporationSpec(0.01))

# %% Raising tau shrinks the mask; scaling the trail does not change it
for tau in (0.2, 0.5, 0.8):
    hs = extract(trail, ThresholdSpec(tau))
    print(f"tau={tau}: {len(hs)} regions, {hs.area} cells, areas {[r.area for r in hs.regions]}")

# %% Jaccard between two days and across a week
masks = []
for day in range(7):
    keep = rng.random(300) < 0.7
    t = run(g, rows[keep], cols[keep], np.zeros(keep.sum(), int), (0, 1), MarkSpec(),
            EvaporationSpec(0.01))
    masks.append(extract(t, ThresholdSpec(0.5)).mask)
print("day 0 vs day 1:", round(jaccard(masks[0], masks[1]), 3))
print("matrix diagonal", np.diag(jaccard_matrix(masks)))
print("cells hot on every day:", int(intersect_masks(masks).sum()))
