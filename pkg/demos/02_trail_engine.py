# %% [markdown]
# Marks and evaporation
#
# Every event drops a truncated cone of intensity on the grid. Each step the
# whole trail loses a fixed amount, clamped at zero, so isolated marks fade
# while repeated activity piles up.

# %%
import numpy as np

from stigspot.geo_grid import GridSpec
from stigspot.trail import EvaporationSpec, MarkSpec, TrailField, cone_value, run, step

mark = MarkSpec()  # 1 km wide, flat top out to 500 m
print("cone profile", [round(float(cone_value(d, mark)), 2) for d in range(0, 12)])

# %% A single deposit seen at the end of a day and the end of a slot
g = GridSpec(41.0, 29.0, 41, 41)
for delta, n_steps in ((0.01, 72), (0.15, 6)):
    t = run(g, [20], [20], [0], (0, n_steps), mark, EvaporationSpec(delta))
    print(f"delta={delta}: peak after {n_steps - 1} steps = {t.max:.4f}")

# %% Two marks 10 cells apart merge, 21 apart stay separate
for gap in (10, 21):
    t = run(GridSpec(41.0, 29.0, 41, 60), [20, 20], [15, 15 + gap], [0, 0], (0, 1), mark,
            EvaporationSpec(0.01))
    row = t.values[20] > 0
    print(f"gap {gap}: {np.count_nonzero(np.diff(row.astype(int)) == 1)} run(s) above zero")

# %% Stepping by hand gives the same field as run()
rng = np.random.default_rng(0)
rows, cols, steps = rng.integers(0, 41, 50), rng.integers(0, 41, 50), rng.integers(0, 10, 50)
evap = EvaporationSpec(0.15)
trail = TrailField.zeros(g)
for s in range(10):
    here = steps == s
    trail = step(trail, list(zip(rows[here], cols[here])), mark, evap)
print("step == run:", np.array_equal(trail.values,
                                     run(g, rows, cols, steps, (0, 10), mark, evap).values))
