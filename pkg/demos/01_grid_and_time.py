# %% [markdown]
# Spatial grid and discrete time
#
# Events live on a 100 m grid anchored at the south-west corner of the study
# area, and on 20-minute time steps counted from an epoch.

# %%
from datetime import datetime, timedelta, timezone

import numpy as np

from stigspot.geo_grid import (GridSpec, OutOfBounds, haversine_m, project, to_cell,
                               to_time_index, unproject)

g = GridSpec.from_bbox(41.0, 28.9, 41.2, 29.2)
print("grid", g.shape, "origin", (g.origin_lat, g.origin_lon))

# %% Projection: a point about 100 m east and north of the origin
lat, lon = g.origin_lat + 0.0009, g.origin_lon + 0.0012
x, y = project(lat, lon, g)
print(f"x={x:.2f} m  y={y:.2f} m  great circle={haversine_m(g.origin_lat, g.origin_lon, lat, lon):.2f} m")
print("cell", to_cell(x, y, g))
print("back", unproject(x, y, g))

# %% Cells outside the grid are an error, not a silent clip
try:
    to_cell(-1.0, 0.0, g)
except OutOfBounds as e:
    print("rejected:", e)

# %% Time steps
epoch = datetime(2014, 9, 1, tzinfo=timezone(timedelta(hours=3)))
for minutes in (0, 19, 20, 24 * 60):
    print(minutes, "min ->", to_time_index(epoch + timedelta(minutes=minutes), epoch, g))

# %% Projection error grows with distance from the origin
d = np.linspace(0, 0.2, 5)
x, y = project(g.origin_lat + d, g.origin_lon + d, g)
ref = haversine_m(g.origin_lat, g.origin_lon, g.origin_lat + d, g.origin_lon + d)
print("relative error", np.round(np.hypot(x, y)[1:] / ref[1:] - 1, 5))
