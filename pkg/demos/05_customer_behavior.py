# %% [markdown]
# Purchase distance and customer traits
#
# A purchase's distance is the shorter of shop-to-home and shop-to-work on
# the sphere. Per customer, the mean says how far they roam and the standard
# deviation how erratic they are.

# %%
import numpy as np

from stigspot.behavior import (INTERMITTENT, PERMANENT, CustomerProfile, assign_types,
                               hotspot_population_report, purchase_distances, traits_by_customer)

profiles = {
    "homebody": CustomerProfile("homebody", 2500.0, 52, 2, (41.00, 29.00), None),
    "commuter": CustomerProfile("commuter", 6200.0, 31, 5, (41.00, 29.00), (41.08, 29.10)),
}
rng = np.random.default_rng(5)
cust = ["homebody"] * 20 + ["commuter"] * 20
lat = np.r_[41.0 + rng.normal(0, 0.005, 20), 41.04 + rng.normal(0, 0.03, 20)]
lon = np.r_[29.0 + rng.normal(0, 0.005, 20), 29.05 + rng.normal(0, 0.04, 20)]

records, skipped = purchase_distances(profiles, cust, lat, lon)
for cid, t in traits_by_customer(records).items():
    print(f"{cid:9s} avg {t.avg_dist_m:7.0f} m  std {t.std_dist_m:7.0f} m  n={t.n_events}")

# %% Who shops where: permanent cells win over intermittent ones
perm = np.zeros((4, 4), bool)
perm[0, 0] = True
inter = {"slot": np.ones((4, 4), bool)}
rows = cols = np.array([0] * 20 + [1] * 20)
types = assign_types(rows, cols, ["slot"] * 40, perm, inter)
rep = hotspot_population_report(cust, types, profiles, traits_by_customer(records))
for kind in (PERMANENT, INTERMITTENT):
    print(kind, rep.summary()[kind])
