# %% [markdown]
# Files and the command line
#
# Generate a planted month, then drive the whole pipeline through the CLI.
# Equivalent shell commands:
#
#     stigspot generate --out gen --seed 7
#     stigspot run --config gen/pipeline.cfg --out run --threads 1
#     stigspot export heatmap --config gen/pipeline.cfg --out run --date 2014-09-06 --format pgm
#
# The full month takes about half a minute on one core.

# %%
import json
import sys
import tempfile
from pathlib import Path

from stigspot.cli import main

root = Path(tempfile.mkdtemp(prefix="stigspot-"))
assert main(["generate", "--out", str(root / "gen"), "--seed", "7"]) == 0
print(sorted(p.name for p in (root / "gen").iterdir()))

# %%
if "--full" in sys.argv:
    cfg = str(root / "gen" / "pipeline.cfg")
    assert main(["run", "--config", cfg, "--out", str(root / "run")]) == 0
    m = json.loads((root / "run" / "manifest.json").read_text())
    print("regions", m["counts"]["n_permanent_regions"], m["counts"]["n_intermittent_regions"])
    print("tau", m["analysis"]["tau_permanent"], m["analysis"]["tau_intermittent"])
    print("income", {k: v["mean_income"] for k, v in m["population"].items()})
    assert main(["export", "heatmap", "--config", cfg, "--out", str(root / "run"),
                 "--date", "2014-09-06", "--format", "pgm"]) == 0
    print(sorted(p.name for p in (root / "run").iterdir()))
else:
    print("pass --full to run the pipeline on", root / "gen")
