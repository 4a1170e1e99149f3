# %% [markdown]
# A full survey of a synthetic basin
#
# Plan a lawnmower over a 400 m x 300 m box, fly it with the simulated boat
# over a paraboloid lake bed, then read the logs back, triangulate and grid
# the soundings and compare the volume with the closed form.

# %%
import sys
import tempfile
from pathlib import Path

import numpy as np

from bathykit import LatLon, TruthField, SimConfig, run_survey, read_survey
from bathykit import compute_offset, extract_soundings, delaunay, rasterize
from bathykit import band_table, report, summary
from bathykit.grid import write_asc, write_pgm
from bathykit.mission import lawnmower

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="basin_"))
box = [(0, 0), (400, 0), (400, 300), (0, 300)]
truth = TruthField("paraboloid", {"cx": 200.0, "cy": 150.0, "rx": 200.0, "ry": 150.0, "max_depth": 5.83})

# %%
plan = lawnmower(box, spacing_m=40.0, heading_deg=0.0, margin_m=5.0)
print(f"{len(plan.waypoints)} waypoints, {plan.path_length():.0f} m of track")

# %%
cfg = SimConfig(truth=truth, seed=7)
res = run_survey(plan, cfg=cfg, out_dir=out / "survey")
print(f"{res.n_pings} pings, {res.elapsed_s / 60:.1f} min on the water, completed={res.completed}")
track = res.track
print(f"track spans x {track[:, 1].min():.0f}..{track[:, 1].max():.0f} m, "
      f"y {track[:, 2].min():.0f}..{track[:, 2].max():.0f} m")

# %%
# Calibrate against a handful of spot depths. Here the "lead line" readings
# come from the truth field itself, so the offset should be near zero.
_, channels = read_survey(out / "survey")
pings = channels[0]
frame = cfg.frame()
pairs = []
for p in pings[::500]:
    q = frame.to_local(LatLon(p.lat_deg, p.lon_deg))
    pairs.append((p.depth_m, float(truth.depth(q.x_m, q.y_m))))
offset = compute_offset(pairs)
print(f"offset {offset.error_m:+.3f} m from {offset.n_samples} pairs")

# %%
points = extract_soundings(pings, offset, frame)
tri = delaunay(points)
grid = rasterize(tri, box, cell_m=2.0)
rows = band_table(grid, 1.0)
s = summary(grid)
write_asc(grid, out / "depth.asc")
write_pgm(grid, out / "depth.pgm")
(out / "bands.csv").write_text(report(rows, s, "csv"))
print(report(rows, s, "text"))

# %%
exact = truth.paraboloid_volume()
print(f"volume {s.total_volume_m3:.0f} m3 against {exact:.0f} m3 ({100 * (s.total_volume_m3 / exact - 1):+.2f}%)")
print(f"deepest cell {s.max_depth_m:.2f} m against 5.83 m")
print(f"outputs in {out}")

# %%
# Coarse depth picture, one character per 20 m.
shades = " .:-=+*#%@"
X, Y = grid.centers()
for j in range(grid.depths.shape[0] - 1, -1, -10):
    line = ""
    for i in range(0, grid.depths.shape[1], 10):
        line += shades[min(int(grid.depths[j, i] / 6.0 * 9), 9)] if grid.mask[j, i] else " "
    print(line)
