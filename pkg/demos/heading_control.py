# %% [markdown]
# Heading loop of the survey boat
#
# A 90 degree step in commanded heading, then one straight transect flown with
# noisy GNSS to see how far the boat strays from the line.

# %%
from dataclasses import replace

import numpy as np

from bathykit.asvsim import NoiseConfig, SimConfig, TruthField, heading_step_response, run_survey
from bathykit.geodesy import PlanarPoint
from bathykit.mission import MissionPlan, Waypoint

t, h = heading_step_response(90.0, duration_s=30.0)
for ts in (0.5, 1, 2, 3, 4, 5, 6, 8, 10, 20):
    print(f"t={ts:5.1f} s  heading {h[np.searchsorted(t, ts)]:6.2f} deg")
outside = np.nonzero(np.abs(h - 90) > 1.8)[0]
print(f"within 2% after {t[outside[-1] + 1]:.1f} s, peak {h.max():.2f} deg")

# %%
pts = np.array([(0.0, 0.0), (0.0, 200.0)])
plan = MissionPlan(pts, [Waypoint(PlanarPoint(*p)) for p in pts], spacing_m=1.0, heading_deg=0.0)
for sigma in (0.5, 1.0, 2.0):
    cfg = SimConfig(truth=TruthField("flat", {"depth": 2.0}), seed=3,
                    noise=replace(NoiseConfig(), gnss_sigma_m=sigma))
    tr = run_survey(plan, cfg=cfg).track
    leg = tr[(tr[:, 2] > 30) & (tr[:, 2] < 197)]
    print(f"GNSS sigma {sigma:.1f} m: max cross-track {np.abs(leg[:, 1]).max():.2f} m, "
          f"rms {np.sqrt(np.mean(leg[:, 1] ** 2)):.2f} m")
