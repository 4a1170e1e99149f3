# %% [markdown]
# Hypsometry of a published lake survey
#
# The band table below is the one reported for Powai lake, Mumbai. We rebuild
# the volume, mapped area and mean depth from it and print the three report
# formats the toolkit writes.

# %%
import math

from bathykit.hypsometry import POWAI_BANDS, report, summary_from_bands

for row in POWAI_BANDS:
    print(f"{row.lower_m:4.0f}-{row.upper_m:<4.0f} area {row.area_m2:10.0f} m2  volume {row.volume_m3:12.2f} m3")

# %%
# A band's area is the bed area deeper than its shallow boundary, so band 0
# carries the whole mapped area. Volumes add up to the lake total.
total = math.fsum(r.volume_m3 for r in POWAI_BANDS)
s = summary_from_bands(POWAI_BANDS, max_depth_m=5.83)
print(f"sum of band volumes {total:.2f} m3, mean depth {total / s.mapped_area_m2:.3f} m")

# %%
print(report(POWAI_BANDS, s, "text"))
print(report(POWAI_BANDS, s, "csv"))
