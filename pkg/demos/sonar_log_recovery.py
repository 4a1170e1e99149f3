# %% [markdown]
# Recovering a damaged sonar log
#
# Write a short survey log, lose its index, flip one byte, and see what the
# reader reports and what the index rebuild recovers.

# %%
import tempfile
from pathlib import Path

import numpy as np

from bathykit.sonarlog import (CrcMismatch, PingRecord, SurveyHeader, idx_path,
                               pack_index, read_survey, rebuild_index, son_path, write_survey)

rng = np.random.default_rng(1)
d = Path(tempfile.mkdtemp(prefix="sonlog_"))
pings = [PingRecord(200 * i, 191356667 + 30 * i, 728956667, 9000, 150,
                    int(200 + 50 * np.sin(i / 5)), 200, 0,
                    bytes(rng.integers(0, 256, 64, dtype=np.uint8))) for i in range(40)]
write_survey(SurveyHeader(device_name="demo"), [pings], d)
son = son_path(d, 0)
print(f"{son.name}: {son.stat().st_size} bytes, {len(pings)} records")

# %%
# The index can always be regenerated from the record stream.
original_idx = idx_path(d, 0).read_bytes()
idx_path(d, 0).unlink()
entries = rebuild_index(son)
print("rebuilt index identical:", pack_index(entries) == original_idx)

# %%
data = bytearray(son.read_bytes())
data[12 * (37 + 64) + 20] ^= 0x04
son.write_bytes(bytes(data))
try:
    read_survey(d)
except CrcMismatch as e:
    print("reader:", e)

# %%
# Rebuilding skips the bad record and keeps the rest.
entries = rebuild_index(son)
print(f"{len(entries)} records recovered, record 12 ({pings[12].time_offset_ms} ms) missing: "
      f"{all(e.time_offset_ms != pings[12].time_offset_ms for e in entries)}")
