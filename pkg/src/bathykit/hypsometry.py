"""Depth-band volume/area tables and survey summary statistics.

A band ``[lower, upper)`` is a horizontal layer of water between two depth
planes. Its volume is the water inside that layer and its area is the
horizontal area where the bottom lies deeper than ``lower``. With this
reading the layer volumes add up to the total water volume and the
shallowest band's area equals the whole mapped area.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import DepthGrid


class EmptyGrid(ValueError):
    pass


@dataclass(frozen=True)
class BandRow:
    lower_m: float
    upper_m: float
    volume_m3: float
    area_m2: float

    def __post_init__(self):
        if not self.lower_m < self.upper_m:
            raise ValueError(f"band lower {self.lower_m} >= upper {self.upper_m}")
        if self.volume_m3 < 0 or self.area_m2 < 0:
            raise ValueError("band volume and area must be non-negative")


@dataclass(frozen=True)
class SurveySummary:
    total_volume_m3: float
    mapped_area_m2: float
    mean_depth_m: float
    max_depth_m: float


def band_table(grid: DepthGrid, interval_m: float = 1.0) -> list[BandRow]:
    """Layer volume and bottom area for bands of ``interval_m`` thickness.

    Bands run from 0 to ``ceil(max_depth / interval_m)`` intervals.
    The first band's area counts every valid cell, zero-depth ones
    included, so it equals the mapped area; deeper bands count cells with
    ``depth > lower``.
    """
    if not interval_m > 0:
        raise ValueError("interval_m must be positive")
    d = grid.valid_depths()
    if d.size == 0:
        raise EmptyGrid("grid has no valid cells")
    a = grid.cell_area
    n_bands = max(1, math.ceil(float(d.max()) / interval_m))
    rows = []
    for k in range(n_bands):
        lower = k * interval_m
        upper = (k + 1) * interval_m
        layer = np.clip(d - lower, 0.0, upper - lower)
        volume = a * math.fsum(layer.tolist())
        count = d.size if k == 0 else int(np.count_nonzero(d > lower))
        rows.append(BandRow(lower, upper, volume, count * a))
    return rows


def summary(grid: DepthGrid) -> SurveySummary:
    d = grid.valid_depths()
    if d.size == 0:
        raise EmptyGrid("grid has no valid cells")
    volume = grid.cell_area * math.fsum(d.tolist())
    area = d.size * grid.cell_area
    return SurveySummary(volume, area, volume / area, float(d.max()))


def summary_from_bands(rows: Sequence[BandRow], max_depth_m: float) -> SurveySummary:
    """Rebuild the summary from a published band table.

    Total volume is the sum of layer volumes and the mapped area is the
    first band's area. The table does not carry the maximum depth, so it
    is passed in.
    """
    if not rows:
        raise EmptyGrid("no band rows")
    volume = math.fsum(r.volume_m3 for r in rows)
    area = rows[0].area_m2
    return SurveySummary(volume, area, volume / area, max_depth_m)


CSV_COLUMNS = ("lower", "upper", "volume", "area")


def report(rows: Sequence[BandRow], s: SurveySummary | None = None, fmt: str = "csv") -> str:
    """Serialise a band table (and summary) as ``csv``, ``text`` or ``json``.

    Volumes, areas and band bounds carry two decimals; nothing is rounded
    before this point.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([f"{r.lower_m:.2f}", f"{r.upper_m:.2f}",
                        f"{r.volume_m3:.2f}", f"{r.area_m2:.2f}"])
        return buf.getvalue()
    if fmt == "json":
        doc = {"bands": [{k: round(v, 2) for k, v in zip(CSV_COLUMNS, (
            r.lower_m, r.upper_m, r.volume_m3, r.area_m2))} for r in rows]}
        if s is not None:
            doc["summary"] = {
                "total_volume_m3": round(s.total_volume_m3, 2),
                "mapped_area_m2": round(s.mapped_area_m2, 2),
                "mean_depth_m": round(s.mean_depth_m, 4),
                "max_depth_m": round(s.max_depth_m, 4),
            }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        lines = []
        if rows:
            lines.append(f"{'Lower (m)':>10} {'Upper (m)':>10} {'Volume (m3)':>14} {'Area (m2)':>14}")
            for r in rows:
                lines.append(f"{r.lower_m:10.2f} {r.upper_m:10.2f} "
                             f"{r.volume_m3:14.2f} {r.area_m2:14.2f}")
            lines.append("")
        if s is not None:
            lines += [
                f"Total Volume: {s.total_volume_m3:.0f} m3",
                f"Total Mapped Area: {s.mapped_area_m2:.0f} m2",
                f"Average Depth: {s.mean_depth_m:.1f} m",
                f"Maximum Depth: {s.max_depth_m:.2f} m",
            ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report_json(text: str) -> tuple[list[BandRow], SurveySummary | None]:
    doc = json.loads(text)
    rows = [BandRow(b["lower"], b["upper"], b["volume"], b["area"]) for b in doc["bands"]]
    s = doc.get("summary")
    return rows, (SurveySummary(**s) if s else None)


def parse_report_csv(text: str) -> list[BandRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"CSV header must be {','.join(CSV_COLUMNS)}")
    return [BandRow(float(r["lower"]), float(r["upper"]), float(r["volume"]), float(r["area"]))
            for r in reader]


# Water volume table published for the Powai Lake survey, 1 m bands.
POWAI_BANDS = (
    BandRow(0.0, 1.0, 1651393.27, 1765845.00),
    BandRow(1.0, 2.0, 1143354.21, 1407421.00),
    BandRow(2.0, 3.0, 657685.43, 857950.00),
    BandRow(3.0, 4.0, 290903.70, 485206.00),
    BandRow(4.0, 5.0, 37717.81, 91768.00),
    BandRow(5.0, 6.0, 1911.85, 12448.00),
)
POWAI_TOTAL_VOLUME_M3 = 3782966.0
POWAI_MAPPED_AREA_M2 = 1765845.0
POWAI_MEAN_DEPTH_M = 2.1
POWAI_MAX_DEPTH_M = 5.83
