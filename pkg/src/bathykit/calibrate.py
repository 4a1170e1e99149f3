"""Depth calibration against a known reference and sounding extraction.

The sounder's depth error is measured where the true depth is known (a
swimming pool) as ``error = depth_sonar - depth_known`` and removed from
every later reading as a constant offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geodesy import LatLon, LocalFrame, to_local_arrays
from .sonarlog import DOWN_BEAMS, SONAR, PingRecord

# Sanity bound for a pool calibration, meters.
MAX_OFFSET_M = 5.0


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DepthOffset:
    error_m: float
    n_samples: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise CalibrationError("offset needs at least one sample")
        if not abs(self.error_m) < MAX_OFFSET_M:
            raise CalibrationError(f"offset {self.error_m} m exceeds +/-{MAX_OFFSET_M} m")


ZERO_OFFSET = DepthOffset(0.0, 1)


@dataclass(frozen=True)
class SurveyPoint:
    x_m: float
    y_m: float
    depth_m: float
    t_ms: int = 0

    def __post_init__(self):
        if not 0.0 <= self.depth_m <= SONAR.max_depth_m:
            raise CalibrationError(f"depth {self.depth_m} outside [0, {SONAR.max_depth_m}]")


@dataclass(frozen=True)
class QualityFilter:
    min_depth_m: float = 0.0
    max_depth_m: float = SONAR.max_depth_m
    dedup_radius_m: float = 0.5


def compute_offset(pairs: Iterable[tuple[float, float]]) -> DepthOffset:
    """Mean of ``sonar - known`` over calibration pairs.

    The mean is the least-squares estimate of a constant bias; with a
    single pair it is the plain difference.
    """
    pairs = list(pairs)
    if not pairs:
        raise CalibrationError("no calibration pairs")
    for sonar, known in pairs:
        if sonar < 0 or known < 0:
            raise CalibrationError(f"negative depth in pair ({sonar}, {known})")
    diffs = [sonar - known for sonar, known in pairs]
    return DepthOffset(math.fsum(diffs) / len(diffs), len(diffs))


def apply_calibration(raw_depth_m: float, off: DepthOffset) -> tuple[float, bool]:
    """Return ``(calibrated_depth, clamped)``; negative results clamp to 0."""
    if raw_depth_m < 0:
        raise CalibrationError(f"raw depth {raw_depth_m} < 0")
    d = raw_depth_m - off.error_m
    if d < 0.0:
        return 0.0, True
    return d, False


def extract_soundings(
    pings: Sequence[PingRecord],
    off: DepthOffset = ZERO_OFFSET,
    frame: LocalFrame | None = None,
    quality: QualityFilter = QualityFilter(),
    stats: dict | None = None,
) -> list[SurveyPoint]:
    """Turn down-beam pings into calibrated soundings in ``frame``.

    Side-scan and down-imaging pings are ignored, as are pings without a
    position fix (lat and lon both zero). A ping within ``dedup_radius_m``
    of an already kept sounding is dropped; the earlier one wins.
    If ``frame`` is None, the first usable ping becomes the origin.
    If ``stats`` is given it is filled with per-reason drop counts.
    """
    counts = {"input": len(pings), "not_down_beam": 0, "no_fix": 0,
              "depth_filter": 0, "duplicate": 0, "clamped": 0}
    usable = []
    for p in pings:
        if p.beam_id not in DOWN_BEAMS:
            counts["not_down_beam"] += 1
        elif p.lat_e7 == 0 and p.lon_e7 == 0:
            counts["no_fix"] += 1
        else:
            usable.append(p)
    if not usable:
        if stats is not None:
            stats.update(counts, output=0)
        return []

    if frame is None:
        frame = LocalFrame(LatLon(usable[0].lat_deg, usable[0].lon_deg))
    xs, ys = to_local_arrays(
        [p.lat_e7 / 1e7 for p in usable], [p.lon_e7 / 1e7 for p in usable], frame
    )

    r = quality.dedup_radius_m
    cells: dict[tuple[int, int], list[tuple[float, float]]] = {}
    out = []
    for p, x, y in zip(usable, xs.tolist(), ys.tolist()):
        depth, clamped = apply_calibration(p.depth_cm / 100.0, off)
        counts["clamped"] += clamped
        if not quality.min_depth_m <= depth <= quality.max_depth_m:
            counts["depth_filter"] += 1
            continue
        if r > 0:
            cx, cy = math.floor(x / r), math.floor(y / r)
            near = any(
                (qx - x) ** 2 + (qy - y) ** 2 <= r * r
                for i in (-1, 0, 1)
                for j in (-1, 0, 1)
                for qx, qy in cells.get((cx + i, cy + j), ())
            )
            if near:
                counts["duplicate"] += 1
                continue
            cells.setdefault((cx, cy), []).append((x, y))
        out.append(SurveyPoint(x, y, depth, p.time_offset_ms))
    counts["output"] = len(out)
    if stats is not None:
        stats.update(counts)
    return out


def soundings_array(points: Sequence[SurveyPoint]) -> np.ndarray:
    """Stack soundings into an ``(n, 3)`` array of ``x, y, depth``."""
    return np.array([(p.x_m, p.y_m, p.depth_m) for p in points], dtype=float).reshape(-1, 3)
