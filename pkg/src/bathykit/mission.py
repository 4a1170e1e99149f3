"""Lawnmower (boustrophedon) survey planning inside a shoreline polygon.

Headings are compass bearings: 0 is north (+y), 90 is east (+x). A plan
with heading ``h`` has transects running along ``h``, stacked at exactly
``spacing_m`` apart across-track, centred in the (eroded) polygon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from .geodesy import LatLon, LocalFrame, PlanarPoint, from_local, parse_latlon, to_local
from .sonarlog import SONAR

DEFAULT_ACCEPTANCE_RADIUS_M = 3.0
DEFAULT_OVERLAP = 0.3
# Widths within this of a whole number of spacings get the extra transect;
# absorbs lat/lon round-trip error in boundary files.
WIDTH_TOL_M = 1e-3


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    position: PlanarPoint
    acceptance_radius_m: float = DEFAULT_ACCEPTANCE_RADIUS_M

    def __post_init__(self):
        if not self.acceptance_radius_m > 0:
            raise PlanningError("acceptance radius must be positive")


@dataclass
class MissionPlan:
    boundary: np.ndarray
    waypoints: list[Waypoint]
    spacing_m: float
    heading_deg: float
    cruise_speed_mps: float = 1.5
    transects: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise PlanningError("a plan needs at least two waypoints")
        if not self.spacing_m > 0:
            raise PlanningError("spacing must be positive")

    def xy(self) -> np.ndarray:
        return np.array([(w.position.x_m, w.position.y_m) for w in self.waypoints])

    def path_length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.xy(), axis=0).T)))


def swath_spacing(side_range_m: float = SONAR.side_range_m, overlap_frac: float = 0.0) -> float:
    """Transect spacing for a side-scan reaching ``side_range_m`` per side.

    ``spacing = 2 * side_range * (1 - overlap)``.
    """
    if not side_range_m > 0:
        raise PlanningError("side range must be positive")
    if not 0.0 <= overlap_frac < 1.0:
        raise PlanningError("overlap must be in [0, 1)")
    return 2.0 * side_range_m * (1.0 - overlap_frac)


def _ccw(boundary) -> np.ndarray:
    b = np.asarray(boundary, dtype=float).reshape(-1, 2)
    if len(b) > 1 and np.array_equal(b[0], b[-1]):
        b = b[:-1]
    if len(b) < 3:
        raise PlanningError("boundary needs at least 3 vertices")
    area2 = np.sum(b[:, 0] * np.roll(b[:, 1], -1) - np.roll(b[:, 0], -1) * b[:, 1])
    return b if area2 > 0 else b[::-1].copy()


def _rot(heading_deg: float) -> np.ndarray:
    """Rows are the across-track (u) and along-track (v) unit vectors."""
    h = math.radians(heading_deg)
    return np.array([[math.cos(h), -math.sin(h)], [math.sin(h), math.cos(h)]])


def lawnmower(
    boundary,
    spacing_m: float,
    heading_deg: float = 0.0,
    margin_m: float = 0.0,
    acceptance_radius_m: float = DEFAULT_ACCEPTANCE_RADIUS_M,
    cruise_speed_mps: float = 1.5,
) -> MissionPlan:
    """Plan parallel transects clipped to ``boundary`` eroded by ``margin_m``.

    ``boundary`` is a sequence of ``(x, y)`` vertices. Transect ends become
    waypoints, visited in serpentine order. If a transect line crosses a
    concave polygon more than once, every piece is kept, in along-track
    order.

    Turns follow the shore, and where the shore bulges past a transect end
    within half a spacing on a side no turn sweeps, a short shore spur is
    added (one-way at the start and end of the path, out-and-back
    elsewhere). Extra waypoints are vertices or crossings of the eroded
    polygon. ``plan.transects`` indexes the start and end of each transect.
    """
    if not spacing_m > 0:
        raise PlanningError("spacing must be positive")
    if margin_m < 0:
        raise PlanningError("margin must be non-negative")
    b = _ccw(boundary)
    poly = Polygon(b)
    if not poly.is_valid or poly.area <= 0:
        raise PlanningError("boundary polygon is degenerate or self-intersecting")

    R = _rot(heading_deg)
    uv = b @ R.T
    work = Polygon(uv)
    if margin_m > 0:
        work = work.buffer(-margin_m, join_style="mitre")
    if work.is_empty or work.area <= 0:
        raise PlanningError(f"polygon is empty after eroding by {margin_m} m")

    umin, vmin, umax, vmax = work.bounds
    width = umax - umin
    n = int(math.floor((width + WIDTH_TOL_M) / spacing_m)) + 1
    u0 = umin + 0.5 * (width - (n - 1) * spacing_m)
    clip = work.buffer(WIDTH_TOL_M, join_style="mitre")

    pieces_per_line = []
    for k in range(n):
        u = u0 + k * spacing_m
        line = LineString([(u, vmin - 1.0), (u, vmax + 1.0)])
        hit = (work if umin <= u <= umax else clip).intersection(line)
        segs = []
        for g in getattr(hit, "geoms", [hit]):
            if isinstance(g, LineString) and g.length > 0:
                vs = [c[1] for c in g.coords]
                segs.append((min(vs), max(vs)))
        segs.sort()
        if segs:
            pieces_per_line.append((u, segs))
    if not pieces_per_line:
        raise PlanningError("no transect intersects the polygon")

    legs = []
    for k, (u, segs) in enumerate(pieces_per_line):
        ordered = segs if k % 2 == 0 else [(b_, a_) for a_, b_ in reversed(segs)]
        legs += [(u, a_, b_) for a_, b_ in ordered]

    def side(i, j):
        return 0 if not 0 <= j < len(legs) else int(np.sign(legs[j][0] - legs[i][0]))

    half = 0.5 * spacing_m
    pts = []
    transects = []
    for i, (u, a_, b_) in enumerate(legs):
        start, end = (u, a_), (u, b_)
        if pts:
            pts.extend(_shore_arc(work.exterior, pts[-1], start, spacing_m))
        spurs = [sp for d in (-1, 1) if d != side(i, i - 1)
                 for sp in [_lead(work, start, b_, u + d * half, spacing_m)] if sp]
        for n, sp in enumerate(spurs):
            if i == 0 and n == 0:
                pts += sp
            else:
                pts += [start] + sp[::-1] + sp[1:]
        transects.append((len(pts), len(pts) + 1))
        pts += [start, end]
        spurs = [sp for d in (-1, 1) if d != side(i, i + 1)
                 for sp in [_lead(work, end, a_, u + d * half, spacing_m)] if sp]
        for n, sp in enumerate(spurs):
            last = i == len(legs) - 1 and n == len(spurs) - 1
            pts += sp[::-1] if last else sp[::-1] + sp[1:] + [end]
    xy = np.array(pts) @ R
    wps = [Waypoint(PlanarPoint(float(x), float(y)), acceptance_radius_m) for x, y in xy]
    if len(wps) < 2:
        raise PlanningError("plan has fewer than two waypoints")
    return MissionPlan(b, wps, spacing_m, heading_deg % 360.0, cruise_speed_mps, transects)


def _shore_arc(ring, a, b, spacing_m: float) -> list[tuple[float, float]]:
    """Ring vertices strictly between ``a`` and ``b`` along the shorter arc.

    Turns between transects follow the shoreline so the swath also covers
    the corners a straight cut would skip. Long arcs (concave shores
    between far-apart pieces) are not followed.
    """
    L = ring.length
    da = ring.project(Point(a))
    db = ring.project(Point(b))
    fwd = (db - da) % L
    back = L - fwd
    arc = min(fwd, back)
    direct = math.dist(a, b)
    if arc <= direct + 1e-9 or arc > 3.0 * max(direct, spacing_m):
        return []
    coords = np.asarray(ring.coords)[:-1]
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(np.asarray(ring.coords), axis=0).T))])[:-1]
    if fwd <= back:
        rel = (cum - da) % L
        sel = np.nonzero((rel > 1e-9) & (rel < fwd - 1e-9))[0]
        sel = sel[np.argsort(rel[sel])]
    else:
        rel = (da - cum) % L
        sel = np.nonzero((rel > 1e-9) & (rel < back - 1e-9))[0]
        sel = sel[np.argsort(rel[sel])]
    return [tuple(coords[i]) for i in sel]


def _lead(work: Polygon, end, other_v: float, u: float, spacing_m: float) -> list[tuple[float, float]]:
    """Shore path from the boundary crossing of line ``u`` to ``end``.

    ``end`` is a transect end and ``other_v`` the far end of the same
    transect, which tells which side ``end`` is on. Returns nothing when
    the shore on line ``u`` is no further out than ``end``; the swath
    already covers that corner. Points run toward ``end`` and exclude it.
    """
    umin, vmin, umax, vmax = work.bounds
    u = min(max(u, umin), umax)
    hit = work.intersection(LineString([(u, vmin - 1.0), (u, vmax + 1.0)]))
    pieces = [(min(c[1] for c in g.coords), max(c[1] for c in g.coords))
              for g in getattr(hit, "geoms", [hit]) if isinstance(g, LineString) and g.length > 0]
    if not pieces:
        return []
    lo_t, hi_t = min(end[1], other_v), max(end[1], other_v)
    lo, hi = min(pieces, key=lambda p: max(0.0, p[0] - hi_t, lo_t - p[1]))
    low = end[1] < other_v
    v = lo if low else hi
    if (v >= end[1] - 1e-6) if low else (v <= end[1] + 1e-6):
        return []
    if math.dist((u, v), end) > 3.0 * max(spacing_m, abs(v - end[1])):
        return []
    start = (u, v)
    return [start] + _shore_arc(work.exterior, start, end, spacing_m)


def transect_offsets(plan: MissionPlan) -> np.ndarray:
    """Across-track coordinate of each transect, in plan order."""
    R = _rot(plan.heading_deg)
    xy = plan.xy()
    return np.array([xy[i] @ R[0] for i, _ in plan.transects])


def point_in_polygon(x, y, poly, strict: bool = True):
    """Vectorised point-in-polygon; ``strict`` excludes the boundary."""
    p = Polygon(np.asarray(poly, dtype=float))
    fn = shapely.contains_xy if strict else shapely.intersects_xy
    return fn(p, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


# ---- waypoint and boundary files ----------------------------------------

WAYPOINT_HEADER = "index,lat,lon,acceptance_radius_m"


def export_mission(plan: MissionPlan, frame: LocalFrame, path=None) -> str:
    """One waypoint per line after a header: index, lat, lon, radius."""
    lines = [WAYPOINT_HEADER]
    for i, w in enumerate(plan.waypoints):
        ll = from_local(w.position, frame)
        lines.append(f"{i},{ll.lat_deg:.9f},{ll.lon_deg:.9f},{w.acceptance_radius_m:.2f}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_mission(text: str) -> list[tuple[LatLon, float]]:
    """Inverse of :func:`export_mission`: ``[(LatLon, radius), ...]``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != WAYPOINT_HEADER:
        raise PlanningError("missing waypoint file header")
    out = []
    for n, ln in enumerate(lines[1:]):
        idx, lat, lon, rad = ln.split(",")
        if int(idx) != n:
            raise PlanningError(f"waypoint index {idx} out of order")
        out.append((LatLon(float(lat), float(lon)), float(rad)))
    return out


def load_mission(path, frame: LocalFrame, cruise_speed_mps: float = 1.5) -> MissionPlan:
    """Read a waypoint file back into a plan in ``frame`` (boundary = waypoint hull)."""
    entries = parse_mission(Path(path).read_text())
    wps = [Waypoint(to_local(ll, frame), r) for ll, r in entries]
    xy = np.array([(w.position.x_m, w.position.y_m) for w in wps])
    hull = np.asarray(shapely.MultiPoint(xy).convex_hull.exterior.coords)[:-1] \
        if len(xy) >= 3 else xy
    return MissionPlan(hull, wps, spacing_m=1.0, heading_deg=0.0, cruise_speed_mps=cruise_speed_mps)


def parse_boundary(text: str) -> list[LatLon]:
    """Boundary file: one ``lat, lon`` (decimal or DDM) pair per line; ``#`` comments."""
    pts = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            pts.append(parse_latlon(ln))
    if len(pts) < 3:
        raise PlanningError("boundary file needs at least 3 vertices")
    return pts


def boundary_to_local(pts: Sequence[LatLon], frame: LocalFrame) -> np.ndarray:
    return np.array([(q.x_m, q.y_m) for q in (to_local(p, frame) for p in pts)])
