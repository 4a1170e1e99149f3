"""Coordinate parsing and a local planar frame for lake-sized surveys.

Coordinates are written in the chartplotter DDM style ``N019.08.140``
(hemisphere, degrees, minutes with three decimals). Planar coordinates
are meters east (x) and north (y) of a survey origin, using an
equirectangular projection which is accurate to well under 0.1 m over a
couple of kilometres.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

METERS_PER_DEG_LAT = 111320.0

# Small-area bound for to_local, degrees.
MAX_SPAN_DEG = 1.0

_DDM_RE = re.compile(r"^([NSEW])(\d{1,3})\.(\d{2})\.(\d+)$")
_HEMI_LIMIT = {"N": 90.0, "S": 90.0, "E": 180.0, "W": 180.0}


class CoordinateError(ValueError):
    """Malformed coordinate text or out-of-range value."""


@dataclass(frozen=True)
class LatLon:
    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (-90.0 <= self.lat_deg <= 90.0):
            raise CoordinateError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not (-180.0 <= self.lon_deg <= 180.0):
            raise CoordinateError(f"longitude {self.lon_deg} outside [-180, 180]")


@dataclass(frozen=True)
class PlanarPoint:
    x_m: float
    y_m: float

    def __post_init__(self):
        if not (math.isfinite(self.x_m) and math.isfinite(self.y_m)):
            raise CoordinateError("planar coordinates must be finite")


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular frame anchored at ``origin``."""

    origin: LatLon
    meters_per_deg_lat: float = METERS_PER_DEG_LAT

    @property
    def meters_per_deg_lon(self) -> float:
        return self.meters_per_deg_lat * math.cos(math.radians(self.origin.lat_deg))

    def to_local(self, p: LatLon) -> PlanarPoint:
        return to_local(p, self)

    def from_local(self, p: PlanarPoint) -> LatLon:
        return from_local(p, self)


def parse_ddm(text: str) -> float:
    """Parse one coordinate component and return signed decimal degrees.

    Accepts ``[NSEW]DDD.MM.mmm``; plain decimal degrees (``19.1356``,
    ``-72.9``) are accepted when there is no hemisphere prefix.

    >>> round(parse_ddm("N019.08.140"), 6)
    19.135667
    """
    s = text.strip()
    m = _DDM_RE.match(s)
    if m is None:
        if s and s[0].upper() in _HEMI_LIMIT:
            raise CoordinateError(f"malformed DDM coordinate {text!r}")
        try:
            value = float(s)
        except ValueError:
            raise CoordinateError(f"malformed coordinate {text!r}") from None
        if not math.isfinite(value) or abs(value) > 180.0:
            raise CoordinateError(f"coordinate {text!r} out of range")
        return value

    hemi, deg_s, min_s, frac_s = m.groups()
    degrees = int(deg_s)
    minutes = float(f"{min_s}.{frac_s}")
    if minutes >= 60.0:
        raise CoordinateError(f"minutes >= 60 in {text!r}")
    value = degrees + minutes / 60.0
    if value > _HEMI_LIMIT[hemi]:
        raise CoordinateError(f"{text!r} beyond {_HEMI_LIMIT[hemi]:g} degrees")
    return -value if hemi in "SW" else value


def format_ddm(value: float, axis: str) -> str:
    """Format signed degrees as DDM text; ``axis`` is ``"lat"`` or ``"lon"``."""
    if axis == "lat":
        hemi = "N" if value >= 0 else "S"
    elif axis == "lon":
        hemi = "E" if value >= 0 else "W"
    else:
        raise ValueError(f"axis must be 'lat' or 'lon', not {axis!r}")
    thousandths = round(abs(value) * 60000.0)
    degrees, rem = divmod(thousandths, 60000)
    return f"{hemi}{degrees:03d}.{rem // 1000:02d}.{rem % 1000:03d}"


def parse_latlon(text: str) -> LatLon:
    """Parse a coordinate pair such as ``"N019.08.140, E072.53.740"``.

    Hemisphere-tagged components may come in either order; untagged
    decimal pairs are read as ``lat, lon``.
    """
    parts = [p for p in re.split(r"[,\s;]+", text.strip()) if p]
    if len(parts) != 2:
        raise CoordinateError(f"expected two coordinate components in {text!r}")
    a, b = parts
    if a[:1].upper() in "EW" and b[:1].upper() in "NS":
        a, b = b, a
    if a[:1].upper() in "EW" or b[:1].upper() in "NS":
        raise CoordinateError(f"hemisphere letters out of place in {text!r}")
    return LatLon(parse_ddm(a), parse_ddm(b))


def to_local(p: LatLon, f: LocalFrame) -> PlanarPoint:
    dlat = p.lat_deg - f.origin.lat_deg
    dlon = p.lon_deg - f.origin.lon_deg
    if abs(dlat) >= MAX_SPAN_DEG or abs(dlon) >= MAX_SPAN_DEG:
        raise CoordinateError(
            f"{p} is more than {MAX_SPAN_DEG} degree from the frame origin"
        )
    return PlanarPoint(dlon * f.meters_per_deg_lon, dlat * f.meters_per_deg_lat)


def from_local(p: PlanarPoint, f: LocalFrame) -> LatLon:
    return LatLon(
        f.origin.lat_deg + p.y_m / f.meters_per_deg_lat,
        f.origin.lon_deg + p.x_m / f.meters_per_deg_lon,
    )


def to_local_arrays(lat, lon, f: LocalFrame):
    """Vectorised :func:`to_local` for numpy arrays of degrees."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    dlat = lat - f.origin.lat_deg
    dlon = lon - f.origin.lon_deg
    if np.any(np.abs(dlat) >= MAX_SPAN_DEG) or np.any(np.abs(dlon) >= MAX_SPAN_DEG):
        raise CoordinateError("point(s) more than 1 degree from the frame origin")
    return dlon * f.meters_per_deg_lon, dlat * f.meters_per_deg_lat
