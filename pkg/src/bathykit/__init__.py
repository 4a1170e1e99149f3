"""Bathymetric survey toolkit: plan, simulate, log, grid and measure a lake bed."""
from .geodesy import LatLon, LocalFrame, PlanarPoint, parse_ddm, parse_latlon, to_local, from_local
from .sonarlog import PingRecord, SurveyHeader, iter_pings, read_survey, write_survey
from .calibrate import DepthOffset, QualityFilter, SurveyPoint, compute_offset, extract_soundings
from .tin import Triangulation, delaunay, interpolate, locate, rasterize
from .grid import DepthGrid
from .hypsometry import BandRow, SurveySummary, band_table, report, summary
from .mission import MissionPlan, Waypoint, lawnmower, swath_spacing
from .asvsim import SimConfig, TruthField, run_survey

__version__ = "0.1.0"
