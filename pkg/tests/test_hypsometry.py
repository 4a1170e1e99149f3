import math

import numpy as np
import pytest

from bathykit.grid import DepthGrid
from bathykit.hypsometry import (POWAI_BANDS, POWAI_MAPPED_AREA_M2, POWAI_TOTAL_VOLUME_M3,
                                 BandRow, EmptyGrid, band_table, parse_report_csv,
                                 parse_report_json, report, summary, summary_from_bands)


def paraboloid_layer(z1, z2, rx, ry, D):
    """Water between depth planes z1 < z2 in an elliptic paraboloid basin."""
    if z1 >= D:
        return 0.0
    z2 = min(z2, D)
    return math.pi * rx * ry * ((z2 - z1) - (z2 * z2 - z1 * z1) / (2 * D))


def paraboloid_area(z, rx, ry, D):
    return math.pi * rx * ry * max(0.0, 1 - z / D)


def paraboloid_grid(rx=200.0, ry=150.0, D=5.83, cell=1.0):
    def f(x, y):
        return D * (1 - (x / rx) ** 2 - (y / ry) ** 2)

    return DepthGrid.from_function(
        lambda x, y: np.maximum(f(x, y), 0.0), -rx, -ry, rx, ry, cell, valid=lambda x, y: f(x, y) > 0)


def test_uniform_basin():
    g = DepthGrid((0.5, 0.5), 1.0, np.full((10, 10), 2.5), np.ones((10, 10), bool))
    rows = band_table(g)
    assert [(r.lower_m, r.upper_m, r.volume_m3, r.area_m2) for r in rows] == [
        (0.0, 1.0, 100.0, 100.0), (1.0, 2.0, 100.0, 100.0), (2.0, 3.0, 50.0, 100.0)]


def test_flat_summary():
    g = DepthGrid((0.5, 0.5), 1.0, np.full((10, 10), 2.0), np.ones((10, 10), bool))
    s = summary(g)
    assert (s.total_volume_m3, s.mapped_area_m2, s.mean_depth_m, s.max_depth_m) == (200, 100, 2.0, 2.0)


def test_exact_bound_goes_to_deeper_band_area():
    g = DepthGrid((0.5, 0.5), 1.0, np.array([[1.0, 0.5]]), np.ones((1, 2), bool))
    rows = band_table(g)
    assert rows[0].area_m2 == 2.0
    assert len(rows) == 1
    g = DepthGrid((0.5, 0.5), 1.0, np.array([[2.0, 1.0]]), np.ones((1, 2), bool))
    rows = band_table(g)
    assert rows[1].area_m2 == 1.0


def test_empty_grid():
    g = DepthGrid((0.5, 0.5), 1.0, np.full((2, 2), np.nan), np.zeros((2, 2), bool))
    with pytest.raises(EmptyGrid):
        band_table(g)
    with pytest.raises(EmptyGrid):
        summary(g)


def test_conservation():
    g = paraboloid_grid(cell=2.0)
    rows = band_table(g, 0.5)
    assert math.fsum(r.volume_m3 for r in rows) == pytest.approx(summary(g).total_volume_m3, rel=1e-12)
    assert rows[0].area_m2 == summary(g).mapped_area_m2


def test_paraboloid_bands():
    rx, ry, D = 200.0, 150.0, 5.83
    g = paraboloid_grid(rx, ry, D, 1.0)
    rows = band_table(g, 1.0)
    assert len(rows) == 6
    for r in rows:
        assert r.volume_m3 == pytest.approx(paraboloid_layer(r.lower_m, r.upper_m, rx, ry, D), rel=0.02)
        assert r.area_m2 == pytest.approx(paraboloid_area(r.lower_m, rx, ry, D), rel=0.02)
    assert summary(g).total_volume_m3 == pytest.approx(math.pi * rx * ry * D / 2, rel=0.01)


def test_powai_identities():
    s = summary_from_bands(POWAI_BANDS, 5.83)
    assert s.total_volume_m3 == pytest.approx(3782966.27, abs=1e-6)
    assert abs(s.total_volume_m3 - POWAI_TOTAL_VOLUME_M3) < 0.5
    assert s.mapped_area_m2 == POWAI_MAPPED_AREA_M2
    assert round(s.mean_depth_m, 1) == 2.1
    areas = [r.area_m2 for r in POWAI_BANDS]
    assert all(a > b for a, b in zip(areas, areas[1:]))


def test_report_csv_matches_table():
    text = report(POWAI_BANDS)
    lines = text.splitlines()
    assert lines[0] == "lower,upper,volume,area"
    assert lines[1] == "0.00,1.00,1651393.27,1765845.00"
    assert lines[6] == "5.00,6.00,1911.85,12448.00"
    assert tuple(parse_report_csv(text)) == POWAI_BANDS


def test_report_empty_and_json():
    assert report([]) == "lower,upper,volume,area\n"
    s = summary_from_bands(POWAI_BANDS, 5.83)
    rows, s2 = parse_report_json(report(POWAI_BANDS, s, "json"))
    assert tuple(rows) == POWAI_BANDS
    assert s2.total_volume_m3 == round(s.total_volume_m3, 2)


def test_report_text():
    s = summary_from_bands(POWAI_BANDS, 5.83)
    text = report(POWAI_BANDS, s, "text")
    assert "Total Volume: 3782966 m3" in text
    assert "Total Mapped Area: 1765845 m2" in text
    assert "Average Depth: 2.1 m" in text
    assert "Maximum Depth: 5.83 m" in text
    with pytest.raises(ValueError):
        report(POWAI_BANDS, s, "xml")


def test_bad_rows():
    with pytest.raises(ValueError):
        BandRow(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        BandRow(0.0, 1.0, -1.0, 0.0)
