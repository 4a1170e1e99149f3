import numpy as np
import pytest

from bathykit.asvsim import SimConfig, TruthField, sample_sonar, VehicleState
from bathykit.calibrate import (CalibrationError, DepthOffset, QualityFilter, ZERO_OFFSET,
                                apply_calibration, compute_offset, extract_soundings)
from bathykit.geodesy import LatLon, LocalFrame
from bathykit.sonarlog import PingRecord

FRAME = LocalFrame(LatLon(19.135667, 72.895667))


def test_offset_examples():
    assert compute_offset([(2.5, 2.3)]).error_m == pytest.approx(0.2, abs=1e-12)
    assert compute_offset([(2.0, 2.0), (3.0, 3.0)]).error_m == 0.0
    assert compute_offset([(2.4, 2.3), (2.2, 2.3)]).error_m == pytest.approx(0.0, abs=1e-12)
    assert compute_offset([(2.4, 2.3), (2.2, 2.3)]).n_samples == 2


def test_offset_errors():
    with pytest.raises(CalibrationError):
        compute_offset([])
    with pytest.raises(CalibrationError):
        compute_offset([(10.0, 2.0)])


def test_apply():
    assert apply_calibration(2.5, DepthOffset(0.2, 1))[0] == pytest.approx(2.3)
    assert apply_calibration(0.1, DepthOffset(0.3, 1)) == (0.0, True)
    assert apply_calibration(1.0, ZERO_OFFSET) == (1.0, False)


def test_residual_mean_zero():
    rng = np.random.default_rng(11)
    for _ in range(50):
        known = rng.uniform(0.5, 10, 20)
        sonar = known + rng.normal(0.3, 0.1, 20)
        off = compute_offset(zip(sonar, known))
        resid = [apply_calibration(s, off)[0] - k for s, k in zip(sonar, known)]
        assert abs(np.mean(resid)) < 1e-12


def _ping(t, depth_cm, beam=0, lat=19.1357, lon=72.8957):
    freq = {0: 200, 1: 83, 3: 455, 4: 455}[beam]
    return PingRecord(t, int(round(lat * 1e7)), int(round(lon * 1e7)), 0, 0, depth_cm, freq, beam)


def test_single_ping_composition():
    pts = extract_soundings([_ping(0, 230)], DepthOffset(0.2, 1), FRAME)
    assert len(pts) == 1
    assert pts[0].depth_m == pytest.approx(2.1)


def test_side_beams_dropped():
    pings = [_ping(i, 200, beam=3 + i % 2) for i in range(10)]
    assert extract_soundings(pings, frame=FRAME) == []


def test_filters_and_stats():
    pings = [_ping(0, 200), _ping(1, 200),                       # duplicate position
             _ping(2, 900, lat=19.1360), _ping(3, 150, lat=19.1365),
             _ping(4, 0, lat=0.0, lon=0.0)]                      # no fix
    stats = {}
    pts = extract_soundings(pings, frame=FRAME, quality=QualityFilter(1.0, 5.0, 0.5), stats=stats)
    assert [p.t_ms for p in pts] == [0, 3]
    assert stats["duplicate"] == 1 and stats["depth_filter"] == 1 and stats["no_fix"] == 1


def test_flat_bed_from_simulator():
    truth = TruthField("flat", {"depth": 2.0})
    rng = np.random.default_rng(5)
    pings = []
    for i in range(100):
        st = VehicleState(x_m=2.0 * i, y_m=0.0, t_ms=200 * i)
        pings.append(sample_sonar(truth, st, FRAME, rng, 0.02))
    pts = extract_soundings(pings, frame=FRAME)
    assert len(pts) == 100
    d = np.array([p.depth_m for p in pts])
    assert np.all(np.abs(d - 2.0) < 5 * 0.02 + 0.005)


def test_translation_equivariance():
    rng = np.random.default_rng(2)
    known = rng.uniform(1, 5, 30)
    sonar = known + 0.25
    a = compute_offset(zip(sonar, known)).error_m
    b = compute_offset(zip(sonar + 1.0, known + 1.0)).error_m
    assert a == pytest.approx(0.25, abs=1e-12)
    assert b == pytest.approx(a, abs=1e-12)
