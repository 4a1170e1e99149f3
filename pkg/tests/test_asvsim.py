import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from bathykit.asvsim import (ControllerGains, Controller, EstimatorConfig, NoiseConfig, PlantParams,
                             SensorReading, Setpoint, SimConfig, SimulationTimeout, StateEstimate,
                             TruthField, VehicleState, circular_blend, control, estimate,
                             ground_velocity, heading_step_response, load_sim_config, mix,
                             navigate, run_survey, sample_sonar, sense, step_dynamics, wrap180)
from bathykit.geodesy import LatLon, LocalFrame, PlanarPoint
from bathykit.mission import MissionPlan, Waypoint, lawnmower
from bathykit.sonarlog import read_survey

FRAME = LocalFrame(LatLon(19.135667, 72.895667))
FLAT = TruthField("flat", {"depth": 2.0})
QUIET = NoiseConfig(0.0, 0.0, 0.0, 0.0, 0.0)


def leg(x0, y0, x1, y1, r=3.0):
    pts = np.array([(x0, y0), (x1, y1)], float)
    return MissionPlan(pts, [Waypoint(PlanarPoint(x0, y0), r), Waypoint(PlanarPoint(x1, y1), r)],
                       spacing_m=1.0, heading_deg=0.0)


def test_wrap_and_blend():
    assert wrap180(190) == -170 and wrap180(-190) == 170 and wrap180(540) == wrap180(180)
    m = circular_blend(359.0, 1.0, 0.5)
    assert min(m, 360 - m) < 1e-9
    assert abs(circular_blend(10.0, 50.0, 0.25) - 20.0) < 0.5


def test_zero_noise_estimate_tracks_truth():
    plant = PlantParams()
    s = VehicleState(0, 0, 30.0, 1.5, 0.0, 0)
    rng = np.random.default_rng(0)
    est = None
    for _ in range(200):
        v = ground_velocity(s)
        nxt = step_dynamics(s, (0.5, 0.5), dt_s=0.1, plant=plant)
        est = estimate(sense(nxt, v, QUIET, rng), est)
        s = nxt
    assert abs(est.x_m - s.x_m) < 1e-9 and abs(est.y_m - s.y_m) < 1e-9
    assert abs(wrap180(est.heading_deg - s.heading_deg)) < 1e-9


def test_estimate_reduces_gnss_noise():
    rng = np.random.default_rng(4)
    noise = NoiseConfig(2.0, 0.0, 0.0, 0.0, 0.0)
    cfg = EstimatorConfig(position_alpha=0.1)
    s = VehicleState(10.0, -5.0, 0.0, 0.0, 0.0, 0)
    errs = []
    for trial in range(20):
        est = None
        for k in range(100):
            est = estimate(sense(replace(s, t_ms=100 * k), (0.0, 0.0), noise, rng), est, cfg)
        errs.append(est.x_m - s.x_m)
    assert np.std(errs) < 2.0


def test_navigate_basics():
    plan = leg(0, 0, 0, 100)
    est = StateEstimate(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    sp, prog = navigate(est, plan, 0)
    assert prog == 1 and sp.target_index == 1 and sp.heading_deg == 0.0
    sp, prog = navigate(replace(est, y_m=99.0), plan, 1)
    assert sp.done and prog == 2
    sp, _ = navigate(replace(est, x_m=-50, y_m=50), plan, 1)
    assert sp.heading_deg == pytest.approx(45.0)


def test_control_laws():
    g = ControllerGains()
    est = StateEstimate(0, 0, 0.0, g.cruise_speed_mps, 0.0, 0)
    thr, steer = control(est, Setpoint(0.0, g.cruise_speed_mps, 0), g, 0.1)
    assert steer == 0.0 and thr == pytest.approx(g.speed_ff * g.cruise_speed_mps)
    p_only = replace(g, heading_i=0.0, heading_d=0.0)
    _, steer = control(est, Setpoint(90.0, g.cruise_speed_mps, 0), p_only, 0.1)
    assert steer == pytest.approx(min(1.0, p_only.heading_p * 90)) and steer > 0
    _, steer = control(est, Setpoint(270.0, g.cruise_speed_mps, 0), p_only, 0.1)
    assert steer < 0


def test_anti_windup():
    g = replace(ControllerGains(), heading_p=1.0)
    c = Controller(g)
    est = StateEstimate(0, 0, 0.0, 1.5, 0.0, 0)
    for _ in range(500):
        c.control(est, Setpoint(120.0, 1.5, 0), 0.1)
    assert c.heading_integral == 0.0  # saturated the whole time
    with pytest.raises(ValueError):
        c.control(est, Setpoint(0.0, 1.5, 0), 0.0)


def test_mixer():
    assert mix(0.5, 0.0) == (0.5, 0.5)
    assert mix(0.5, 1.0) == (1.0, 0.0)
    for s in np.linspace(-1, 1, 21):
        left, right = mix(0.0, s)
        assert left >= 0 and right >= 0
        assert left - right == pytest.approx(s / 2)


def test_plant_rest_and_straight():
    s = VehicleState(5, 5, 45.0, 1.0, 3.0, 0)
    for _ in range(400):
        s = step_dynamics(s, (0.0, 0.0))
    assert s.surge_mps == 0.0 and s.yaw_rate_dps == 0.0
    x, y = s.x_m, s.y_m
    s = step_dynamics(s, (0.0, 0.0))
    assert (s.x_m, s.y_m) == (x, y)
    s = VehicleState(0, 0, 60.0, 0.0, 0.0, 0)
    for _ in range(300):
        s = step_dynamics(s, (0.4, 0.4))
    assert s.heading_deg == 60.0
    assert math.degrees(math.atan2(s.x_m, s.y_m)) == pytest.approx(60.0)


def test_plant_circle_radius():
    plant = PlantParams()
    s = VehicleState()
    xy = []
    for k in range(3000):
        s = step_dynamics(s, (0.6, 0.4), plant=plant)
        if k > 1500:
            xy.append((s.x_m, s.y_m))
    xy = np.array(xy)
    # algebraic circle fit
    A = np.column_stack([2 * xy, np.ones(len(xy))])
    b = (xy ** 2).sum(axis=1)
    cx, cy, c = np.linalg.lstsq(A, b, rcond=None)[0]
    r = math.sqrt(c + cx * cx + cy * cy)
    expect = s.surge_mps / math.radians(s.yaw_rate_dps)
    assert r == pytest.approx(expect, rel=0.01)


def test_sonar_sampling(caplog):
    s = VehicleState(10, 10)
    p = sample_sonar(FLAT, s, FRAME)
    assert p.depth_cm == 200 and p.beam_id == 0 and p.freq_khz == 200
    rng = np.random.default_rng(17)
    d = np.array([sample_sonar(FLAT, s, FRAME, rng, 0.05, sample_count=0).depth_cm for _ in range(10000)]) / 100
    assert abs(d.mean() - 2.0) < 3 * 0.05 / math.sqrt(10000) + 0.005
    deep = TruthField("flat", {"depth": 500.0})
    with caplog.at_level(logging.WARNING):
        p = sample_sonar(deep, s, FRAME)
    assert p.depth_cm == 45700
    assert "clamped" in caplog.text


def test_truth_field_validation():
    with pytest.raises(ValueError):
        TruthField("paraboloid", {"cx": 0})
    with pytest.raises(ValueError):
        TruthField("cone", {})
    t = TruthField("paraboloid", {"cx": 0, "cy": 0, "rx": 10, "ry": 5, "max_depth": 2})
    assert t.depth(0, 0) == 2 and t.depth(20, 0) == 0
    assert t.paraboloid_volume() == pytest.approx(math.pi * 10 * 5 * 2 / 2)


def test_config_guards_and_json(tmp_path):
    with pytest.raises(ValueError):
        SimConfig(dt_s=0.5)
    cfg = SimConfig(seed=9, truth=FLAT)
    p = tmp_path / "sim.json"
    import json
    p.write_text(json.dumps(cfg.to_dict()))
    assert load_sim_config(p) == cfg


def test_step_response():
    t, h = heading_step_response(90.0)
    outside = np.nonzero(np.abs(h - 90.0) > 0.02 * 90.0)[0]
    settle = t[outside[-1] + 1]
    assert settle < 30.0
    tail = h[t >= 20.0]
    assert np.ptp(tail) < 0.5  # no limit cycle
    assert h.max() < 90.0 * 1.1


def test_square_mission_completes():
    plan = lawnmower([(0, 0), (100, 0), (100, 100), (0, 100)], 25, 0)
    cfg = SimConfig(truth=FLAT, seed=3)
    res = run_survey(plan, cfg=cfg)
    assert res.completed and res.last_waypoint == len(plan.waypoints) - 1
    target = res.track[:, 7]
    assert np.all(np.diff(target) >= 0)


def test_straight_leg_cross_track():
    cfg = SimConfig(truth=FLAT, seed=8, noise=replace(NoiseConfig(), gnss_sigma_m=2.0))
    res = run_survey(leg(0, 0, 0, 200), cfg=cfg)
    tr = res.track
    steady = tr[tr[:, 2] > 30.0]
    assert np.max(np.abs(steady[:, 1])) < 2.0


def test_determinism(tmp_path):
    plan = lawnmower([(0, 0), (60, 0), (60, 60), (0, 60)], 20, 0)
    cfg = SimConfig(truth=FLAT, seed=5, side_scan=True)
    a = run_survey(plan, cfg=cfg, out_dir=tmp_path / "a")
    b = run_survey(plan, cfg=cfg, out_dir=tmp_path / "b")
    assert [f.name for f in a.files] == [f.name for f in b.files]
    for fa, fb in zip(a.files + [a.track_path], b.files + [b.track_path]):
        assert fa.read_bytes() == fb.read_bytes()
    h, ch = read_survey(tmp_path / "a")
    assert h.channel_count == 3 and [p.beam_id for p in ch[1][:1] + ch[2][:1]] == [3, 4]
    c = run_survey(plan, cfg=replace(cfg, seed=6), out_dir=tmp_path / "c")
    assert c.files[1].read_bytes() != a.files[1].read_bytes()


def test_timeout():
    cfg = SimConfig(truth=FLAT, timeout_s=5.0)
    with pytest.raises(SimulationTimeout) as e:
        run_survey(leg(0, 0, 0, 200), cfg=cfg)
    assert not e.value.result.completed
    res = run_survey(leg(0, 0, 0, 200), cfg=cfg, raise_on_timeout=False)
    assert res.elapsed_s == pytest.approx(5.0, abs=0.2)
