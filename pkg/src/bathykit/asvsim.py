"""Closed-loop simulator of a twin-hull survey boat.

The loop mirrors a small autopilot's flight stack::

    sensors -> estimate() -> navigate() -> Controller.control() -> mix()
            -> step_dynamics() -> sample_sonar()

The plant is a planar first-order-lag model: surge relaxes toward a
thrust-proportional target, yaw rate toward a differential-thrust target,
and position integrates surge along the heading plus a water current.
All noise comes from one seeded ``numpy.random.Generator``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .geodesy import LocalFrame, PlanarPoint, from_local, parse_latlon
from .mission import MissionPlan
from .sonarlog import MAX_DEPTH_CM, SONAR, PingRecord, SonarSpec, SurveyHeader, write_survey

log = logging.getLogger(__name__)

# default frame origin: the north-west corner of the Powai survey area
DEFAULT_ORIGIN = "N019.08.140, E072.53.740"
# 2022-03-01T00:00:00Z
DEFAULT_EPOCH_MS = 1646092800000


def wrap180(a: float) -> float:
    """Wrap an angle difference to (-180, 180]."""
    a = math.fmod(a, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def wrap360(a: float) -> float:
    a = math.fmod(a, 360.0)
    if a < 0.0:
        a += 360.0
    return 0.0 if a >= 360.0 else a


def bearing_deg(dx: float, dy: float) -> float:
    """Compass bearing of the vector (east, north)."""
    return wrap360(math.degrees(math.atan2(dx, dy)))


def _clamp(v, lo, hi):
    return lo if v < lo else (hi if v > hi else v)


# ---- configuration -------------------------------------------------------


@dataclass(frozen=True)
class ControllerGains:
    heading_p: float = 0.05
    heading_i: float = 0.001
    heading_d: float = 0.02
    speed_p: float = 0.3
    speed_i: float = 0.05
    max_throttle: float = 1.0
    cruise_speed_mps: float = 1.5
    turn_radius_m: float = 5.0
    max_accel_mps2: float = 0.5
    # feed-forward throttle per m/s of speed setpoint (1 / plant surge gain)
    speed_ff: float = 1.0 / 3.0
    # bound on each integrator state, in error units times seconds
    integral_limit: float = 200.0

    def __post_init__(self):
        for f in ("heading_p", "heading_i", "heading_d", "speed_p", "speed_i", "speed_ff"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be >= 0")
        if not 0.0 < self.max_throttle <= 1.0:
            raise ValueError("max_throttle must be in (0, 1]")
        if not self.cruise_speed_mps > 0:
            raise ValueError("cruise speed must be positive")
        if not self.turn_radius_m > 0 or not self.max_accel_mps2 > 0:
            raise ValueError("turn radius and max acceleration must be positive")


@dataclass(frozen=True)
class PlantParams:
    tau_v_s: float = 1.5
    k_v_mps: float = 3.0
    tau_r_s: float = 0.5
    k_omega_dps: float = 40.0
    max_speed_mps: float = 3.0
    max_accel_mps2: float = 0.5
    max_yaw_rate_dps: float = math.degrees(1.5 / 5.0)

    @classmethod
    def from_gains(cls, gains: ControllerGains, **kw) -> "PlantParams":
        """Yaw-rate cap so the turning circle at cruise equals the turn radius."""
        kw.setdefault("max_yaw_rate_dps", math.degrees(gains.cruise_speed_mps / gains.turn_radius_m))
        kw.setdefault("max_accel_mps2", gains.max_accel_mps2)
        return cls(**kw)


@dataclass(frozen=True)
class NoiseConfig:
    gnss_sigma_m: float = 1.0
    gnss_vel_sigma_mps: float = 0.05
    compass_sigma_deg: float = 2.0
    gyro_sigma_dps: float = 0.2
    sonar_sigma_m: float = 0.02


@dataclass(frozen=True)
class EstimatorConfig:
    position_alpha: float = 0.05
    heading_beta: float = 0.2
    speed_beta: float = 0.3


_TRUTH_KEYS = {
    "flat": ("depth",),
    "plane": ("a", "b", "c"),
    "paraboloid": ("cx", "cy", "rx", "ry", "max_depth"),
    "gaussian-hole": ("cx", "cy", "depth", "amplitude", "sigma"),
}


@dataclass(frozen=True)
class TruthField:
    """Analytic lake bed. ``kind`` is flat, plane, paraboloid or gaussian-hole.

    Parameters (all meters):

    - flat: ``depth``
    - plane: ``depth = c + a*x + b*y``
    - paraboloid: ``max_depth * (1 - ((x-cx)/rx)^2 - ((y-cy)/ry)^2)``
    - gaussian-hole: ``depth + amplitude * exp(-r^2 / (2 sigma^2))`` around ``(cx, cy)``

    Depth is clipped at zero. ``bounds`` ``(xmin, ymin, xmax, ymax)``
    limits where the bed is defined (None for everywhere).
    """

    kind: str = "flat"
    params: dict = field(default_factory=lambda: {"depth": 2.0})
    bounds: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("flat", "plane", "paraboloid", "gaussian-hole"):
            raise ValueError(f"unknown truth field kind {self.kind!r}")
        missing = set(_TRUTH_KEYS[self.kind]) - set(self.params)
        if missing:
            raise ValueError(f"{self.kind} truth field needs {sorted(missing)}")

    def depth(self, x, y):
        p = self.params
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "flat":
            d = np.full(np.broadcast(x, y).shape, float(p["depth"]))
        elif self.kind == "plane":
            d = p["c"] + p["a"] * x + p["b"] * y
        elif self.kind == "paraboloid":
            u = (x - p["cx"]) / p["rx"]
            v = (y - p["cy"]) / p["ry"]
            d = p["max_depth"] * (1.0 - u * u - v * v)
        else:
            r2 = (x - p["cx"]) ** 2 + (y - p["cy"]) ** 2
            d = p["depth"] + p["amplitude"] * np.exp(-r2 / (2.0 * p["sigma"] ** 2))
        d = np.maximum(d, 0.0)
        return float(d) if d.ndim == 0 else d

    def contains(self, x: float, y: float) -> bool:
        if self.bounds is None:
            return True
        x0, y0, x1, y1 = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1

    def paraboloid_volume(self) -> float:
        """Water volume of an unclipped elliptic paraboloid basin."""
        if self.kind != "paraboloid":
            raise ValueError("analytic volume only for paraboloid basins")
        p = self.params
        return math.pi * p["rx"] * p["ry"] * p["max_depth"] / 2.0


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 0.1
    ping_rate_hz: float = 5.0
    seed: int = 1
    timeout_s: float = 7200.0
    sample_count: int = 32
    side_scan: bool = False
    origin: str = DEFAULT_ORIGIN
    epoch_start_ms: int = DEFAULT_EPOCH_MS
    current_mps: tuple = (0.0, 0.0)
    start: tuple | None = None
    start_heading_deg: float | None = None
    gains: ControllerGains = ControllerGains()
    plant: PlantParams | None = None
    noise: NoiseConfig = NoiseConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    truth: TruthField = TruthField()

    def __post_init__(self):
        plant = self.plant_params()
        if not 0 < self.dt_s <= 1.0:
            raise ValueError("dt must be in (0, 1] s")
        if self.dt_s > min(plant.tau_v_s, plant.tau_r_s) / 5.0 + 1e-12:
            raise ValueError("dt must not exceed a fifth of the plant time constants")
        if abs(self.dt_s * 1000 - round(self.dt_s * 1000)) > 1e-9:
            raise ValueError("dt must be a whole number of milliseconds")
        if not self.ping_rate_hz > 0:
            raise ValueError("ping rate must be positive")

    def plant_params(self) -> PlantParams:
        return self.plant if self.plant is not None else PlantParams.from_gains(self.gains)

    def frame(self) -> LocalFrame:
        return LocalFrame(parse_latlon(self.origin))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        sub = {"gains": ControllerGains, "plant": PlantParams, "noise": NoiseConfig,
               "estimator": EstimatorConfig, "truth": TruthField}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sim config keys: {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            if k in sub and isinstance(v, dict):
                if k == "truth" and v.get("bounds") is not None:
                    v = {**v, "bounds": tuple(v["bounds"])}
                v = sub[k](**v)
            elif k in ("current_mps", "start") and v is not None:
                v = tuple(v)
            kw[k] = v
        return cls(**kw)


def load_sim_config(path) -> SimConfig:
    return SimConfig.from_dict(json.loads(Path(path).read_text()))


# ---- state types ---------------------------------------------------------


@dataclass(frozen=True)
class VehicleState:
    x_m: float = 0.0
    y_m: float = 0.0
    heading_deg: float = 0.0
    surge_mps: float = 0.0
    yaw_rate_dps: float = 0.0
    t_ms: int = 0

    @property
    def position(self) -> PlanarPoint:
        return PlanarPoint(self.x_m, self.y_m)


@dataclass(frozen=True)
class SensorReading:
    t_ms: int
    gnss_x_m: float
    gnss_y_m: float
    gnss_vx_mps: float
    gnss_vy_mps: float
    compass_deg: float
    gyro_dps: float


@dataclass(frozen=True)
class StateEstimate:
    x_m: float
    y_m: float
    heading_deg: float
    surge_mps: float
    yaw_rate_dps: float
    t_ms: int


@dataclass(frozen=True)
class Setpoint:
    heading_deg: float
    speed_mps: float
    target_index: int
    done: bool = False


# ---- flight stack --------------------------------------------------------


def ground_velocity(state: VehicleState, current=(0.0, 0.0)) -> tuple[float, float]:
    h = math.radians(state.heading_deg)
    return (state.surge_mps * math.sin(h) + current[0],
            state.surge_mps * math.cos(h) + current[1])


def sense(state: VehicleState, velocity, noise: NoiseConfig, rng: np.random.Generator) -> SensorReading:
    """GNSS position/velocity, compass and gyro readings of the true state."""
    e = rng.standard_normal(6)
    return SensorReading(
        t_ms=state.t_ms,
        gnss_x_m=state.x_m + noise.gnss_sigma_m * e[0],
        gnss_y_m=state.y_m + noise.gnss_sigma_m * e[1],
        gnss_vx_mps=velocity[0] + noise.gnss_vel_sigma_mps * e[2],
        gnss_vy_mps=velocity[1] + noise.gnss_vel_sigma_mps * e[3],
        compass_deg=wrap360(state.heading_deg + noise.compass_sigma_deg * e[4]),
        gyro_dps=state.yaw_rate_dps + noise.gyro_sigma_dps * e[5],
    )


def circular_blend(a_deg: float, b_deg: float, w: float) -> float:
    """Weighted circular mean ``(1 - w) * a + w * b`` on the unit circle."""
    a = math.radians(a_deg)
    b = math.radians(b_deg)
    s = (1 - w) * math.sin(a) + w * math.sin(b)
    c = (1 - w) * math.cos(a) + w * math.cos(b)
    if s == 0.0 and c == 0.0:
        return wrap360(a_deg)
    return wrap360(math.degrees(math.atan2(s, c)))


def estimate(reading: SensorReading, prev: StateEstimate | None,
             cfg: EstimatorConfig = EstimatorConfig()) -> StateEstimate:
    """Predict with GNSS velocity and gyro, then smooth toward the fixes.

    Position uses exponential smoothing with factor ``position_alpha``;
    heading uses the same idea on the unit circle. The first reading
    initialises the estimate.
    """
    speed = math.hypot(reading.gnss_vx_mps, reading.gnss_vy_mps)
    if prev is None:
        return StateEstimate(reading.gnss_x_m, reading.gnss_y_m, wrap360(reading.compass_deg),
                             speed, reading.gyro_dps, reading.t_ms)
    dt = (reading.t_ms - prev.t_ms) / 1000.0
    if dt < 0:
        raise ValueError("sensor readings must be time ordered")
    a = cfg.position_alpha
    px = prev.x_m + reading.gnss_vx_mps * dt
    py = prev.y_m + reading.gnss_vy_mps * dt
    x = px + a * (reading.gnss_x_m - px)
    y = py + a * (reading.gnss_y_m - py)
    h_pred = wrap360(prev.heading_deg + reading.gyro_dps * dt)
    h = circular_blend(h_pred, reading.compass_deg, cfg.heading_beta)
    surge = prev.surge_mps + cfg.speed_beta * (speed - prev.surge_mps)
    return StateEstimate(x, y, h, surge, reading.gyro_dps, reading.t_ms)


def navigate(est, plan: MissionPlan, progress: int) -> tuple[Setpoint, int]:
    """Steer for the first unvisited waypoint.

    A waypoint counts as visited once the estimate is within its
    acceptance radius. Returns the setpoint and the updated progress
    (index of the next unvisited waypoint); ``done`` after the last one.
    """
    wps = plan.waypoints
    while progress < len(wps):
        w = wps[progress]
        dx = w.position.x_m - est.x_m
        dy = w.position.y_m - est.y_m
        if math.hypot(dx, dy) <= w.acceptance_radius_m:
            progress += 1
            continue
        return Setpoint(bearing_deg(dx, dy), plan.cruise_speed_mps, progress), progress
    return Setpoint(est.heading_deg, 0.0, len(wps), done=True), progress


class Controller:
    """Heading PID -> steer, speed PI (+ feed-forward) -> throttle.

    The heading derivative acts on the measured yaw rate, so waypoint
    switches do not kick the output. Each integrator is frozen while its
    output is saturated in the direction of the error, and is bounded by
    ``integral_limit``.
    """

    def __init__(self, gains: ControllerGains = ControllerGains()):
        self.gains = gains
        self.heading_integral = 0.0
        self.speed_integral = 0.0

    def reset(self):
        self.heading_integral = 0.0
        self.speed_integral = 0.0

    def control(self, est, sp: Setpoint, dt_s: float) -> tuple[float, float]:
        if not dt_s > 0:
            raise ValueError("dt must be positive")
        g = self.gains
        lim = g.integral_limit

        e = wrap180(sp.heading_deg - est.heading_deg)
        u = g.heading_p * e + g.heading_i * self.heading_integral - g.heading_d * est.yaw_rate_dps
        steer = _clamp(u, -1.0, 1.0)
        if steer == u or (u > 0) != (e > 0):
            self.heading_integral = _clamp(self.heading_integral + e * dt_s, -lim, lim)

        ev = sp.speed_mps - est.surge_mps
        v = g.speed_ff * sp.speed_mps + g.speed_p * ev + g.speed_i * self.speed_integral
        throttle = _clamp(v, 0.0, g.max_throttle)
        if throttle == v or (v > 0) != (ev > 0):
            self.speed_integral = _clamp(self.speed_integral + ev * dt_s, -lim, lim)
        if sp.done:
            throttle = 0.0
        return throttle, steer


def control(est, sp: Setpoint, gains: ControllerGains, dt_s: float,
            controller: Controller | None = None) -> tuple[float, float]:
    """One controller update; pass ``controller`` to keep integrator state."""
    controller = controller or Controller(gains)
    return controller.control(est, sp, dt_s)


def mix(throttle: float, steer: float) -> tuple[float, float]:
    """Differential-thrust mixer. Positive steer turns to starboard."""
    left = _clamp(throttle + steer / 2.0, 0.0, 1.0)
    right = _clamp(throttle - steer / 2.0, 0.0, 1.0)
    return left, right


def step_dynamics(state: VehicleState, thrusts: tuple[float, float], current=(0.0, 0.0),
                  dt_s: float = 0.1, plant: PlantParams = PlantParams()) -> VehicleState:
    """Advance the plant one explicit-Euler step."""
    if not 0 < dt_s <= 1.0:
        raise ValueError("dt must be in (0, 1]")
    left, right = thrusts
    vx, vy = ground_velocity(state, current)

    u_target = plant.k_v_mps * (left + right) / 2.0
    du = _clamp((u_target - state.surge_mps) / plant.tau_v_s, -plant.max_accel_mps2, plant.max_accel_mps2)
    u = _clamp(state.surge_mps + du * dt_s, -plant.max_speed_mps, plant.max_speed_mps)
    if u_target == 0.0 and abs(u) < 1e-9:
        u = 0.0

    r_target = _clamp(plant.k_omega_dps * (left - right), -plant.max_yaw_rate_dps, plant.max_yaw_rate_dps)
    r = state.yaw_rate_dps + (r_target - state.yaw_rate_dps) / plant.tau_r_s * dt_s
    if r_target == 0.0 and abs(r) < 1e-9:
        r = 0.0

    return VehicleState(
        x_m=state.x_m + vx * dt_s,
        y_m=state.y_m + vy * dt_s,
        heading_deg=wrap360(state.heading_deg + state.yaw_rate_dps * dt_s),
        surge_mps=u,
        yaw_rate_dps=r,
        t_ms=state.t_ms + int(round(dt_s * 1000)),
    )


def heading_step_response(step_deg: float, gains: ControllerGains = ControllerGains(),
                          plant: PlantParams | None = None, duration_s: float = 30.0,
                          dt_s: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free closed-loop response to a heading setpoint step.

    The boat starts at cruise speed on heading 0 and is commanded to
    ``step_deg`` at t = 0. Returns ``(t_s, heading_deg)``, heading unwrapped
    relative to the start.
    """
    plant = plant or PlantParams.from_gains(gains)
    state = VehicleState(0.0, 0.0, 0.0, gains.cruise_speed_mps, 0.0, 0)
    ctrl = Controller(gains)
    sp = Setpoint(wrap360(step_deg), gains.cruise_speed_mps, 0)
    n = int(round(duration_s / dt_s))
    t = np.empty(n + 1)
    h = np.empty(n + 1)
    unwrapped = 0.0
    for i in range(n + 1):
        t[i] = state.t_ms / 1000.0
        h[i] = unwrapped
        est = StateEstimate(state.x_m, state.y_m, state.heading_deg, state.surge_mps,
                            state.yaw_rate_dps, state.t_ms)
        nxt = step_dynamics(state, mix(*ctrl.control(est, sp, dt_s)), dt_s=dt_s, plant=plant)
        unwrapped += wrap180(nxt.heading_deg - state.heading_deg)
        state = nxt
    return t, h


class OutsideDomain(ValueError):
    pass


def _echo_profile(depth_m: float, n: int, beam_id: int, spec: SonarSpec) -> bytes:
    """Cosmetic echo trace: water column, a bright bottom return, decay."""
    if n == 0:
        return b""
    rng_m = spec.side_range_m if beam_id in (3, 4) else max(2.0 * depth_m, 1.0)
    r = (np.arange(n) + 0.5) * rng_m / n
    bottom = depth_m
    s = np.where(r < bottom, 12.0, 230.0 * np.exp(-(r - bottom) / max(0.15 * rng_m, 0.1)) + 20.0)
    return np.clip(np.rint(s), 0, 255).astype(np.uint8).tobytes()


def sample_sonar(truth: TruthField, state: VehicleState, frame: LocalFrame,
                 rng: np.random.Generator | None = None, sigma_m: float = 0.0,
                 spec: SonarSpec = SONAR, sample_count: int = 32,
                 beam_id: int = 0) -> PingRecord:
    """One down-beam ping at the vehicle's true position."""
    if not truth.contains(state.x_m, state.y_m):
        raise OutsideDomain(f"vehicle at ({state.x_m:.1f}, {state.y_m:.1f}) outside the truth field")
    d = float(truth.depth(state.x_m, state.y_m))
    if sigma_m > 0:
        d += sigma_m * float(rng.standard_normal())
    depth_cm = int(round(100.0 * d))
    if depth_cm > MAX_DEPTH_CM:
        log.warning("depth %.2f m beyond the %.0f m limit, clamped", d, spec.max_depth_m)
    depth_cm = _clamp(depth_cm, 0, MAX_DEPTH_CM)
    ll = from_local(state.position, frame)
    freq = {0: 200, 1: 83}.get(beam_id, 455)
    return PingRecord(
        time_offset_ms=state.t_ms,
        lat_e7=int(round(ll.lat_deg * 1e7)),
        lon_e7=int(round(ll.lon_deg * 1e7)),
        heading_cdeg=int(round(state.heading_deg * 100.0)) % 36000,
        speed_cmps=_clamp(int(round(abs(state.surge_mps) * 100.0)), 0, 0xFFFF),
        depth_cm=depth_cm,
        freq_khz=freq,
        beam_id=beam_id,
        samples=_echo_profile(depth_cm / 100.0, sample_count, beam_id, spec),
    )


# ---- whole survey --------------------------------------------------------


class SimulationTimeout(RuntimeError):
    def __init__(self, result):
        self.result = result
        super().__init__(
            f"mission not finished after {result.elapsed_s:.0f} s; "
            f"last waypoint reached: {result.last_waypoint}"
        )


@dataclass
class SurveyResult:
    out_dir: Path
    files: list
    track_path: Path
    completed: bool
    last_waypoint: int
    n_pings: int
    elapsed_s: float
    track: np.ndarray = field(repr=False, default=None)
    channels: list = field(repr=False, default=None)


TRACK_COLUMNS = ("t_ms", "x", "y", "heading", "surge", "left", "right", "target_index")


def run_survey(plan: MissionPlan, truth: TruthField | None = None,
               gains: ControllerGains | None = None, cfg: SimConfig = SimConfig(),
               out_dir=None, raise_on_timeout: bool = True) -> SurveyResult:
    """Fly ``plan`` over ``truth`` and log the survey to ``out_dir``.

    Writes the DAT/SON/IDX triple and ``track.csv``. Identical inputs and
    seed give byte-identical files. ``truth`` and ``gains`` default to the
    values in ``cfg``.
    """
    truth = truth if truth is not None else cfg.truth
    gains = gains if gains is not None else cfg.gains
    if gains != cfg.gains:
        cfg = replace(cfg, gains=gains)
    plant = cfg.plant_params()
    frame = cfg.frame()
    rng = np.random.default_rng(cfg.seed)
    dt = cfg.dt_s
    dt_ms = int(round(dt * 1000))
    ping_every_ms = 1000.0 / cfg.ping_rate_hz

    wps = plan.xy()
    if cfg.start is not None:
        x0, y0 = cfg.start
    else:
        x0, y0 = wps[0]
    if cfg.start_heading_deg is not None:
        h0 = cfg.start_heading_deg
    elif len(wps) > 1:
        h0 = bearing_deg(wps[1][0] - wps[0][0], wps[1][1] - wps[0][1])
    else:
        h0 = 0.0
    state = VehicleState(float(x0), float(y0), wrap360(h0), 0.0, 0.0, 0)

    ctrl = Controller(gains)
    est = None
    progress = 0
    channels: list[list[PingRecord]] = [[] for _ in range(3 if cfg.side_scan else 1)]
    track = []
    next_ping = 0.0
    max_steps = int(math.ceil(cfg.timeout_s / dt))
    completed = False
    vel = ground_velocity(state, cfg.current_mps)

    for _ in range(max_steps + 1):
        reading = sense(state, vel, cfg.noise, rng)
        est = estimate(reading, est, cfg.estimator)
        sp, progress = navigate(est, plan, progress)
        if sp.done:
            completed = True
            break
        throttle, steer = ctrl.control(est, sp, dt)
        left, right = mix(throttle, steer)
        if state.t_ms >= next_ping:
            ping = sample_sonar(truth, state, frame, rng, cfg.noise.sonar_sigma_m,
                                sample_count=cfg.sample_count)
            channels[0].append(ping)
            if cfg.side_scan:
                for ch, beam in ((1, 3), (2, 4)):
                    channels[ch].append(replace(
                        ping, freq_khz=455, beam_id=beam,
                        samples=_echo_profile(ping.depth_m, cfg.sample_count, beam, SONAR)))
            next_ping += ping_every_ms
        track.append((state.t_ms, state.x_m, state.y_m, state.heading_deg, state.surge_mps,
                      left, right, sp.target_index))
        vel = ground_velocity(state, cfg.current_mps)
        state = step_dynamics(state, (left, right), cfg.current_mps, dt, plant)
    else:
        completed = False

    result = SurveyResult(
        out_dir=Path(out_dir) if out_dir is not None else None,
        files=[],
        track_path=None,
        completed=completed,
        last_waypoint=progress - 1,
        n_pings=len(channels[0]),
        elapsed_s=state.t_ms / 1000.0,
        track=np.array(track, dtype=float).reshape(-1, len(TRACK_COLUMNS)),
        channels=channels,
    )
    if out_dir is not None:
        out = Path(out_dir)
        header = SurveyHeader(channel_count=len(channels), epoch_start_ms=cfg.epoch_start_ms,
                              water_type=0, sound_speed_mps=1480.0, device_name="bathykit-sim")
        result.files = write_survey(header, channels, out)
        result.track_path = out / "track.csv"
        with open(result.track_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACK_COLUMNS)
            for t, x, y, h, u, l, r, k in track:
                w.writerow([t, f"{x:.3f}", f"{y:.3f}", f"{h:.2f}", f"{u:.3f}",
                            f"{l:.4f}", f"{r:.4f}", k])
    if not completed and raise_on_timeout:
        raise SimulationTimeout(result)
    return result
