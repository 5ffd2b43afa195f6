"""Scenario definition and the flat key-value config file format.

A scenario file is `key = value` lines with `#` comments.  Keys are
namespaced `sim.`, `cam.`, `ctrl.`, `cal.`; the camera namespace also carries
the detector/tracker knobs since they are camera-pipeline settings.  The
repeatable keys `robot` and `event` declare initial robots (meters) and the
scripted operator timeline (pixels):

    robot = <x_m> <y_m> <psi_rad>
    event = <time> select <x> <y>
    event = <time> target <x> <y>
    event = <time> path <node_spacing> <x1,y1> <x2,y2> ...
    event = <time> params <key>=<value> ...
    event = <time> start
    event = <time> stop

`observation = truth` bypasses the camera: the tracker is fed exact projected
positions (analysis mode; the default `camera` runs the full vision pipeline).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

from ..coils import CoilCalibration, max_reachable_magnitude
from ..control import ControllerConfig
from ..geometry import Vec2
from ..imaging import CameraConfig, DetectorParams
from ..simworld import SimConfig


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


# --- operator events -------------------------------------------------------

@dataclass(frozen=True)
class SelectRobot:
    x: float
    y: float


@dataclass(frozen=True)
class SetTarget:
    x: float
    y: float


@dataclass(frozen=True)
class SetPath:
    points: tuple[Vec2, ...]
    node_spacing: float

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigError("path needs at least 2 points")
        if self.node_spacing <= 0:
            raise ConfigError("node_spacing must be > 0")


@dataclass(frozen=True)
class SetParams:
    params: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class Stop:
    pass


Event = SelectRobot | SetTarget | SetPath | SetParams | Start | Stop

# Runtime-adjustable controller keys; anything else in a params event is
# rejected by the session.
ADJUSTABLE_PARAMS = ("samples_per_update", "arrival_epsilon", "field_magnitude",
                     "node_spacing", "min_speed")


@dataclass(frozen=True)
class TimedEvent:
    time: float
    event: Event


@dataclass(frozen=True)
class TrackerConfig:
    max_jump: float = 70.0        # px; default 3x robot diameter
    select_radius: float = 20.0   # px
    roi_half_width: float = 32.0  # px
    track_capacity: int = 10      # ring size; session wires this to ctrl N


@dataclass(frozen=True)
class Scenario:
    sim: SimConfig = dc_field(default_factory=SimConfig)
    cam: CameraConfig = dc_field(default_factory=CameraConfig)
    detector: DetectorParams = dc_field(default_factory=DetectorParams)
    tracker: TrackerConfig = dc_field(default_factory=TrackerConfig)
    ctrl: ControllerConfig = dc_field(default_factory=ControllerConfig)
    cal: CoilCalibration = dc_field(default_factory=CoilCalibration)
    seed: int = 0
    duration: float = 30.0
    observation: str = "camera"
    robots: tuple[tuple[float, float, float], ...] = ()   # (x_m, y_m, psi)
    events: tuple[TimedEvent, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be > 0")
        if self.observation not in ("camera", "truth"):
            raise ConfigError("observation must be 'camera' or 'truth'")
        k = self.cam.frame_dt / self.sim.dt_physics
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ConfigError(
                f"frame_dt/dt_physics = {k} must be a positive integer")
        if self.ctrl.field_magnitude > max_reachable_magnitude(self.cal) + 1e-15:
            raise ConfigError(
                f"field magnitude {self.ctrl.field_magnitude} T exceeds the "
                f"coil limit {max_reachable_magnitude(self.cal):.4g} T")
        if sorted(self.events, key=lambda e: e.time) != list(self.events):
            object.__setattr__(self, "events", tuple(
                sorted(self.events, key=lambda e: e.time)))

    @property
    def substeps_per_frame(self) -> int:
        return round(self.cam.frame_dt / self.sim.dt_physics)


# --- file format -----------------------------------------------------------

def _parse_event(value: str) -> TimedEvent:
    parts = value.split()
    if len(parts) < 2:
        raise ConfigError(f"event needs a time and a kind: {value!r}")
    t = float(parts[0])
    kind = parts[1]
    args = parts[2:]
    if kind == "select":
        ev = SelectRobot(float(args[0]), float(args[1]))
    elif kind == "target":
        ev = SetTarget(float(args[0]), float(args[1]))
    elif kind == "path":
        spacing = float(args[0])
        pts = tuple(Vec2(*(float(c) for c in p.split(","))) for p in args[1:])
        ev = SetPath(points=pts, node_spacing=spacing)
    elif kind == "params":
        pairs = []
        for item in args:
            key, _, val = item.partition("=")
            pairs.append((key, float(val)))
        ev = SetParams(params=tuple(pairs))
    elif kind == "start":
        ev = Start()
    elif kind == "stop":
        ev = Stop()
    else:
        raise ConfigError(f"unknown event kind {kind!r}")
    return TimedEvent(time=t, event=ev)


def parse_scenario(text: str, overrides: dict | None = None) -> Scenario:
    """Build a Scenario from config text; overrides win over file values."""
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        pairs.append((key.strip(), value.strip()))
    if overrides:
        pairs.extend((k, str(v)) for k, v in overrides.items())
    return _build_scenario(pairs)


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), overrides)


def _parse_bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes", "on"):
        return True
    if value.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


_SECTIONS = {
    "sim": (SimConfig, {
        "arena_width": float, "arena_height": float, "dt_physics": float,
        "speed_v0": float, "offset_delta": float, "align_tau": float,
        "rot_diff_Dr": float, "trans_diff_Dt": float, "intrinsic_omega": float,
        "moment_drift_rate": float, "robot_radius": float}),
    "cam": (CameraConfig, {
        "width_px": int, "height_px": int, "scale": float, "frame_dt": float,
        "psf_sigma": float, "background_level": float, "noise_sigma": float,
        "spot_amplitude": float}),
    "ctrl": (ControllerConfig, {
        "field_magnitude": float, "samples_per_update": int,
        "arrival_epsilon": float, "min_speed": float, "open_loop": _parse_bool}),
}

# Detector/tracker knobs live in the cam. namespace (camera pipeline settings).
_CAM_DETECTOR = {"threshold": float, "min_size": int, "max_size": int}
_CAM_TRACKER = {"max_jump": float, "select_radius": float,
                "roi_half_width": float}


def _build_scenario(pairs: list[tuple[str, str]]) -> Scenario:
    section_kwargs: dict[str, dict] = {"sim": {}, "cam": {}, "ctrl": {}}
    detector_kwargs: dict = {}
    tracker_kwargs: dict = {}
    cal_gain = None
    cal_max_current = None
    top: dict = {}
    robots: list[tuple[float, float, float]] = []
    events: list[TimedEvent] = []

    for key, value in pairs:
        try:
            if key == "robot":
                x, y, psi = (float(v) for v in value.split())
                robots.append((x, y, psi))
            elif key == "event":
                events.append(_parse_event(value))
            elif key == "seed":
                top["seed"] = int(value)
            elif key == "duration":
                top["duration"] = float(value)
            elif key == "observation":
                top["observation"] = value
            elif key == "cal.gain":
                gxx, gxy, gyx, gyy = (float(v) for v in value.split())
                cal_gain = ((gxx, gxy), (gyx, gyy))
            elif key == "cal.max_current":
                cal_max_current = float(value)
            elif "." in key:
                ns, _, name = key.partition(".")
                if ns == "cam" and name in _CAM_DETECTOR:
                    detector_kwargs[name] = _CAM_DETECTOR[name](value)
                elif ns == "cam" and name in _CAM_TRACKER:
                    tracker_kwargs[name] = _CAM_TRACKER[name](value)
                elif ns in _SECTIONS and name in _SECTIONS[ns][1]:
                    section_kwargs[ns][name] = _SECTIONS[ns][1][name](value)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc

    try:
        sim = SimConfig(**section_kwargs["sim"])
        cam = CameraConfig(**section_kwargs["cam"])
        detector_kwargs.setdefault("background", cam.background_level)
        detector = DetectorParams(**detector_kwargs)
        ctrl = ControllerConfig(**section_kwargs["ctrl"])
        cal_kwargs = {}
        if cal_gain is not None:
            cal_kwargs["gain"] = cal_gain
        if cal_max_current is not None:
            cal_kwargs["max_current"] = cal_max_current
        cal = CoilCalibration(**cal_kwargs)
        # Default tracking gate: 3x robot diameter, in pixels.
        tracker_kwargs.setdefault(
            "max_jump", 3.0 * 2.0 * sim.robot_radius * cam.scale)
        tracker = TrackerConfig(track_capacity=ctrl.samples_per_update,
                                **tracker_kwargs)
        return Scenario(sim=sim, cam=cam, detector=detector, tracker=tracker,
                        ctrl=ctrl, cal=cal, robots=tuple(robots),
                        events=tuple(events), **top)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --- dict round trip (record header echo) ----------------------------------

def _event_to_dict(te: TimedEvent) -> dict:
    ev = te.event
    if isinstance(ev, SelectRobot):
        body = {"kind": "select", "x": ev.x, "y": ev.y}
    elif isinstance(ev, SetTarget):
        body = {"kind": "target", "x": ev.x, "y": ev.y}
    elif isinstance(ev, SetPath):
        body = {"kind": "path", "spacing": ev.node_spacing,
                "points": [[p.x, p.y] for p in ev.points]}
    elif isinstance(ev, SetParams):
        body = {"kind": "params", "params": [[k, v] for k, v in ev.params]}
    elif isinstance(ev, Start):
        body = {"kind": "start"}
    else:
        body = {"kind": "stop"}
    return {"time": te.time, **body}


def _event_from_dict(d: dict) -> TimedEvent:
    kind = d["kind"]
    if kind == "select":
        ev: Event = SelectRobot(d["x"], d["y"])
    elif kind == "target":
        ev = SetTarget(d["x"], d["y"])
    elif kind == "path":
        ev = SetPath(points=tuple(Vec2(x, y) for x, y in d["points"]),
                     node_spacing=d["spacing"])
    elif kind == "params":
        ev = SetParams(params=tuple((k, v) for k, v in d["params"]))
    elif kind == "start":
        ev = Start()
    elif kind == "stop":
        ev = Stop()
    else:
        raise ConfigError(f"unknown event kind {kind!r}")
    return TimedEvent(time=d["time"], event=ev)


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "seed": sc.seed,
        "duration": sc.duration,
        "observation": sc.observation,
        "sim": {k: getattr(sc.sim, k) for k in _SECTIONS["sim"][1]},
        "cam": {k: getattr(sc.cam, k) for k in _SECTIONS["cam"][1]},
        "detector": {"threshold": sc.detector.threshold,
                     "min_size": sc.detector.min_size,
                     "max_size": sc.detector.max_size,
                     "background": sc.detector.background},
        "tracker": {"max_jump": sc.tracker.max_jump,
                    "select_radius": sc.tracker.select_radius,
                    "roi_half_width": sc.tracker.roi_half_width,
                    "track_capacity": sc.tracker.track_capacity},
        "ctrl": {k: getattr(sc.ctrl, k) for k in _SECTIONS["ctrl"][1]},
        "cal": {"gain": [list(row) for row in sc.cal.gain],
                "max_current": sc.cal.max_current},
        "robots": [list(r) for r in sc.robots],
        "events": [_event_to_dict(e) for e in sc.events],
    }


def scenario_from_dict(d: dict) -> Scenario:
    cal = d["cal"]
    return Scenario(
        sim=SimConfig(**d["sim"]),
        cam=CameraConfig(**d["cam"]),
        detector=DetectorParams(**d["detector"]),
        tracker=TrackerConfig(**d["tracker"]),
        ctrl=ControllerConfig(**d["ctrl"]),
        cal=CoilCalibration(gain=tuple(tuple(row) for row in cal["gain"]),
                            max_current=cal["max_current"]),
        seed=d["seed"],
        duration=d["duration"],
        observation=d["observation"],
        robots=tuple(tuple(r) for r in d["robots"]),
        events=tuple(_event_from_dict(e) for e in d["events"]),
    )


def apply_param_overrides(scenario: Scenario, params: dict[str, float],
                          node_spacing_holder: dict) -> Scenario:
    """Apply a whitelisted runtime params update; raises ConfigError otherwise."""
    ctrl_updates = {}
    for key, value in params.items():
        if key not in ADJUSTABLE_PARAMS:
            raise ConfigError(f"parameter {key!r} is not adjustable")
        if key == "node_spacing":
            if value <= 0:
                raise ConfigError("node_spacing must be > 0")
            node_spacing_holder["node_spacing"] = float(value)
        elif key == "samples_per_update":
            ctrl_updates[key] = int(value)
        else:
            ctrl_updates[key] = float(value)
    if not ctrl_updates:
        return scenario
    try:
        new_ctrl = replace(scenario.ctrl, **ctrl_updates)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if new_ctrl.field_magnitude > max_reachable_magnitude(scenario.cal) + 1e-15:
        raise ConfigError("field magnitude exceeds the coil limit")
    tracker = replace(scenario.tracker,
                      track_capacity=new_ctrl.samples_per_update)
    return replace(scenario, ctrl=new_ctrl, tracker=tracker)


