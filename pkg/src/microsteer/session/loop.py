"""The authoritative closed-loop frame cycle.

Per camera frame, in fixed order: physics substeps (under the field commanded
at the previous frame — one frame of actuation latency, matching a real
camera -> computation -> coils pipeline), render, track, apply due operator
events, controller step, coil validation, snapshot.  Everything is driven by
two deterministic streams derived from the scenario seed (plant noise and
camera noise), so identical scenarios and event streams reproduce identical
runs bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import replace

import numpy as np

from ..coils import currents_for_field, max_reachable_magnitude
from ..control import (ControllerState, Phase, TrajectoryPlan, steer_step,
                       advance_plan, begin_bootstrap, station_keep)
from ..geometry import Vec2
from ..imaging import (Frame, Track, associate, detect_blobs, estimate_velocity,
                       render_frame, select_robot_at, update_roi, write_pgm)
from ..simworld import advance, create_world
from .config import (ConfigError, Scenario, SelectRobot, SetParams, SetPath,
                     SetTarget, Start, Stop, TimedEvent, scenario_to_dict)
from .paths import resample_path
from .record import MetricsReport, metrics

PROTOCOL_VERSION = 1


class EventRejected(ValueError):
    """Operator event refused; the session keeps running."""


class Session:
    """One live closed-loop run: plant, camera, tracker, controller, coils."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        world_seed, cam_seed = (
            int(s) for s in np.random.SeedSequence(scenario.seed)
            .generate_state(2, np.uint64))
        self.world = create_world(
            scenario.sim, world_seed,
            [(Vec2(x, y), psi) for x, y, psi in scenario.robots])
        self.cam_rng = np.random.default_rng(cam_seed)

        self.ctrl_cfg = scenario.ctrl
        self.tracker_cfg = scenario.tracker
        self.node_spacing = 40.0

        self.frame_index = 0
        self.commanded = None            # field applied during the NEXT frame
        self.track: Track | None = None
        self._next_track_id = 1
        self.ctrl = ControllerState()
        self.target: Vec2 | None = None
        self.plan: TrajectoryPlan | None = None
        self.truth_idx = 0
        self.latest_frame: Frame | None = None
        self._scheduled = list(scenario.events)
        self._live_queue: list = []
        self.event_results: list[tuple[object, bool, str]] = []
        self._plan_nodes_echo: list | None = None
        self.applied_events: list[TimedEvent] = []
        self.time_to_target: float | None = None

    # -- frame cycle --------------------------------------------------------

    def queue_event(self, event) -> None:
        """Queue a live operator event; applied at the next frame boundary.

        Outcomes are published per frame in event_results (server sends acks).
        Queued events are never dropped.
        """
        self._live_queue.append(event)

    def step_frame(self) -> dict:
        """Advance one camera frame; returns the snapshot row."""
        sc = self.scenario
        self.frame_index += 1
        advance(self.world, self.commanded, sc.substeps_per_frame)
        t = self.world.time

        if sc.observation == "camera":
            self.latest_frame = render_frame(self.world, sc.cam, self.cam_rng)
        self._update_track(t)

        # Scripted events are part of the scenario contract: a misfire is a
        # scenario bug and aborts the run.  Live events reject gracefully.
        while self._scheduled and self._scheduled[0].time <= t:
            te = self._scheduled.pop(0)
            self._apply_event(te.event, t)
        self.event_results = []
        if self._live_queue:
            pending, self._live_queue = self._live_queue, []
            for ev in pending:
                try:
                    self._apply_event(ev, t)
                    self.event_results.append((ev, True, "ok"))
                except (EventRejected, ConfigError) as exc:
                    self.event_results.append((ev, False, str(exc)))

        self._controller_step()
        if self.commanded is not None:
            currents_for_field(self.commanded, sc.cal)
        return self._snapshot(t)

    def _update_track(self, t: float) -> None:
        if self.track is None or self.track.is_lost:
            return
        if self.scenario.observation == "truth":
            self.track.add_sample(t, self._project_truth())
            return
        roi = update_roi(self.track, self.latest_frame.width,
                         self.latest_frame.height)
        dets = detect_blobs(self.latest_frame, self.scenario.detector, roi)
        det = associate(self.track, dets, self.tracker_cfg.max_jump)
        if det is None:
            self.track.missed += 1
        else:
            self.track.add_sample(t, det.centroid)

    def _project_truth(self) -> Vec2:
        robot = self.world.robots[self.truth_idx]
        s = self.scenario.cam.scale
        return Vec2(robot.position.x * s, robot.position.y * s)

    # -- operator events ----------------------------------------------------

    def _apply_event(self, event, t: float) -> None:
        if isinstance(event, SelectRobot):
            self._do_select(Vec2(event.x, event.y))
        elif isinstance(event, SetTarget):
            self._require_track()
            self.target = Vec2(event.x, event.y)
            self.plan = None
            self._plan_nodes_echo = None
            self._arm_controller()
        elif isinstance(event, SetPath):
            self._require_track()
            nodes = resample_path(list(event.points), event.node_spacing)
            self.plan = TrajectoryPlan(nodes=nodes, current_index=0,
                                       epsilon=self.ctrl_cfg.arrival_epsilon)
            self._plan_nodes_echo = [[p.x, p.y] for p in nodes]
            self.target = None
            self._arm_controller()
        elif isinstance(event, SetParams):
            self._apply_params(dict(event.params))
        elif isinstance(event, Start):
            self._require_track()
            if self.target is None and self.plan is None:
                raise EventRejected("nothing to resume: no target or path set")
            if self.ctrl.phase is Phase.IDLE:
                self.ctrl = begin_bootstrap(self.track, self.ctrl_cfg)
        elif isinstance(event, Stop):
            self.ctrl = ControllerState()
            self.commanded = None
        else:
            raise EventRejected(f"unknown event {event!r}")
        self.applied_events.append(TimedEvent(time=t, event=event))

    def _require_track(self) -> None:
        if self.track is None:
            raise EventRejected("no robot selected")
        if self.track.is_lost:
            raise EventRejected("track lost; select a robot again")

    def _do_select(self, cursor: Vec2) -> None:
        if self.scenario.observation == "truth":
            s = self.scenario.cam.scale
            candidates = [(Vec2(r.position.x * s, r.position.y * s), i)
                          for i, r in enumerate(self.world.robots)]
            hit = None
            best = self.tracker_cfg.select_radius
            for pos, i in candidates:
                d = pos.distance_to(cursor)
                if d <= best:
                    hit, best = (pos, i), d
            if hit is None:
                raise EventRejected("no robot near cursor")
            position, self.truth_idx = hit
        else:
            dets = detect_blobs(self.latest_frame, self.scenario.detector)
            det = select_robot_at(cursor, dets, self.tracker_cfg.select_radius)
            if det is None:
                raise EventRejected("no robot near cursor")
            position = det.centroid
            s = self.scenario.cam.scale
            self.truth_idx = min(
                range(len(self.world.robots)),
                key=lambda i: Vec2(self.world.robots[i].position.x * s,
                                   self.world.robots[i].position.y * s)
                .distance_to(position))
        track = Track(id=self._next_track_id,
                      capacity=self.tracker_cfg.track_capacity,
                      roi_half_width=self.tracker_cfg.roi_half_width)
        self._next_track_id += 1
        track.add_sample(self.world.time, position)
        self.track = track
        self.ctrl = ControllerState()
        self.commanded = None
        self.target = None
        self.plan = None
        self._plan_nodes_echo = None

    def _arm_controller(self) -> None:
        # Bootstrap only from a field-off state; an already-applied field has
        # a learned offset, so switching targets keeps it and keeps correcting.
        if self.ctrl.phase in (Phase.IDLE, Phase.LOST):
            self.ctrl = begin_bootstrap(self.track, self.ctrl_cfg)
        elif self.ctrl.phase is Phase.STATION_KEEPING:
            self.ctrl = replace(self.ctrl, phase=Phase.CORRECTING)
        self.time_to_target = None

    def _apply_params(self, params: dict) -> None:
        updates = {}
        for key, value in params.items():
            if key == "node_spacing":
                if value <= 0:
                    raise EventRejected("node_spacing must be > 0")
                self.node_spacing = float(value)
            elif key in ("samples_per_update",):
                updates[key] = int(value)
            elif key in ("arrival_epsilon", "field_magnitude", "min_speed"):
                updates[key] = float(value)
            else:
                raise EventRejected(f"parameter {key!r} is not adjustable")
        if not updates:
            return
        try:
            new_cfg = replace(self.ctrl_cfg, **updates)
        except ValueError as exc:
            raise EventRejected(str(exc)) from exc
        if new_cfg.field_magnitude > max_reachable_magnitude(self.scenario.cal) + 1e-15:
            raise EventRejected("field magnitude exceeds the coil limit")
        self.ctrl_cfg = new_cfg
        if self.track is not None:
            self.track.capacity = new_cfg.samples_per_update
            while len(self.track.history) > self.track.capacity:
                self.track.history.popleft()

    # -- controller ---------------------------------------------------------

    def _controller_step(self) -> None:
        if self.track is None or self.ctrl.phase is Phase.IDLE:
            self.commanded = None
            return
        if self.track.is_lost:
            self.ctrl = ControllerState(phase=Phase.LOST)
            self.commanded = None
            return
        if self.ctrl.phase is Phase.LOST:
            self.commanded = None
            return

        pos = self.track.latest_position
        if self.plan is not None:
            self.plan, node_target = advance_plan(self.plan, pos)
            if node_target is None:
                if self.ctrl.phase in (Phase.BOOTSTRAPPING, Phase.CORRECTING):
                    self.ctrl = replace(self.ctrl, phase=Phase.STATION_KEEPING)
                effective = self.plan.nodes[-1]
            else:
                effective = node_target
        elif self.target is not None:
            effective = self.target
            if (self.ctrl.phase in (Phase.BOOTSTRAPPING, Phase.CORRECTING)
                    and pos.distance_to(self.target) < self.ctrl_cfg.arrival_epsilon):
                self.ctrl = replace(self.ctrl, phase=Phase.STATION_KEEPING)
        else:
            # Armed with no objective (cleared by events); drop the field.
            self.ctrl = ControllerState()
            self.commanded = None
            return

        if self.ctrl.phase is Phase.STATION_KEEPING:
            self.ctrl, self.commanded = station_keep(
                self.ctrl, self.track, effective, self.ctrl_cfg)
        else:
            self.ctrl, self.commanded = steer_step(
                self.ctrl, self.track, effective, self.ctrl_cfg)

    # -- snapshot -----------------------------------------------------------

    def _final_target(self) -> Vec2 | None:
        if self.plan is not None:
            return self.plan.nodes[-1]
        return self.target

    def _snapshot(self, t: float) -> dict:
        truth = self.world.robots[self.truth_idx] if self.world.robots else None
        track = None
        if self.track is not None:
            vel = estimate_velocity(self.track)
            track = {
                "x": self.track.latest_position.x,
                "y": self.track.latest_position.y,
                "vx": vel.x if vel else None,
                "vy": vel.y if vel else None,
                "missed": self.track.missed,
                "lost": self.track.is_lost,
            }
            final = self._final_target()
            if (self.time_to_target is None and final is not None
                    and self.ctrl.phase is not Phase.IDLE
                    and self.track.latest_position.distance_to(final)
                    < self._arrival_eps()):
                self.time_to_target = t
        field = None
        if self.commanded is not None:
            field = {"bx": self.commanded.direction.x,
                     "by": self.commanded.direction.y,
                     "mag": self.commanded.magnitude}
        plan = None
        if self.plan is not None:
            plan = {"nodes": self._plan_nodes_echo,
                    "index": self.plan.current_index}
        return {
            "v": PROTOCOL_VERSION,
            "type": "snap",
            "frame": self.frame_index,
            "t": t,
            "truth": None if truth is None else {
                "x": truth.position.x, "y": truth.position.y,
                "psi": truth.psi, "delta": truth.delta},
            "track": track,
            "phase": self.ctrl.phase.value,
            "field": field,
            "target": None if self.target is None else [self.target.x, self.target.y],
            "plan": plan,
            "metrics": {
                "time_to_target": self.time_to_target,
                "nodes_completed": self.plan.current_index if self.plan else 0},
        }

    def _arrival_eps(self) -> float:
        if self.plan is not None:
            return self.plan.epsilon
        return self.ctrl_cfg.arrival_epsilon


def run_headless(scenario: Scenario, out_path=None, csv_path=None,
                 dump_frames_dir=None, keep_rows: bool = True,
                 stop_after_arrival: float | None = None
                 ) -> tuple[MetricsReport, list[dict]]:
    """Run a scripted scenario to completion; optionally record to disk.

    stop_after_arrival trims the run that many simulated seconds after the
    first arrival at the final target (batch-study convenience; None runs the
    full duration).
    """
    session = Session(scenario)
    n_frames = round(scenario.duration / scenario.cam.frame_dt)
    if n_frames < 1:
        raise ConfigError("duration shorter than one frame")

    rows: list[dict] = []
    out_fh = open(out_path, "w", encoding="utf-8") if out_path else None
    try:
        if out_fh:
            header = {"v": PROTOCOL_VERSION, "type": "header",
                      "scenario": scenario_to_dict(scenario)}
            out_fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for _ in range(n_frames):
            row = session.step_frame()
            if keep_rows:
                rows.append(row)
            if out_fh:
                out_fh.write(json.dumps(row, separators=(",", ":")) + "\n")
            if dump_frames_dir and session.latest_frame is not None:
                write_pgm(session.latest_frame,
                          f"{dump_frames_dir}/frame_{session.frame_index:06d}.pgm")
            if (stop_after_arrival is not None
                    and session.time_to_target is not None
                    and row["t"] >= session.time_to_target + stop_after_arrival):
                break
    finally:
        if out_fh:
            out_fh.close()

    report = metrics(rows) if keep_rows else MetricsReport()
    if csv_path:
        from .record import write_csv
        write_csv(rows, csv_path)
    return report, rows
