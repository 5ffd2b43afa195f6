"""Field-retargeting controller and node-based trajectory following.

The steering problem: the robot propels itself at an unknown body-fixed angle
from its magnetic moment, so pointing the field at the target does not move
the robot toward the target.  The controller

  1. bootstraps with a field along +x (direction chosen arbitrarily),
  2. measures the offset as the signed angle from the applied field direction
     to the observed velocity direction,
  3. commands a new field equal to the target direction rotated back by that
     offset, so the offset carries the motion onto the target line,

and repeats every `samples_per_update` tracked positions.  The offset is
computed between the applied field and the measured velocity; the correction
rotates the target vector by minus that angle.  With an instantly aligning,
noise-free robot one update is exact: the very next motion direction is the
target direction.

Trajectory following walks an ordered node list, handing each node to the
same retargeting law and advancing when the robot is within the arrival
threshold.  Reaching the final node switches to station keeping: the law
keeps running on the final node, continuously turning the perpetually
self-propelled robot back toward it.

Phases: idle -> bootstrapping (field +x) -> correcting (after the first
retarget) -> station_keeping (target or final node reached).  A lost track
forces lost and drops the field; a fresh robot selection returns to idle.
A field is applied exactly when the phase is not idle/lost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .geometry import Vec2, ZeroVector, rotate, signed_angle, unit
from .imaging import Track, estimate_velocity
from .simworld import FieldCommand

BOOTSTRAP_DIRECTION = Vec2(1.0, 0.0)


class StalledRobot(RuntimeError):
    """Measured speed too low to trust the velocity direction."""


class TrackLost(RuntimeError):
    """Controller asked to act on a lost track."""


class EmptyPlan(ValueError):
    """Trajectory plan with no nodes."""


class Phase(enum.Enum):
    IDLE = "idle"
    BOOTSTRAPPING = "bootstrapping"
    CORRECTING = "correcting"
    STATION_KEEPING = "station_keeping"
    LOST = "lost"


@dataclass(frozen=True)
class ControllerConfig:
    field_magnitude: float = 2e-3       # tesla
    samples_per_update: int = 10        # tracked positions between field updates
    arrival_epsilon: float = 10.0       # px
    min_speed: float = 2.0              # px/s; below this the direction is noise
    open_loop: bool = False             # baseline: hold the bootstrap field forever

    def __post_init__(self):
        if self.field_magnitude <= 0:
            raise ValueError("field_magnitude must be > 0")
        if self.samples_per_update < 2:
            raise ValueError("samples_per_update must be >= 2")
        if self.arrival_epsilon <= 0:
            raise ValueError("arrival_epsilon must be > 0")


@dataclass(frozen=True)
class ControllerState:
    phase: Phase = Phase.IDLE
    applied_field: FieldCommand | None = None
    samples_since_update: int = 0
    seen_samples: int = 0               # track.sample_count at last step

    def __post_init__(self):
        field_off = self.applied_field is None
        if field_off != (self.phase in (Phase.IDLE, Phase.LOST)):
            raise ValueError(f"applied_field inconsistent with phase {self.phase}")


@dataclass
class TrajectoryPlan:
    nodes: list[Vec2]
    current_index: int = 0
    epsilon: float = 10.0

    def __post_init__(self):
        if not self.nodes:
            raise EmptyPlan("trajectory plan needs at least one node")

    @property
    def done(self) -> bool:
        return self.current_index >= len(self.nodes)


def bootstrap_field(config: ControllerConfig) -> FieldCommand:
    """Initial field along +x, applied before the offset is known."""
    return FieldCommand(direction=BOOTSTRAP_DIRECTION,
                        magnitude=config.field_magnitude)


def begin_bootstrap(track: Track, config: ControllerConfig) -> ControllerState:
    """Arm the controller on a fresh target: +x field, sample counter reset."""
    return ControllerState(phase=Phase.BOOTSTRAPPING,
                           applied_field=bootstrap_field(config),
                           samples_since_update=0,
                           seen_samples=track.sample_count)


def retarget_field(applied: FieldCommand, velocity: Vec2, target_vec: Vec2,
                   config: ControllerConfig) -> FieldCommand:
    """One offset-corrected field update.

    theta = signed angle from the applied field direction to the measured
    velocity direction; the new field is the target direction rotated by
    -theta.  Magnitude is unchanged (direction-only control).

    Raises StalledRobot when |velocity| < min_speed: the caller should hold
    the current field rather than steer on a noise direction.
    """
    if velocity.norm() < config.min_speed:
        raise StalledRobot(f"speed {velocity.norm():.3g} below min_speed")
    theta = signed_angle(applied.direction, velocity)
    new_dir = rotate(unit(target_vec), -theta)
    return FieldCommand(direction=unit(new_dir), magnitude=applied.magnitude)


def steer_step(ctrl: ControllerState, track: Track, target: Vec2,
                    config: ControllerConfig) -> tuple[ControllerState, FieldCommand | None]:
    """Advance the retargeting state machine by one camera frame.

    Counts freshly observed track samples; every samples_per_update of them,
    retargets using the averaged velocity and the vector from the latest
    tracked position to the target.  Otherwise (and on a stalled or not yet
    estimable velocity) the held field is returned unchanged.
    """
    if track.is_lost:
        return (ControllerState(phase=Phase.LOST, applied_field=None),
                None)
    if ctrl.phase in (Phase.IDLE, Phase.LOST):
        return ctrl, ctrl.applied_field

    fresh = track.sample_count - ctrl.seen_samples
    counter = ctrl.samples_since_update + fresh
    if config.open_loop or counter < config.samples_per_update:
        return (replace(ctrl, samples_since_update=counter,
                        seen_samples=track.sample_count),
                ctrl.applied_field)

    # Cadence reached: retarget if a usable velocity exists, else hold and
    # wait another full cadence.
    next_phase = ctrl.phase
    field = ctrl.applied_field
    velocity = estimate_velocity(track)
    if velocity is not None:
        try:
            field = retarget_field(ctrl.applied_field, velocity,
                                   target - track.latest_position, config)
            if next_phase is Phase.BOOTSTRAPPING:
                next_phase = Phase.CORRECTING
        except (StalledRobot, ZeroVector):
            pass
    return (ControllerState(phase=next_phase, applied_field=field,
                            samples_since_update=0,
                            seen_samples=track.sample_count),
            field)


def advance_plan(plan: TrajectoryPlan,
                    position: Vec2) -> tuple[TrajectoryPlan, Vec2 | None]:
    """Advance past every node within epsilon; return the current node target.

    Returns (plan, None) once all nodes are consumed — the caller switches to
    station keeping on the final node.  current_index never decreases.
    """
    if not plan.nodes:
        raise EmptyPlan("trajectory plan needs at least one node")
    while (plan.current_index < len(plan.nodes)
           and position.distance_to(plan.nodes[plan.current_index]) < plan.epsilon):
        plan.current_index += 1
    if plan.done:
        return plan, None
    return plan, plan.nodes[plan.current_index]


def station_keep(ctrl: ControllerState, track: Track, final_target: Vec2,
                 config: ControllerConfig) -> tuple[ControllerState, FieldCommand | None]:
    """Keep re-steering toward a reached target; same law as steer_step."""
    if ctrl.phase is not Phase.STATION_KEEPING:
        raise ValueError("station_keep requires phase STATION_KEEPING")
    return steer_step(ctrl, track, final_target, config)
