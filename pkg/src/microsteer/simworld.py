"""Ground-truth dynamics of self-propelled paramagnetic microrobots.

Overdamped active-particle model with a magnetic alignment torque:

    psi  <- psi + [ (1/tau) sin(phi_B - psi)   (field on, tau > 0;
                                                tau = 0 snaps psi to phi_B)
                  + omega0                      (field off only) ] dt
                + sqrt(2 Dr dt) eta
    delta <- delta + sqrt(drift_rate dt) eta'   (optional moment drift)
    pos  <- pos + v0 * u(psi + delta) dt + sqrt(2 Dt dt) (xi_x, xi_y)

with reflective arena walls.  Fixed-step Euler-Maruyama; the intrinsic
angular drift omega0 (which produces the curved field-free paths) is
suppressed while a field is applied, since alignment overrides it.

Arena coordinates are meters, origin at a corner, x right / y down to match
image coordinates one scale factor away.

Determinism: a world advanced with the same config, seed and field sequence
reproduces the identical trajectory bit for bit.  Noise draw order per
substep is [eta, eta' (only if moment drift enabled), xi_x, xi_y] per robot,
batched per advance() call; `advance(world, field, n)` consumes the stream
exactly like n successive `step` calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import Vec2, from_angle, wrap_angle

KB = 1.380649e-23  # Boltzmann constant, J/K


class OutOfArena(ValueError):
    """Robot position outside the arena bounds."""


class NonPositiveInput(ValueError):
    """Physical parameter that must be > 0 was not."""


@dataclass(frozen=True)
class SimConfig:
    arena_width: float = 1.28e-4      # m
    arena_height: float = 1.28e-4     # m
    dt_physics: float = 0.005         # s
    speed_v0: float = 10e-6           # m/s, catalytic self-propulsion
    offset_delta: float = 0.0         # rad, moment axis -> propulsion axis
    align_tau: float = 0.0            # s, field alignment relaxation (0 = instant)
    rot_diff_Dr: float = 0.0          # rad^2/s
    trans_diff_Dt: float = 0.0        # m^2/s
    intrinsic_omega: float = 0.0      # rad/s, field-free angular drift
    moment_drift_rate: float = 0.0    # rad^2/s equivalent; 0 disables
    robot_radius: float = 2.35e-6     # m

    def __post_init__(self):
        if self.dt_physics <= 0:
            raise NonPositiveInput("dt_physics must be > 0")
        if self.arena_width <= 0 or self.arena_height <= 0:
            raise NonPositiveInput("arena dimensions must be > 0")
        if self.speed_v0 < 0:
            raise ValueError("speed_v0 must be >= 0")
        if self.align_tau < 0:
            raise ValueError("align_tau must be >= 0")
        if self.rot_diff_Dr < 0 or self.trans_diff_Dt < 0:
            raise ValueError("diffusion coefficients must be >= 0")
        if self.moment_drift_rate < 0:
            raise ValueError("moment_drift_rate must be >= 0")


@dataclass
class RobotState:
    position: Vec2
    psi: float          # moment orientation, (-pi, pi]
    delta: float        # current propulsion offset, (-pi, pi]

    def propulsion_angle(self) -> float:
        return wrap_angle(self.psi + self.delta)

    def propulsion_dir(self) -> Vec2:
        return from_angle(self.psi + self.delta)


@dataclass(frozen=True)
class FieldCommand:
    """Planar field: unit direction plus magnitude in tesla."""

    direction: Vec2
    magnitude: float

    def __post_init__(self):
        if abs(self.direction.norm() - 1.0) > 1e-9:
            raise ValueError("field direction must be a unit vector")
        if not (self.magnitude >= 0.0 and math.isfinite(self.magnitude)):
            raise ValueError("field magnitude must be finite and >= 0")

    def angle(self) -> float:
        return self.direction.angle()


@dataclass
class World:
    config: SimConfig
    robots: list[RobotState]
    time: float = 0.0
    rng: np.random.Generator = dc_field(default_factory=np.random.default_rng)


def create_world(config: SimConfig, seed: int,
                 initial_robots: list[tuple[Vec2, float]]) -> World:
    """Seeded world with robots at (position, psi); delta starts at config.offset_delta."""
    robots = []
    for pos, psi in initial_robots:
        if not (0.0 <= pos.x <= config.arena_width
                and 0.0 <= pos.y <= config.arena_height):
            raise OutOfArena(
                f"robot at ({pos.x}, {pos.y}) outside "
                f"{config.arena_width} x {config.arena_height} arena")
        robots.append(RobotState(position=pos, psi=wrap_angle(psi),
                                 delta=wrap_angle(config.offset_delta)))
    return World(config=config, robots=robots, time=0.0,
                 rng=np.random.default_rng(seed))


def _reflect(x: float, hi: float) -> float:
    # Fold back into [0, hi]; loop guards against steps larger than the arena.
    while x < 0.0 or x > hi:
        if x < 0.0:
            x = -x
        else:
            x = 2.0 * hi - x
    return x


def advance(world: World, field: FieldCommand | None, n_steps: int) -> World:
    """Advance n_steps Euler-Maruyama substeps under a constant field (in place)."""
    cfg = world.config
    dt = cfg.dt_physics
    drift_on = cfg.moment_drift_rate > 0.0
    cols = 4 if drift_on else 3
    draws = world.rng.standard_normal((n_steps, len(world.robots), cols))

    rot_amp = math.sqrt(2.0 * cfg.rot_diff_Dr * dt)
    trans_amp = math.sqrt(2.0 * cfg.trans_diff_Dt * dt)
    drift_amp = math.sqrt(cfg.moment_drift_rate * dt) if drift_on else 0.0
    phi_b = field.direction.angle() if field is not None else 0.0

    for r_idx, robot in enumerate(world.robots):
        x, y = robot.position.x, robot.position.y
        psi, delta = robot.psi, robot.delta
        for i in range(n_steps):
            # tolist() keeps the state arithmetic in plain Python floats.
            row = draws[i, r_idx].tolist()
            if field is not None:
                if cfg.align_tau == 0.0:
                    psi = phi_b
                else:
                    psi += math.sin(phi_b - psi) / cfg.align_tau * dt
            else:
                psi += cfg.intrinsic_omega * dt
            psi = wrap_angle(psi + rot_amp * row[0])
            if drift_on:
                delta = wrap_angle(delta + drift_amp * row[1])
            heading = psi + delta
            x += cfg.speed_v0 * math.cos(heading) * dt + trans_amp * row[cols - 2]
            y += cfg.speed_v0 * math.sin(heading) * dt + trans_amp * row[cols - 1]
            x = _reflect(x, cfg.arena_width)
            y = _reflect(y, cfg.arena_height)
        robot.position = Vec2(x, y)
        robot.psi = psi
        robot.delta = delta
    world.time += n_steps * dt
    return world


def step(world: World, field: FieldCommand | None = None) -> World:
    """Single Euler-Maruyama substep over dt_physics (in place)."""
    return advance(world, field, 1)


def default_diffusion(radius: float, temperature: float,
                      viscosity: float) -> tuple[float, float]:
    """Stokes-Einstein (Dr, Dt) for a sphere: kT/(8 pi eta a^3), kT/(6 pi eta a)."""
    if radius <= 0 or temperature <= 0 or viscosity <= 0:
        raise NonPositiveInput("radius, temperature and viscosity must be > 0")
    kt = KB * temperature
    dr = kt / (8.0 * math.pi * viscosity * radius ** 3)
    dt = kt / (6.0 * math.pi * viscosity * radius)
    return dr, dt
