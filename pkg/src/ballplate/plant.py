"""Ball-on-plate physics and trajectory metrics.

The plate tilts by the commanded roll/pitch (degrees, slew-rate limited),
and the ball rolls under the small-slope solid-sphere model

    x'' = rolling_factor * g * sin(pitch) - damping * x'
    y'' = -rolling_factor * g * sin(roll)  - damping * y'

so positive pitch tips the +x edge downhill and positive roll tips the +y
edge uphill.  Units are mm, mm/s and degrees; integration is fixed-step
classical Runge-Kutta with the plate angles ramping linearly inside each
step.  Leaving the plate sets a sticky ``ball_fell`` flag; the equations
keep integrating so metrics stay well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InsufficientData",
    "SimState",
    "PlantParams",
    "Trajectory",
    "step",
    "oscillation_band",
    "stabilization_time",
    "trajectory_to_csv",
    "write_trajectory_csv",
    "TRAJECTORY_CSV_HEADER",
]


class InsufficientData(ValueError):
    """Raised when a metric needs more trajectory than is available."""


@dataclass(frozen=True)
class SimState:
    """Instantaneous world state: ball kinematics plus plate attitude."""

    ball_pos: tuple[float, float]
    ball_vel: tuple[float, float]
    plate_angles: tuple[float, float]  # (roll, pitch) degrees
    time: float
    ball_fell: bool = False

    def __post_init__(self):
        pos = (float(self.ball_pos[0]), float(self.ball_pos[1]))
        vel = (float(self.ball_vel[0]), float(self.ball_vel[1]))
        ang = (float(self.plate_angles[0]), float(self.plate_angles[1]))
        t = float(self.time)
        if not all(math.isfinite(v) for v in pos + vel + ang + (t,)):
            raise ValueError("state values must be finite")
        object.__setattr__(self, "ball_pos", pos)
        object.__setattr__(self, "ball_vel", vel)
        object.__setattr__(self, "plate_angles", ang)
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "ball_fell", bool(self.ball_fell))

    @property
    def x(self) -> float:
        return self.ball_pos[0]

    @property
    def y(self) -> float:
        return self.ball_pos[1]

    @property
    def roll_deg(self) -> float:
        return self.plate_angles[0]

    @property
    def pitch_deg(self) -> float:
        return self.plate_angles[1]

    def radial(self) -> float:
        return math.hypot(self.ball_pos[0], self.ball_pos[1])


@dataclass(frozen=True)
class PlantParams:
    """Physical constants and discretization knobs.

    ``viscous_damping`` may be zero (frictionless tests); everything else
    must be positive, and the rolling factor is 1 for a sliding point mass.
    """

    plate_half_extent: float = 200.0
    gravity: float = 9810.0
    rolling_factor: float = 5.0 / 7.0
    viscous_damping: float = 0.2
    actuator_rate_limit: float = 120.0
    sensor_period: float = 1.0 / 30.0
    substep_target: float = 1e-3

    def __post_init__(self):
        vals = (
            self.plate_half_extent,
            self.gravity,
            self.rolling_factor,
            self.viscous_damping,
            self.actuator_rate_limit,
            self.sensor_period,
            self.substep_target,
        )
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("plant parameters must be finite")
        if min(self.plate_half_extent, self.gravity, self.actuator_rate_limit) <= 0:
            raise ValueError("extent, gravity and rate limit must be positive")
        if min(self.sensor_period, self.substep_target) <= 0:
            raise ValueError("sensor period and substep target must be positive")
        if not 0.0 < self.rolling_factor <= 1.0:
            raise ValueError("rolling factor must be in (0, 1]")
        if self.viscous_damping < 0.0:
            raise ValueError("viscous damping must be non-negative")


def step(state: SimState, commanded, params: PlantParams, dt: float) -> SimState:
    """Advance the world by ``dt`` seconds toward the commanded plate angles.

    The plate moves at constant angular rate, clipped to the actuator rate
    limit, reaching the command exactly at the end of the step when the
    limit allows.  The ball is integrated with classical fixed-step RK4 on
    substeps of roughly ``substep_target`` seconds.
    """
    dt = float(dt)
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError("dt must be positive")
    cmd_roll, cmd_pitch = float(commanded[0]), float(commanded[1])
    if not (math.isfinite(cmd_roll) and math.isfinite(cmd_pitch)):
        raise ValueError("commanded angles must be finite")
    roll0, pitch0 = state.plate_angles
    limit = params.actuator_rate_limit
    rate_roll = min(max((cmd_roll - roll0) / dt, -limit), limit)
    rate_pitch = min(max((cmd_pitch - pitch0) / dt, -limit), limit)

    n = max(1, round(dt / params.substep_target))
    h = dt / n
    k = params.rolling_factor * params.gravity
    damp = params.viscous_damping
    extent = params.plate_half_extent
    to_rad = math.pi / 180.0

    x, y = state.ball_pos
    vx, vy = state.ball_vel
    fell = state.ball_fell

    def accel(t_rel: float, ux: float, uy: float):
        pitch = (pitch0 + rate_pitch * t_rel) * to_rad
        roll = (roll0 + rate_roll * t_rel) * to_rad
        return k * math.sin(pitch) - damp * ux, -k * math.sin(roll) - damp * uy

    for m in range(n):
        t0 = m * h
        ax1, ay1 = accel(t0, vx, vy)
        ax2, ay2 = accel(t0 + 0.5 * h, vx + 0.5 * h * ax1, vy + 0.5 * h * ay1)
        ax3, ay3 = accel(t0 + 0.5 * h, vx + 0.5 * h * ax2, vy + 0.5 * h * ay2)
        ax4, ay4 = accel(t0 + h, vx + h * ax3, vy + h * ay3)
        x += h * vx + h * h / 6.0 * (ax1 + ax2 + ax3)
        y += h * vy + h * h / 6.0 * (ay1 + ay2 + ay3)
        vx += h / 6.0 * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4)
        vy += h / 6.0 * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4)
        if abs(x) > extent or abs(y) > extent:
            fell = True

    return SimState(
        ball_pos=(x, y),
        ball_vel=(vx, vy),
        plate_angles=(roll0 + rate_roll * dt, pitch0 + rate_pitch * dt),
        time=state.time + dt,
        ball_fell=fell,
    )


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled run history (one sample per sensor period)."""

    samples: tuple[SimState, ...]

    def __post_init__(self):
        samples = tuple(self.samples)
        if len(samples) < 2:
            raise ValueError("a trajectory needs at least two samples")
        if not all(isinstance(s, SimState) for s in samples):
            raise ValueError("samples must be SimState instances")
        times = np.array([s.time for s in samples])
        spacing = np.diff(times)
        if np.any(spacing <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if np.max(spacing) - np.min(spacing) > 1e-12:
            raise ValueError("samples must be uniformly spaced")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def duration(self) -> float:
        return self.samples[-1].time - self.samples[0].time

    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    def radial_distances(self) -> np.ndarray:
        return np.array([s.radial() for s in self.samples])

    @property
    def ball_fell(self) -> bool:
        return self.samples[-1].ball_fell


def oscillation_band(traj: Trajectory, window: float) -> float:
    """Mean radial distance from the centre over the final ``window`` seconds."""
    window = float(window)
    if not (math.isfinite(window) and window > 0.0):
        raise ValueError("window must be positive")
    if traj.duration <= window:
        raise InsufficientData(
            f"trajectory covers {traj.duration:.3f} s, need more than {window:.3f} s"
        )
    times = traj.times()
    cutoff = times[-1] - window
    radial = traj.radial_distances()
    return float(np.mean(radial[times >= cutoff - 1e-12]))


def stabilization_time(traj: Trajectory, band: float, hold: float):
    """First time from which the ball stays within ``band`` mm of the centre
    for at least ``hold`` seconds; None when that never happens."""
    band = float(band)
    hold = float(hold)
    if not (math.isfinite(band) and band > 0.0):
        raise ValueError("band must be positive")
    if not (math.isfinite(hold) and hold > 0.0):
        raise ValueError("hold must be positive")
    times = traj.times()
    inside = traj.radial_distances() < band
    start = None
    for i, ok in enumerate(inside):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if times[i - 1] - times[start] >= hold - 1e-12:
                return float(times[start])
            start = None
    if start is not None and times[-1] - times[start] >= hold - 1e-12:
        return float(times[start])
    return None


TRAJECTORY_CSV_HEADER = "time_s,x_mm,y_mm,vx,vy,roll_deg,pitch_deg,ball_fell"


def _fmt(v: float) -> str:
    return format(v, ".12g")


def trajectory_to_csv(traj: Trajectory) -> str:
    """Render a trajectory deterministically (12 significant digits)."""
    lines = [TRAJECTORY_CSV_HEADER]
    for s in traj.samples:
        lines.append(
            ",".join(
                (
                    _fmt(s.time),
                    _fmt(s.ball_pos[0]),
                    _fmt(s.ball_pos[1]),
                    _fmt(s.ball_vel[0]),
                    _fmt(s.ball_vel[1]),
                    _fmt(s.plate_angles[0]),
                    _fmt(s.plate_angles[1]),
                    "1" if s.ball_fell else "0",
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trajectory_to_csv(traj))
