"""Closed-loop orchestration: sense, control, tilt, integrate, report.

Loop wiring (shared by every controller):

- The control loop runs at the plant's sensor period; each acquired frame
  yields exactly one controller evaluation and one plate command.
- The ball position is measured either directly from the plant state or by
  rendering a synthetic camera frame and detecting the ball in it.
- The per-axis derivative input is the backward difference of the measured
  position over one control period (zero on the first frame); the radial
  error input is the measured distance from the plate centre.
- Sign convention, fixed for all controllers: a positive x measurement
  produces a negative roll-channel output under the shipped rule tables.
  The roll-channel output drives the plate pitch command and the pitch
  channel (the same rule base evaluated on the y axis) drives the negated
  roll command, so both axes accelerate the ball back toward the centre.
- Commanded plate angles are clamped to the controller's declared output
  universe before being handed to the actuators.

Per control step the harness also solves the six horn angles at the
commanded plate pose and evaluates the servo load torque of each leg on a
planar two-link (horn plus rod) model moving through the solved angle
series.  Torque is reported in N mm; internally the rigid-body module
works in kg mm^2/s^2, which is 1/1000 of a N mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plant as plant_mod
from .config import ExperimentConfig
from .dynamics import LegChainState, gravity_row, joint_torque, uniform_rod_link
from .fuzzy import controller_step
from .geometry import (
    N_LEGS,
    Pose,
    UnreachablePose,
    horn_tip,
    neutral_pose,
    platform_joint_world,
    servo_angles,
)
from .plant import (
    SimState,
    Trajectory,
    oscillation_band,
    stabilization_time,
    trajectory_to_csv,
    write_trajectory_csv,
)
from .vision import BallNotFound, locate_ball, render_frame

__all__ = [
    "RunReport",
    "RunResult",
    "ComparisonResult",
    "run_experiment",
    "compare_controllers",
    "write_csv",
    "write_report",
    "write_report_csv",
    "write_torque_csv",
    "report_to_text",
    "report_csv_row",
    "REPORT_CSV_HEADER",
    "HORN_MASS_KG",
    "ROD_MASS_KG",
]

# Nominal hobby-servo linkage masses for the load-torque estimate; they set
# the scale of the reported torques, nothing else in the loop reads them.
HORN_MASS_KG = 0.01
ROD_MASS_KG = 0.02

KG_MM2_PER_NMM = 1000.0

# Horn-angle round-trip residual is re-verified on this fraction of samples.
_VERIFY_EVERY = 100


@dataclass(frozen=True)
class RunReport:
    """Summary of one closed-loop run."""

    controller: str
    sensor: str
    duration_s: float
    samples: int
    oscillation_band_mm: float
    stabilization_time_s: float | None
    ball_fell: bool
    fall_time_s: float | None
    servo_min_deg: tuple[float, ...]
    servo_max_deg: tuple[float, ...]
    peak_torque_nmm: tuple[float, ...]
    unreachable_samples: int = 0
    first_unreachable_time_s: float | None = None
    dropped_frames: int = 0

    def __post_init__(self):
        for name in ("servo_min_deg", "servo_max_deg", "peak_torque_nmm"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != N_LEGS:
                raise ValueError(f"{name} must have one entry per leg")
            object.__setattr__(self, name, vals)
        if not math.isnan(self.oscillation_band_mm) and self.oscillation_band_mm < 0:
            raise ValueError("oscillation band must be non-negative")

    @property
    def stabilized(self) -> bool:
        return self.stabilization_time_s is not None


@dataclass(frozen=True)
class RunResult:
    """Full run artefacts: trajectory, telemetry series and the report."""

    config: ExperimentConfig
    trajectory: Trajectory
    measurements: np.ndarray  # (n_steps, 2) measured ball position, mm
    commands: np.ndarray  # (n_steps, 2) commanded (roll, pitch), degrees
    command_times: np.ndarray  # (n_steps,) command issue times, s
    servo_rad: np.ndarray  # (n_steps, 6) horn angles at the commanded pose
    torque_nmm: np.ndarray  # (n_steps, 6) servo load torque
    report: RunReport


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _measure(state: SimState, cfg, rng):
    if cfg.sensor == "direct":
        return state.ball_pos
    frame = render_frame(
        state.ball_pos, cfg.scene, noise_sigma=cfg.vision.noise_sigma, rng=rng
    )
    x_mm, y_mm, _ = locate_ball(frame, cfg.vision, cfg.scene.calibration())
    return x_mm, y_mm


def _verify_round_trip(geom, pose: Pose, alphas: np.ndarray, step: int):
    # |horn tip -> plate joint| must reproduce the rod length exactly.
    tol = 1e-9 * geom.rod_length
    for leg in range(N_LEGS):
        tip = horn_tip(geom, leg, float(alphas[leg]))
        joint = platform_joint_world(pose, geom, leg)
        residual = abs(float(np.linalg.norm(joint - tip)) - geom.rod_length)
        if residual > tol:
            raise RuntimeError(
                f"step {step} leg {leg}: horn angle round-trip residual "
                f"{residual:.3e} mm exceeds {tol:.3e} mm"
            )


def _torque_series(geom, poses, alphas: np.ndarray, period: float) -> np.ndarray:
    """Servo load torque per step and leg from the solved horn angles.

    Each leg is modelled as a planar two-link chain in the horn's vertical
    swing plane: link 1 the horn at the solved angle, link 2 the rod at its
    projected elevation.  Joint rates come from central differences of the
    angle series, and the reported value is the torque at the horn joint.
    """
    n = alphas.shape[0]
    phi = np.empty_like(alphas)
    for k, pose in enumerate(poses):
        for leg in range(N_LEGS):
            lam = geom.horn_axis_heading[leg]
            u = np.array([math.cos(lam), math.sin(lam), 0.0])
            r = platform_joint_world(pose, geom, leg) - horn_tip(
                geom, leg, float(alphas[k, leg])
            )
            phi[k, leg] = math.atan2(r[2], float(r @ u))
    theta2 = phi - alphas
    if n >= 2:
        d_alpha = np.gradient(alphas, period, axis=0)
        dd_alpha = np.gradient(d_alpha, period, axis=0)
        d_theta2 = np.gradient(theta2, period, axis=0)
        dd_theta2 = np.gradient(d_theta2, period, axis=0)
    else:
        d_alpha = dd_alpha = np.zeros_like(alphas)
        d_theta2 = dd_theta2 = np.zeros_like(alphas)

    chain = (
        uniform_rod_link(HORN_MASS_KG, geom.horn_length),
        uniform_rod_link(ROD_MASS_KG, geom.rod_length),
    )
    gravity = gravity_row(0.0, -9810.0, 0.0)  # chain y axis points world-up
    torque = np.empty_like(alphas)
    for k in range(n):
        for leg in range(N_LEGS):
            state = LegChainState(
                theta=(float(alphas[k, leg]), float(theta2[k, leg])),
                dtheta=(float(d_alpha[k, leg]), float(d_theta2[k, leg])),
                ddtheta=(float(dd_alpha[k, leg]), float(dd_theta2[k, leg])),
            )
            torque[k, leg] = joint_torque(chain, state, gravity)[0]
    return torque / KG_MM2_PER_NMM


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Simulate one closed-loop run and summarise it.

    Deterministic for a fixed config and seed.  A pose the horn linkage
    cannot reach is recorded and the previous solved angles are reused; a
    ball leaving the plate ends the run early with the flag set.
    """
    spec = cfg.controller
    params = cfg.plant
    period = params.sensor_period
    geom = cfg.geometry.build()
    n_steps = max(1, round(cfg.duration_s / period))

    out_lims = {o.name: (o.lo, o.hi) for o in spec.outputs}
    roll_ch = out_lims["roll"]
    pitch_ch = out_lims.get("pitch", roll_ch)

    rng = None
    if cfg.sensor == "vision" and cfg.vision.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)

    state = SimState(
        ball_pos=cfg.initial_pos,
        ball_vel=cfg.initial_vel,
        plate_angles=(0.0, 0.0),
        time=0.0,
    )
    samples = [state]
    measurements = np.empty((n_steps, 2))
    commands = np.empty((n_steps, 2))
    alphas = np.empty((n_steps, N_LEGS))
    poses = []

    neutral = neutral_pose(geom)
    last_alphas = servo_angles(neutral, geom)
    last_meas = None
    last_cmd = (0.0, 0.0)
    unreachable = 0
    first_unreachable = None
    dropped = 0
    steps_run = 0

    for k in range(n_steps):
        try:
            mx, my = _measure(state, cfg, rng)
        except BallNotFound:
            dropped += 1
            mx, my = last_meas if last_meas is not None else cfg.initial_pos
            roll_cmd, pitch_cmd = last_cmd
        else:
            if last_meas is None:
                dex = dey = 0.0
            else:
                dex = (mx - last_meas[0]) / period
                dey = (my - last_meas[1]) / period
            err = math.hypot(mx, my)
            u_roll, u_pitch = controller_step(
                spec, mx, my, err, dex, dey, gains=cfg.gains
            )
            pitch_cmd = _clamp(u_roll, *roll_ch)
            roll_cmd = _clamp(-u_pitch, *pitch_ch)
            last_meas = (mx, my)
            last_cmd = (roll_cmd, pitch_cmd)

        measurements[k] = (mx, my)
        commands[k] = (roll_cmd, pitch_cmd)

        pose = Pose(
            translation=neutral.translation,
            roll=math.radians(roll_cmd),
            pitch=math.radians(pitch_cmd),
        )
        poses.append(pose)
        try:
            last_alphas = servo_angles(pose, geom)
            solved = True
        except UnreachablePose:
            unreachable += 1
            if first_unreachable is None:
                first_unreachable = state.time
            solved = False
        alphas[k] = last_alphas
        if solved and k % _VERIFY_EVERY == 0:
            _verify_round_trip(geom, pose, alphas[k], k)

        state = plant_mod.step(state, (roll_cmd, pitch_cmd), params, period)
        samples.append(state)
        steps_run = k + 1
        if state.ball_fell:
            break

    measurements = measurements[:steps_run]
    commands = commands[:steps_run]
    alphas = alphas[:steps_run]
    traj = Trajectory(tuple(samples))
    command_times = np.arange(steps_run) * period
    torque = _torque_series(geom, poses, alphas, period)

    try:
        band = oscillation_band(traj, cfg.band_window_s)
    except plant_mod.InsufficientData:
        band = math.nan
    stab = stabilization_time(traj, cfg.stab_band_mm, cfg.stab_hold_s)

    fall_time = None
    if traj.ball_fell:
        fall_time = next(s.time for s in traj if s.ball_fell)

    deg = np.degrees(alphas)
    report = RunReport(
        controller=spec.name,
        sensor=cfg.sensor,
        duration_s=traj.duration,
        samples=len(traj),
        oscillation_band_mm=band,
        stabilization_time_s=stab,
        ball_fell=traj.ball_fell,
        fall_time_s=fall_time,
        servo_min_deg=tuple(deg.min(axis=0)),
        servo_max_deg=tuple(deg.max(axis=0)),
        peak_torque_nmm=tuple(np.abs(torque).max(axis=0)),
        unreachable_samples=unreachable,
        first_unreachable_time_s=first_unreachable,
        dropped_frames=dropped,
    )
    return RunResult(
        config=cfg,
        trajectory=traj,
        measurements=measurements,
        commands=commands,
        command_times=command_times,
        servo_rad=alphas,
        torque_nmm=torque,
        report=report,
    )


# --- report rendering ---------------------------------------------------

_NOT_STABILIZED = "NotStabilized"


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _stab_text(report: RunReport) -> str:
    if report.stabilization_time_s is None:
        return _NOT_STABILIZED
    return _fmt(report.stabilization_time_s)


REPORT_CSV_HEADER = ",".join(
    ["controller", "sensor", "duration_s", "samples", "oscillation_band_mm",
     "stabilization_time_s", "ball_fell", "fall_time_s",
     "unreachable_samples", "dropped_frames"]
    + [f"servo_min_deg_{i}" for i in range(N_LEGS)]
    + [f"servo_max_deg_{i}" for i in range(N_LEGS)]
    + [f"peak_torque_nmm_{i}" for i in range(N_LEGS)]
)


def report_csv_row(report: RunReport) -> str:
    cells = [
        report.controller,
        report.sensor,
        _fmt(report.duration_s),
        str(report.samples),
        _fmt(report.oscillation_band_mm),
        _stab_text(report),
        "1" if report.ball_fell else "0",
        "" if report.fall_time_s is None else _fmt(report.fall_time_s),
        str(report.unreachable_samples),
        str(report.dropped_frames),
    ]
    cells += [_fmt(v) for v in report.servo_min_deg]
    cells += [_fmt(v) for v in report.servo_max_deg]
    cells += [_fmt(v) for v in report.peak_torque_nmm]
    return ",".join(cells)


def report_to_text(report: RunReport) -> str:
    lines = [
        f"controller:            {report.controller}",
        f"sensor:                {report.sensor}",
        f"duration_s:            {_fmt(report.duration_s)}",
        f"samples:               {report.samples}",
        f"oscillation_band_mm:   {_fmt(report.oscillation_band_mm)}",
        f"stabilization_time_s:  {_stab_text(report)}",
        f"ball_fell:             {'yes' if report.ball_fell else 'no'}",
    ]
    if report.fall_time_s is not None:
        lines.append(f"fall_time_s:           {_fmt(report.fall_time_s)}")
    lines += [
        f"unreachable_samples:   {report.unreachable_samples}",
        f"dropped_frames:        {report.dropped_frames}",
        "",
        "leg  servo_min_deg  servo_max_deg  peak_torque_nmm",
    ]
    for i in range(N_LEGS):
        lines.append(
            f"{i:>3}  {report.servo_min_deg[i]:>13.4f}  "
            f"{report.servo_max_deg[i]:>13.4f}  {report.peak_torque_nmm[i]:>15.4f}"
        )
    return "\n".join(lines) + "\n"


def write_csv(traj: Trajectory, path) -> None:
    """Trajectory CSV, identical to the plant module's writer."""
    write_trajectory_csv(traj, path)


def write_report(report: RunReport, path) -> None:
    Path(path).write_text(report_to_text(report))


def write_report_csv(report: RunReport, path) -> None:
    Path(path).write_text(REPORT_CSV_HEADER + "\n" + report_csv_row(report) + "\n")


def write_torque_csv(result: RunResult, path) -> None:
    header = "time_s," + ",".join(f"torque_nmm_{i}" for i in range(N_LEGS))
    lines = [header]
    for k in range(result.torque_nmm.shape[0]):
        cells = [_fmt(result.command_times[k])]
        cells += [_fmt(v) for v in result.torque_nmm[k]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


# --- controller comparison ----------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    report: RunReport | None
    note: str = ""


@dataclass(frozen=True)
class ComparisonResult:
    """Ranked outcome of a multi-controller comparison.

    Rows are ordered best first: stabilized runs by stabilization time,
    then surviving unstabilized runs by oscillation band, then runs that
    dropped the ball, then runs that failed outright (with a note).
    """

    rows: tuple[ComparisonRow, ...]
    results: tuple[RunResult | None, ...]

    def to_csv(self) -> str:
        lines = [REPORT_CSV_HEADER + ",note"]
        for row in self.rows:
            if row.report is None:
                cells = [row.label] + [""] * REPORT_CSV_HEADER.count(",")
                lines.append(",".join(cells) + "," + row.note.replace(",", ";"))
            else:
                lines.append(report_csv_row(row.report) + "," + row.note.replace(",", ";"))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = (
            f"{'controller':<12} {'sensor':<7} {'band_mm':>9} "
            f"{'stabilization_s':>15} {'fell':>5}  note"
        )
        lines = [header, "-" * len(header)]
        for row in self.rows:
            r = row.report
            if r is None:
                lines.append(
                    f"{row.label:<12} {'-':<7} {'-':>9} {'-':>15} {'-':>5}  {row.note}"
                )
                continue
            band = f"{r.oscillation_band_mm:.1f}" if not math.isnan(
                r.oscillation_band_mm) else "nan"
            stab = (
                f"{r.stabilization_time_s:.1f}" if r.stabilization_time_s is not None
                else _NOT_STABILIZED
            )
            fell = "yes" if r.ball_fell else "no"
            lines.append(
                f"{r.controller:<12} {r.sensor:<7} {band:>9} {stab:>15} "
                f"{fell:>5}  {row.note}"
            )
        return "\n".join(lines) + "\n"


def _rank_key(entry):
    idx, row = entry
    r = row.report
    if r is None:
        return (3, math.inf, math.inf, idx)
    band = r.oscillation_band_mm
    band = math.inf if math.isnan(band) else band
    if r.ball_fell:
        return (2, band, math.inf, idx)
    if r.stabilization_time_s is not None:
        return (0, r.stabilization_time_s, band, idx)
    return (1, band, math.inf, idx)


def compare_controllers(configs) -> ComparisonResult:
    """Run every config on the shared plant and rank the outcomes.

    All configs must agree on the plant parameters so the comparison says
    something about the controllers rather than the worlds they ran in.
    A run that raises contributes a failure-note row instead of aborting
    the whole comparison.
    """
    configs = list(configs)
    if len(configs) < 2:
        raise ValueError("a comparison needs at least two configs")
    for i, cfg in enumerate(configs):
        if not isinstance(cfg, ExperimentConfig):
            raise ValueError("compare_controllers expects ExperimentConfig values")
        if cfg.plant != configs[0].plant:
            raise ValueError(
                f"config {i} has different plant params; comparisons must share one plant"
            )

    rows = []
    results = []
    for cfg in configs:
        label = cfg.controller.name
        try:
            result = run_experiment(cfg)
        except (ValueError, RuntimeError) as exc:
            rows.append(ComparisonRow(label=label, report=None, note=str(exc)))
            results.append(None)
            continue
        note = ""
        if result.report.ball_fell:
            note = f"ball fell at {_fmt(result.report.fall_time_s)} s"
        rows.append(ComparisonRow(label=label, report=result.report, note=note))
        results.append(result)

    order = sorted(enumerate(rows), key=_rank_key)
    ranked = tuple(row for _, row in order)
    ranked_results = tuple(results[i] for i, _ in order)
    return ComparisonResult(rows=ranked, results=ranked_results)
