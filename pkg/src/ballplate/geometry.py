"""Rigid-body geometry of a rotary six-leg parallel platform.

Each leg is a servo horn of length ``horn_length`` rotating in a vertical
plane whose horizontal heading is ``horn_axis_heading[i]``, coupled through
a fixed-length rod (``rod_length``) to a ball joint on the moving plate.
Angles are radians and lengths millimetres throughout; degrees appear only
at CLI/config boundaries.

Frame conventions: the base frame is right-handed with z up and the six
anchor points at z = 0.  Plate orientation uses extrinsic Z-Y-X rotations,
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateGeometry",
    "UnreachablePose",
    "Pose",
    "PlatformGeometry",
    "ReachabilityReport",
    "rotation_matrix",
    "platform_joint_world",
    "leg_vector",
    "servo_angle",
    "servo_angles",
    "horn_tip",
    "pose_reachable",
    "mirrored_pair_geometry",
    "neutral_pose",
]

N_LEGS = 6


class UnreachablePose(ValueError):
    """The rod cannot close the loop for the given leg at this pose."""

    def __init__(self, leg: int, message: str | None = None):
        self.leg = leg
        super().__init__(message or f"leg {leg}: pose outside reachable workspace")


class DegenerateGeometry(ValueError):
    """Horn orientation is indeterminate (zero projection onto the horn plane)."""


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class Pose:
    """Plate pose: translation of the plate centre plus extrinsic Z-Y-X angles."""

    translation: np.ndarray
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "translation", _as_vec3(self.translation, "translation"))
        self.translation.setflags(write=False)
        for name in ("roll", "pitch", "yaw"):
            a = float(getattr(self, name))
            if not math.isfinite(a):
                raise ValueError(f"{name} must be finite")
            if abs(a) > math.pi:
                raise ValueError(f"{name} must lie in [-pi, pi], got {a}")
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class PlatformGeometry:
    """Fixed mechanical description of the platform.

    ``base_anchors`` are the six horn pivot points in the base frame and
    ``platform_joints`` the six rod ball-joints in the plate frame, matched
    by index.  ``horn_axis_heading`` is the azimuth of each horn's vertical
    swing plane.  ``home_height`` is the plate centre height of the neutral
    pose.
    """

    base_anchors: np.ndarray
    platform_joints: np.ndarray
    horn_length: float
    rod_length: float
    horn_axis_heading: np.ndarray
    home_height: float

    def __post_init__(self):
        anchors = np.asarray(self.base_anchors, dtype=float)
        joints = np.asarray(self.platform_joints, dtype=float)
        headings = np.asarray(self.horn_axis_heading, dtype=float)
        if anchors.shape != (N_LEGS, 3):
            raise ValueError(f"base_anchors must have shape (6, 3), got {anchors.shape}")
        if joints.shape != (N_LEGS, 3):
            raise ValueError(f"platform_joints must have shape (6, 3), got {joints.shape}")
        if headings.shape != (N_LEGS,):
            raise ValueError(f"horn_axis_heading must have shape (6,), got {headings.shape}")
        for arr, name in ((anchors, "base_anchors"), (joints, "platform_joints"), (headings, "horn_axis_heading")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        for arr, name in ((anchors, "base_anchors"), (joints, "platform_joints")):
            for i in range(N_LEGS):
                for j in range(i + 1, N_LEGS):
                    if np.array_equal(arr[i], arr[j]):
                        raise ValueError(f"{name} {i} and {j} coincide")
        h = float(self.horn_length)
        e = float(self.rod_length)
        if not (h > 0.0):
            raise ValueError("horn_length must be positive")
        if not (e > h):
            raise ValueError("rod_length must exceed horn_length")
        z0 = float(self.home_height)
        if not math.isfinite(z0):
            raise ValueError("home_height must be finite")
        for arr in (anchors, joints, headings):
            arr.setflags(write=False)
        object.__setattr__(self, "base_anchors", anchors)
        object.__setattr__(self, "platform_joints", joints)
        object.__setattr__(self, "horn_axis_heading", headings)
        object.__setattr__(self, "horn_length", h)
        object.__setattr__(self, "rod_length", e)
        object.__setattr__(self, "home_height", z0)


@dataclass(frozen=True)
class ReachabilityReport:
    """Per-leg servo solve outcome; failures are data, not exceptions."""

    angles: np.ndarray          # rad, NaN where the leg failed
    failed: tuple[int, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.failed


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Extrinsic Z-Y-X rotation matrix, R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    for name, a in (("roll", roll), ("pitch", pitch), ("yaw", yaw)):
        if not math.isfinite(a):
            raise ValueError(f"{name} must be finite")
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def _check_leg(leg: int) -> int:
    if not isinstance(leg, (int, np.integer)) or isinstance(leg, bool):
        raise ValueError(f"leg index must be an integer, got {leg!r}")
    if not 0 <= leg < N_LEGS:
        raise ValueError(f"leg index must be in 0..5, got {leg}")
    return int(leg)


def platform_joint_world(pose: Pose, geom: PlatformGeometry, leg: int) -> np.ndarray:
    """World position of the plate-side ball joint of one leg."""
    leg = _check_leg(leg)
    r = rotation_matrix(pose.roll, pose.pitch, pose.yaw)
    return pose.translation + r @ geom.platform_joints[leg]


def leg_vector(pose: Pose, geom: PlatformGeometry, leg: int) -> np.ndarray:
    """Vector from the base anchor to the plate joint of one leg."""
    leg = _check_leg(leg)
    return platform_joint_world(pose, geom, leg) - geom.base_anchors[leg]


def _all_leg_vectors(pose: Pose, geom: PlatformGeometry) -> np.ndarray:
    r = rotation_matrix(pose.roll, pose.pitch, pose.yaw)
    world = pose.translation + geom.platform_joints @ r.T
    return world - geom.base_anchors


def _servo_angles_raw(pose: Pose, geom: PlatformGeometry) -> np.ndarray:
    """Closed-form horn angles for all six legs; NaN marks unreachable legs.

    With d the anchor-to-joint vector, the rod-closure condition
    |anchor + horn(alpha) - joint| = rod_length reduces to
    a*sin(alpha) + b*cos(alpha) = |d|^2 + h^2 - e^2 with
    a = 2*h*d_z and b = 2*h*(cos(lambda)*d_x + sin(lambda)*d_y), hence
    alpha = asin(L / hypot(a, b)) - atan2(b, a).
    """
    d = _all_leg_vectors(pose, geom)
    h = geom.horn_length
    e = geom.rod_length
    lam = geom.horn_axis_heading
    a = 2.0 * h * d[:, 2]
    b = 2.0 * h * (np.cos(lam) * d[:, 0] + np.sin(lam) * d[:, 1])
    norm = np.hypot(a, b)
    if np.any(norm == 0.0):
        bad = int(np.nonzero(norm == 0.0)[0][0])
        raise DegenerateGeometry(f"leg {bad}: horn plane projection vanishes (a = b = 0)")
    arg = (np.einsum("ij,ij->i", d, d) - e * e + h * h) / norm
    angles = np.full(N_LEGS, np.nan)
    # Tolerate only float round-off at the |arg| = 1 workspace boundary.
    reach = np.abs(arg) <= 1.0 + 1e-12
    clipped = np.clip(arg[reach], -1.0, 1.0)
    angles[reach] = np.arcsin(clipped) - np.arctan2(b[reach], a[reach])
    return angles


def servo_angle(pose: Pose, geom: PlatformGeometry, leg: int) -> float:
    """Horn angle of one leg (rad, measured from horizontal)."""
    leg = _check_leg(leg)
    angle = _servo_angles_raw(pose, geom)[leg]
    if math.isnan(angle):
        raise UnreachablePose(leg)
    return float(angle)


def servo_angles(pose: Pose, geom: PlatformGeometry) -> np.ndarray:
    """Horn angles for all six legs; raises UnreachablePose on the first failure."""
    angles = _servo_angles_raw(pose, geom)
    bad = np.nonzero(np.isnan(angles))[0]
    if bad.size:
        raise UnreachablePose(int(bad[0]))
    return angles


def horn_tip(geom: PlatformGeometry, leg: int, alpha: float) -> np.ndarray:
    """World position of the horn tip of one leg at horn angle ``alpha``."""
    leg = _check_leg(leg)
    lam = geom.horn_axis_heading[leg]
    h = geom.horn_length
    ca = math.cos(alpha)
    tip = np.array([math.cos(lam) * ca, math.sin(lam) * ca, math.sin(alpha)])
    return geom.base_anchors[leg] + h * tip


def pose_reachable(pose: Pose, geom: PlatformGeometry) -> ReachabilityReport:
    """Solve all six legs, reporting failures instead of raising."""
    try:
        angles = _servo_angles_raw(pose, geom)
    except DegenerateGeometry:
        return ReachabilityReport(angles=np.full(N_LEGS, np.nan), failed=tuple(range(N_LEGS)))
    failed = tuple(int(i) for i in np.nonzero(np.isnan(angles))[0])
    angles.setflags(write=False)
    return ReachabilityReport(angles=angles, failed=failed)


def mirrored_pair_geometry(
    base_radius: float,
    platform_radius: float,
    anchor_offset: float,
    joint_offset: float,
    horn_length: float,
    rod_length: float,
    home_height: float | None = None,
) -> PlatformGeometry:
    """Build a laterally symmetric geometry of three mirrored leg pairs.

    Pair k sits at azimuth 2*pi*k/3; its two legs are offset by
    +/-``anchor_offset`` (anchors) and +/-``joint_offset`` (joints) from the
    pair azimuth.  Horn headings are perpendicular to each leg's horizontal
    direction, alternating sides so that the whole geometry maps onto itself
    under the mirror y -> -y with the leg permutation (0 1)(2 5)(3 4).

    When ``home_height`` is omitted it is chosen so that at the neutral pose
    the servo-angle asin argument is exactly zero, which with these headings
    also gives alpha = 0 on every leg.
    """
    anchors = np.zeros((N_LEGS, 3))
    joints = np.zeros((N_LEGS, 3))
    headings = np.zeros(N_LEGS)
    for pair in range(3):
        psi = 2.0 * math.pi * pair / 3.0
        for side, sign in ((0, -1.0), (1, 1.0)):
            i = 2 * pair + side
            aa = psi + sign * anchor_offset
            ja = psi + sign * joint_offset
            anchors[i] = (base_radius * math.cos(aa), base_radius * math.sin(aa), 0.0)
            joints[i] = (platform_radius * math.cos(ja), platform_radius * math.sin(ja), 0.0)
            dx = joints[i, 0] - anchors[i, 0]
            dy = joints[i, 1] - anchors[i, 1]
            # Perpendicular horn heading; opposite sides for the two legs of a pair.
            headings[i] = math.atan2(dy, dx) - sign * 0.5 * math.pi
    if home_height is None:
        sep2 = float(np.sum((joints[0, :2] - anchors[0, :2]) ** 2))
        arg = rod_length**2 - horn_length**2 - sep2
        if arg <= 0.0:
            raise ValueError("rod/horn lengths too short for this radius layout")
        home_height = math.sqrt(arg)
    return PlatformGeometry(
        base_anchors=anchors,
        platform_joints=joints,
        horn_length=horn_length,
        rod_length=rod_length,
        horn_axis_heading=headings,
        home_height=home_height,
    )


def neutral_pose(geom: PlatformGeometry) -> Pose:
    """Level plate at the geometry's home height."""
    return Pose(translation=np.array([0.0, 0.0, geom.home_height]))
