import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ballplate.geometry import (
    DegenerateGeometry,
    PlatformGeometry,
    Pose,
    UnreachablePose,
    horn_tip,
    leg_vector,
    mirrored_pair_geometry,
    neutral_pose,
    platform_joint_world,
    pose_reachable,
    rotation_matrix,
    servo_angle,
    servo_angles,
)

from _oracles import bisection_servo_angle, rotation_zyx_closed_form

angle = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)


def random_reachable_poses(geom, count, seed=1234):
    """Sample poses from a box around home, keeping only fully reachable ones."""
    rng = np.random.default_rng(seed)
    poses = []
    while len(poses) < count:
        t = np.array(
            [
                rng.uniform(-15.0, 15.0),
                rng.uniform(-15.0, 15.0),
                geom.home_height + rng.uniform(-10.0, 10.0),
            ]
        )
        pose = Pose(
            t,
            roll=rng.uniform(-0.12, 0.12),
            pitch=rng.uniform(-0.12, 0.12),
            yaw=rng.uniform(-0.09, 0.09),
        )
        if pose_reachable(pose, geom).ok:
            poses.append(pose)
    return poses


class TestRotationMatrix:
    def test_zero_angles_identity(self):
        assert np.array_equal(rotation_matrix(0.0, 0.0, 0.0), np.eye(3))

    def test_quarter_turn_roll_maps_y_to_z(self):
        r = rotation_matrix(math.pi / 2, 0.0, 0.0)
        assert np.allclose(r @ [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], atol=1e-15)

    def test_against_closed_form(self):
        r = rotation_matrix(0.1, 0.2, 0.3)
        assert np.allclose(r, rotation_zyx_closed_form(0.1, 0.2, 0.3), atol=1e-15)

    def test_orthonormal_unit_determinant_1000_triples(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            roll, pitch, yaw = rng.uniform(-math.pi, math.pi, size=3)
            r = rotation_matrix(roll, pitch, yaw)
            assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(r) - 1.0) < 1e-12

    @given(roll=angle, pitch=angle, yaw=angle)
    def test_orthonormal_property(self, roll, pitch, yaw):
        r = rotation_matrix(roll, pitch, yaw)
        assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            rotation_matrix(math.nan, 0.0, 0.0)


class TestJointAndLegVectors:
    def test_identity_pose_adds_translation(self, default_geometry):
        geom = default_geometry
        pose = Pose(np.array([1.0, 2.0, 3.0]))
        for i in range(6):
            expected = np.array([1.0, 2.0, 3.0]) + geom.platform_joints[i]
            assert np.allclose(platform_joint_world(pose, geom, i), expected, atol=1e-12)

    def test_rotated_joint_matches_direct_product(self, default_geometry):
        geom = default_geometry
        pose = Pose(np.array([5.0, -3.0, 110.0]), roll=0.05, pitch=-0.04, yaw=0.02)
        r = rotation_zyx_closed_form(0.05, -0.04, 0.02)
        for i in range(6):
            expected = pose.translation + r @ geom.platform_joints[i]
            assert np.allclose(platform_joint_world(pose, geom, i), expected, atol=1e-12)

    def test_leg_vector_is_joint_minus_anchor(self, default_geometry):
        geom = default_geometry
        pose = Pose(np.array([2.0, 1.0, 115.0]), roll=0.03)
        for i in range(6):
            d = leg_vector(pose, geom, i)
            m = platform_joint_world(pose, geom, i)
            assert np.array_equal(d, m - geom.base_anchors[i])
            assert np.allclose(d + geom.base_anchors[i], m, atol=1e-9)

    def test_leg_index_out_of_range(self, default_geometry):
        pose = neutral_pose(default_geometry)
        with pytest.raises(ValueError):
            platform_joint_world(pose, default_geometry, 6)
        with pytest.raises(ValueError):
            leg_vector(pose, default_geometry, -1)


class TestServoAngle:
    def test_neutral_pose_zero_angle(self, default_geometry):
        # Home height makes the asin argument zero and the perpendicular horn
        # headings make the cosine coefficient zero, so alpha = 0 exactly.
        pose = neutral_pose(default_geometry)
        for i in range(6):
            assert abs(servo_angle(pose, default_geometry, i)) < 1e-12

    def test_matches_bisection_oracle(self, default_geometry):
        geom = default_geometry
        for pose in random_reachable_poses(geom, 50, seed=7):
            for i in range(6):
                ref = bisection_servo_angle(pose, geom, i)
                if ref is None:
                    continue
                assert abs(servo_angle(pose, geom, i) - ref) < 1e-9

    def test_forward_roundtrip_1000_reachable_poses(self, default_geometry):
        geom = default_geometry
        tol = 1e-9 * geom.rod_length
        for pose in random_reachable_poses(geom, 1000, seed=99):
            angles = servo_angles(pose, geom)
            for i in range(6):
                m = platform_joint_world(pose, geom, i)
                residual = abs(np.linalg.norm(horn_tip(geom, i, angles[i]) - m) - geom.rod_length)
                assert residual <= tol

    def test_high_lift_unreachable(self, default_geometry):
        geom = default_geometry
        pose = Pose(np.array([0.0, 0.0, geom.horn_length + geom.rod_length + 1.0]))
        with pytest.raises(UnreachablePose) as exc:
            servo_angles(pose, geom)
        assert exc.value.leg == 0

    def test_degenerate_when_joint_hits_anchor(self, default_geometry):
        geom = default_geometry
        t = geom.base_anchors[0] - geom.platform_joints[0]
        with pytest.raises(DegenerateGeometry):
            servo_angle(Pose(t), geom, 0)

    def test_mirror_symmetry_permutes_angles(self, default_geometry):
        geom = default_geometry
        mirror = [1, 0, 5, 4, 3, 2]
        home = np.array([0.0, 0.0, geom.home_height])
        for roll in (0.02, -0.07, 0.1):
            plus = servo_angles(Pose(home, roll=roll), geom)
            minus = servo_angles(Pose(home, roll=-roll), geom)
            assert np.allclose(plus, minus[mirror], atol=1e-12)


class TestPoseReachable:
    def test_neutral_all_ok(self, default_geometry):
        rep = pose_reachable(neutral_pose(default_geometry), default_geometry)
        assert rep.ok
        assert rep.failed == ()
        assert np.all(np.isfinite(rep.angles))

    def test_six_degree_tilts_reachable(self, default_geometry):
        home = np.array([0.0, 0.0, default_geometry.home_height])
        lim = math.radians(6.0)
        for roll, pitch in ((lim, 0.0), (-lim, 0.0), (0.0, lim), (lim, -lim)):
            assert pose_reachable(Pose(home, roll=roll, pitch=pitch), default_geometry).ok

    def test_high_lift_all_failed(self, default_geometry):
        geom = default_geometry
        pose = Pose(np.array([0.0, 0.0, geom.horn_length + geom.rod_length + 1.0]))
        rep = pose_reachable(pose, geom)
        assert rep.failed == (0, 1, 2, 3, 4, 5)
        assert np.all(np.isnan(rep.angles))


class TestValidation:
    def test_pose_angle_range(self):
        with pytest.raises(ValueError):
            Pose(np.zeros(3), roll=3.5)
        with pytest.raises(ValueError):
            Pose(np.array([0.0, math.inf, 0.0]))

    def test_geometry_shape_checks(self, default_geometry):
        geom = default_geometry
        with pytest.raises(ValueError):
            PlatformGeometry(
                base_anchors=geom.base_anchors[:5],
                platform_joints=geom.platform_joints,
                horn_length=40.0,
                rod_length=125.0,
                horn_axis_heading=geom.horn_axis_heading,
                home_height=geom.home_height,
            )

    def test_geometry_rejects_rod_not_longer_than_horn(self, default_geometry):
        geom = default_geometry
        with pytest.raises(ValueError):
            PlatformGeometry(
                base_anchors=geom.base_anchors,
                platform_joints=geom.platform_joints,
                horn_length=40.0,
                rod_length=40.0,
                horn_axis_heading=geom.horn_axis_heading,
                home_height=geom.home_height,
            )

    def test_geometry_rejects_coincident_anchors(self, default_geometry):
        geom = default_geometry
        anchors = np.array(geom.base_anchors)
        anchors[1] = anchors[0]
        with pytest.raises(ValueError):
            PlatformGeometry(
                base_anchors=anchors,
                platform_joints=geom.platform_joints,
                horn_length=40.0,
                rod_length=125.0,
                horn_axis_heading=geom.horn_axis_heading,
                home_height=geom.home_height,
            )

    def test_geometry_arrays_read_only(self, default_geometry):
        with pytest.raises(ValueError):
            default_geometry.base_anchors[0, 0] = 1.0


def test_builder_home_height_solves_zero_asin(default_geometry):
    geom = default_geometry
    sep2 = float(np.sum((geom.platform_joints[0, :2] - geom.base_anchors[0, :2]) ** 2))
    lhs = sep2 + geom.home_height**2
    rhs = geom.rod_length**2 - geom.horn_length**2
    assert abs(lhs - rhs) < 1e-9


def test_builder_requires_feasible_lengths():
    with pytest.raises(ValueError):
        mirrored_pair_geometry(130.0, 100.0, 0.3, 0.1, 40.0, 45.0)
