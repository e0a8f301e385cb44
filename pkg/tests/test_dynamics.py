"""Tests for the trace-form Lagrange-Euler chain dynamics.

The analytic torques are arbitrated by an independent finite-difference
Euler-Lagrange oracle built on a point-mass decomposition of each link
(see _oracles.lagrangian_fd_torque), and the mass-moment bookkeeping by
Monte-Carlo integration over the actual rod geometry.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballplate.dynamics import (
    DHLink,
    LegChainState,
    coriolis_vector,
    dh_transform,
    free_acceleration,
    gravity_row,
    gravity_vector,
    joint_torque,
    kinetic_energy,
    kinetic_matrix,
    pseudo_inertia,
    potential_energy,
    q_matrix,
    u_matrix,
    uniform_rod_link,
)

from _oracles import (
    chain_world_transform,
    fd_transform_partial,
    lagrangian_fd_torque,
    point_mass_model,
    rk4_step,
)

G_MM = 9810.0  # gravity in mm/s^2
GRAVITY = gravity_row(0.0, -G_MM, 0.0)

HORN_MASS, HORN_LEN = 0.02, 40.0
ROD_MASS, ROD_LEN = 0.015, 125.0


def leg_chain():
    """Default two-link leg: servo horn then coupling rod, both thin rods."""
    return (
        uniform_rod_link(HORN_MASS, HORN_LEN),
        uniform_rod_link(ROD_MASS, ROD_LEN),
    )


def three_link_chain():
    return (
        uniform_rod_link(0.03, 55.0),
        uniform_rod_link(0.02, 80.0),
        uniform_rod_link(0.011, 47.0),
    )


def random_states(n, rng, links=2):
    out = []
    for _ in range(n):
        out.append(
            LegChainState(
                theta=tuple(rng.uniform(-1.4, 1.4, links)),
                dtheta=tuple(rng.uniform(-5.0, 5.0, links)),
                ddtheta=tuple(rng.uniform(-20.0, 20.0, links)),
            )
        )
    return out


class TestLinkValidation:
    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError, match="mass"):
            DHLink(0.0, 10.0, 0.0, 0.0, -1.0, (0, 0, 0), (0, 0, 0, 0, 0, 0))

    def test_zero_mass_allowed(self):
        link = DHLink(0.0, 10.0, 0.0, 0.0, 0.0, (0, 0, 0), (0, 0, 0, 0, 0, 0))
        assert link.mass == 0.0

    def test_triangle_inequality_enforced(self):
        # Izz > Ixx + Iyy means a negative planar second moment.
        with pytest.raises(ValueError, match="triangle"):
            DHLink(0.0, 10.0, 0.0, 0.0, 1.0, (0, 0, 0), (0.1, 0.1, 1.0, 0, 0, 0))

    def test_negative_principal_moment_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            DHLink(0.0, 10.0, 0.0, 0.0, 1.0, (0, 0, 0), (-0.5, 1.0, 1.0, 0, 0, 0))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            DHLink(math.nan, 10.0, 0.0, 0.0, 1.0, (0, 0, 0), (0, 0, 0, 0, 0, 0))

    def test_rod_builder_rejects_bad_length(self):
        with pytest.raises(ValueError, match="length"):
            uniform_rod_link(1.0, 0.0)

    def test_state_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            LegChainState(theta=(0.0, 0.0), dtheta=(0.0,), ddtheta=(0.0, 0.0))


class TestDHTransform:
    def test_identity_at_zero(self):
        link = uniform_rod_link(1.0, 50.0)
        t = dh_transform(link, 0.0)
        expected = np.eye(4)
        expected[0, 3] = 50.0
        assert np.allclose(t, expected, atol=1e-15)

    def test_matches_oracle_with_twist_and_offset(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            link = DHLink(
                theta=0.0,
                length=rng.uniform(5, 150),
                offset=rng.uniform(-40, 40),
                twist=rng.uniform(-math.pi, math.pi),
                mass=0.1,
                com=(0, 0, 0),
                inertia=(0, 0, 0, 0, 0, 0),
            )
            th = rng.uniform(-math.pi, math.pi)
            assert np.allclose(
                dh_transform(link, th), chain_world_transform([link], [th], 0), atol=1e-12
            )

    def test_q_matrix_is_rotation_derivative(self):
        link = uniform_rod_link(1.0, 80.0)
        h = 1e-7
        for th in (-1.2, -0.3, 0.0, 0.7, 1.5):
            fd = (dh_transform(link, th + h) - dh_transform(link, th - h)) / (2 * h)
            assert np.allclose(q_matrix() @ dh_transform(link, th), fd, atol=1e-6)


class TestUMatrix:
    def test_zero_when_joint_is_distal_to_link(self):
        chain = leg_chain()
        u = u_matrix(chain, 0, 1, thetas=(0.3, -0.5))
        assert np.array_equal(u, np.zeros((4, 4)))

    @pytest.mark.parametrize("make_chain,n", [(leg_chain, 2), (three_link_chain, 3)])
    def test_matches_finite_difference(self, make_chain, n):
        chain = make_chain()
        rng = np.random.default_rng(21)
        for _ in range(15):
            thetas = rng.uniform(-1.5, 1.5, n)
            for i in range(n):
                for j in range(i + 1):
                    analytic = u_matrix(chain, i, j, thetas=thetas)
                    fd = fd_transform_partial(chain, thetas, i, j)
                    assert np.allclose(analytic, fd, atol=1e-7), (i, j)

    def test_index_validation(self):
        chain = leg_chain()
        with pytest.raises(ValueError, match="i must be"):
            u_matrix(chain, 2, 0, thetas=(0.0, 0.0))
        with pytest.raises(ValueError, match="j must be"):
            u_matrix(chain, 1, -1, thetas=(0.0, 0.0))
        with pytest.raises(ValueError, match="integer"):
            u_matrix(chain, 0.5, 0, thetas=(0.0, 0.0))


class TestPseudoInertia:
    def test_rod_closed_form(self):
        link = uniform_rod_link(ROD_MASS, ROD_LEN)
        j = pseudo_inertia(link)
        second = ROD_MASS * ROD_LEN**2 / 3.0
        assert math.isclose(j[0, 0], second, rel_tol=1e-12)
        assert j[1, 1] == 0.0 and j[2, 2] == 0.0
        assert math.isclose(j[0, 3], -ROD_MASS * ROD_LEN / 2.0, rel_tol=1e-12)
        assert j[3, 3] == ROD_MASS
        assert np.array_equal(j, j.T)

    def test_rod_second_moment_monte_carlo(self):
        # Uniform thin rod occupies x in [-L, 0] in its own frame.
        rng = np.random.default_rng(12345)
        xs = rng.uniform(-ROD_LEN, 0.0, 1_000_000)
        mc_second = ROD_MASS * float(np.mean(xs * xs))
        mc_first = ROD_MASS * float(np.mean(xs))
        j = pseudo_inertia(uniform_rod_link(ROD_MASS, ROD_LEN))
        assert math.isclose(j[0, 0], mc_second, rel_tol=5e-3)
        assert math.isclose(j[0, 3], mc_first, rel_tol=5e-3)

    def test_point_mass_decomposition_reproduces_moments(self):
        # The FD oracle's point masses must carry the same mass moments.
        for link in (*leg_chain(), *three_link_chain()):
            pts = point_mass_model(link)
            j = pseudo_inertia(link)
            total = sum(m for m, _ in pts)
            first = sum(m * p for m, p in pts)
            second = sum(m * np.outer(p, p) for m, p in pts)
            assert math.isclose(total, link.mass, rel_tol=1e-12)
            assert np.allclose(first, np.array(link.com) * link.mass, atol=1e-12)
            assert np.allclose(second, j[:3, :3], rtol=1e-9, atol=1e-9)


class TestKineticMatrix:
    def test_symmetric_exactly(self):
        chain = leg_chain()
        for state in random_states(10, np.random.default_rng(3)):
            d = kinetic_matrix(chain, state)
            assert np.array_equal(d, d.T)

    def test_positive_semidefinite(self):
        chain = leg_chain()
        for state in random_states(25, np.random.default_rng(4)):
            d = kinetic_matrix(chain, state)
            evals = np.linalg.eigvalsh(d)
            assert evals.min() >= -1e-9 * max(1.0, evals.max())

    def test_scales_linearly_with_mass(self):
        state = LegChainState((0.4, -0.9), (1.0, 2.0), (0.0, 0.0))
        d1 = kinetic_matrix(leg_chain(), state)
        heavy = (
            uniform_rod_link(2 * HORN_MASS, HORN_LEN),
            uniform_rod_link(2 * ROD_MASS, ROD_LEN),
        )
        d2 = kinetic_matrix(heavy, state)
        assert np.allclose(d2, 2.0 * d1, rtol=1e-12)

    def test_massless_chain_gives_zero(self):
        chain = (uniform_rod_link(0.0, HORN_LEN), uniform_rod_link(0.0, ROD_LEN))
        state = LegChainState((0.5, -0.2), (1.0, -3.0), (2.0, 2.0))
        assert np.array_equal(kinetic_matrix(chain, state), np.zeros((2, 2)))

    def test_kinetic_energy_matches_point_mass_model(self):
        chain = leg_chain()
        masses = [point_mass_model(link) for link in chain]
        dq = 1e-6

        def pm_kinetic(q, qd):
            total = 0.0
            for i, pts in enumerate(masses):
                for m, p in pts:
                    vel = np.zeros(3)
                    for j in range(len(chain)):
                        qp = np.array(q)
                        qm = np.array(q)
                        qp[j] += dq
                        qm[j] -= dq
                        tp = chain_world_transform(chain, qp, i)
                        tm = chain_world_transform(chain, qm, i)
                        pp = tp[:3, :3] @ p + tp[:3, 3]
                        pm = tm[:3, :3] @ p + tm[:3, 3]
                        vel += (pp - pm) / (2 * dq) * qd[j]
                    total += 0.5 * m * float(vel @ vel)
            return total

        rng = np.random.default_rng(11)
        for state in random_states(15, rng):
            k_trace = kinetic_energy(chain, state)
            k_points = pm_kinetic(state.theta, state.dtheta)
            assert math.isclose(k_trace, k_points, rel_tol=1e-5, abs_tol=1e-9)


class TestCoriolisVector:
    def test_zero_at_rest(self):
        chain = leg_chain()
        state = LegChainState((0.7, -1.1), (0.0, 0.0), (3.0, -2.0))
        assert np.array_equal(coriolis_vector(chain, state), np.zeros(2))

    def test_quadratic_in_velocity(self):
        chain = leg_chain()
        base = LegChainState((0.4, -0.8), (1.3, -2.1), (0.0, 0.0))
        double = LegChainState((0.4, -0.8), (2.6, -4.2), (0.0, 0.0))
        h1 = coriolis_vector(chain, base)
        h2 = coriolis_vector(chain, double)
        assert np.allclose(h2, 4.0 * h1, rtol=1e-12)


class TestGravityVector:
    def test_single_rod_closed_form(self):
        m, length = 0.05, 90.0
        chain = (uniform_rod_link(m, length),)
        for th in (0.0, math.pi / 3, -math.pi / 2, 1.1):
            state = LegChainState((th,), (0.0,), (0.0,))
            c = gravity_vector(chain, state, GRAVITY)
            expected = m * G_MM * (length / 2.0) * math.cos(th)
            assert math.isclose(c[0], expected, rel_tol=1e-12, abs_tol=1e-9)

    def test_matches_potential_gradient(self):
        chain = leg_chain()
        rng = np.random.default_rng(17)
        dq = 1e-5
        for state in random_states(15, rng):
            c = gravity_vector(chain, state, GRAVITY)
            for k in range(2):
                qp = list(state.theta)
                qm = list(state.theta)
                qp[k] += dq
                qm[k] -= dq
                pp = potential_energy(chain, LegChainState(tuple(qp), (0, 0), (0, 0)), GRAVITY)
                pm = potential_energy(chain, LegChainState(tuple(qm), (0, 0), (0, 0)), GRAVITY)
                fd = (pp - pm) / (2 * dq)
                assert math.isclose(c[k], fd, rel_tol=1e-6, abs_tol=1e-2)

    def test_gravity_row_validation(self):
        chain = leg_chain()
        state = LegChainState((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
        with pytest.raises(ValueError, match="homogeneous"):
            gravity_vector(chain, state, np.array([0.0, -G_MM, 0.0, 1.0]))
        with pytest.raises(ValueError, match="finite"):
            gravity_row(math.inf, 0.0, 0.0)


class TestJointTorque:
    def test_against_fd_lagrangian_two_link(self):
        chain = leg_chain()
        rng = np.random.default_rng(2024)
        for state in random_states(50, rng):
            tau = joint_torque(chain, state, GRAVITY)
            tau_fd = lagrangian_fd_torque(
                chain, state.theta, state.dtheta, state.ddtheta, GRAVITY
            )
            scale = max(1.0, float(np.max(np.abs(tau_fd))))
            assert np.allclose(tau, tau_fd, atol=1e-4 * scale, rtol=1e-4)

    def test_against_fd_lagrangian_three_link(self):
        chain = three_link_chain()
        rng = np.random.default_rng(88)
        for state in random_states(10, rng, links=3):
            tau = joint_torque(chain, state, GRAVITY)
            tau_fd = lagrangian_fd_torque(
                chain, state.theta, state.dtheta, state.ddtheta, GRAVITY
            )
            scale = max(1.0, float(np.max(np.abs(tau_fd))))
            assert np.allclose(tau, tau_fd, atol=1e-4 * scale, rtol=1e-4)

    def test_massless_chain_needs_no_torque(self):
        chain = (uniform_rod_link(0.0, HORN_LEN), uniform_rod_link(0.0, ROD_LEN))
        state = LegChainState((0.3, -0.6), (2.0, 1.0), (5.0, -4.0))
        assert np.array_equal(joint_torque(chain, state, GRAVITY), np.zeros(2))

    def test_equals_sum_of_parts(self):
        chain = leg_chain()
        state = LegChainState((0.5, -0.3), (1.5, -2.5), (10.0, 4.0))
        tau = joint_torque(chain, state, GRAVITY)
        parts = (
            kinetic_matrix(chain, state) @ np.array(state.ddtheta)
            + coriolis_vector(chain, state)
            + gravity_vector(chain, state, GRAVITY)
        )
        assert np.allclose(tau, parts, rtol=1e-15, atol=1e-12)

    def test_static_torque_is_pure_gravity(self):
        chain = leg_chain()
        state = LegChainState((0.2, -0.4), (0.0, 0.0), (0.0, 0.0))
        tau = joint_torque(chain, state, GRAVITY)
        assert np.allclose(tau, gravity_vector(chain, state, GRAVITY), atol=1e-12)


class TestEnergy:
    def test_potential_single_rod_closed_form(self):
        m, length = 0.04, 120.0
        chain = (uniform_rod_link(m, length),)
        for th in (0.0, 0.8, math.pi / 2, -1.3):
            state = LegChainState((th,), (0.0,), (0.0,))
            p = potential_energy(chain, state, GRAVITY)
            assert math.isclose(
                p, m * G_MM * (length / 2.0) * math.sin(th), rel_tol=1e-12, abs_tol=1e-9
            )

    def test_unforced_swing_conserves_energy(self):
        chain = leg_chain()
        dt = 1e-4
        steps = 5000  # 0.5 s of swing

        def f(t, y):
            ddq = free_acceleration(chain, y[:2], y[2:], GRAVITY)
            return np.concatenate([y[2:], ddq])

        def energy(y):
            state = LegChainState(tuple(y[:2]), tuple(y[2:]), (0.0, 0.0))
            return (
                kinetic_energy(chain, state),
                potential_energy(chain, state, GRAVITY),
            )

        y = np.array([0.4, -0.7, 0.0, 0.0])
        k0, p0 = energy(y)
        e0 = k0 + p0
        max_kinetic = 0.0
        max_drift = 0.0
        for step in range(steps):
            y = rk4_step(f, y, step * dt, dt)
            if step % 25 == 24:
                k, p = energy(y)
                max_kinetic = max(max_kinetic, k)
                max_drift = max(max_drift, abs(k + p - e0))
        assert max_kinetic > 0.0  # it actually swung
        assert max_drift <= 1e-4 * max_kinetic


@settings(deadline=None)
@given(
    m1=st.floats(0.001, 0.5),
    m2=st.floats(0.001, 0.5),
    l1=st.floats(10.0, 100.0),
    l2=st.floats(10.0, 200.0),
    th1=st.floats(-math.pi, math.pi),
    th2=st.floats(-math.pi, math.pi),
    w1=st.floats(-8.0, 8.0),
    w2=st.floats(-8.0, 8.0),
)
def test_inertia_psd_and_rest_coupling_property(m1, m2, l1, l2, th1, th2, w1, w2):
    chain = (uniform_rod_link(m1, l1), uniform_rod_link(m2, l2))
    state = LegChainState((th1, th2), (w1, w2), (0.0, 0.0))
    d = kinetic_matrix(chain, state)
    assert np.array_equal(d, d.T)
    evals = np.linalg.eigvalsh(d)
    assert evals.min() >= -1e-9 * max(1.0, evals.max())
    rest = LegChainState((th1, th2), (0.0, 0.0), (0.0, 0.0))
    assert np.array_equal(coriolis_vector(chain, rest), np.zeros(2))
    assert kinetic_energy(chain, state) >= -1e-12
