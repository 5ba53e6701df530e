import numpy as np
import pytest

import quadbench as qb
from quadbench.dynamics import (
    ATT,
    POS,
    RATE,
    VEL,
    QuadParams,
    SingularAttitudeError,
    hover_input,
    wrap_angle,
)


def el_torque_fd(att, rate, acc, params, h=1e-5):
    """Finite-difference Euler-Lagrange torque for the rotational energy.

    Independent oracle: differentiates the generalized momentum along a
    quadratic attitude path and subtracts the energy gradient, never
    touching the closed-form coupling matrix.
    """

    def momentum(t):
        a = att + rate * t + 0.5 * acc * t * t
        r = rate + acc * t
        return qb.inertia_jacobian(a, params) @ r

    dp_dt = (momentum(h) - momentum(-h)) / (2.0 * h)
    grad = np.zeros(3)
    for i in range(3):
        ap, am = att.copy(), att.copy()
        ap[i] += h
        am[i] -= h
        kp = 0.5 * rate @ qb.inertia_jacobian(ap, params) @ rate
        km = 0.5 * rate @ qb.inertia_jacobian(am, params) @ rate
        grad[i] = (kp - km) / (2.0 * h)
    return dp_dt - grad


class TestQuadParams:
    def test_defaults_valid(self, params):
        assert params.mass > 0 and params.inertia_xx == params.inertia_yy

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="mass"):
            QuadParams(mass=0.0)
        with pytest.raises(ValueError, match="thrust_coeff"):
            QuadParams(thrust_coeff=-1.0)

    def test_rejects_asymmetric_inertia(self):
        with pytest.raises(ValueError, match="inertia_xx"):
            QuadParams(inertia_xx=5e-3, inertia_yy=6e-3)


class TestRotationMatrix:
    def test_identity_at_zero(self):
        assert np.allclose(qb.rotation_matrix(np.zeros(3)), np.eye(3))

    def test_pure_yaw_quarter_turn(self):
        r = qb.rotation_matrix(np.array([0.0, 0.0, np.pi / 2]))
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(r, expected, atol=1e-15)

    def test_third_row_structure(self):
        phi, theta = 0.3, -0.4
        r = qb.rotation_matrix(np.array([phi, theta, 1.1]))
        row = [-np.sin(theta), np.cos(theta) * np.sin(phi), np.cos(theta) * np.cos(phi)]
        assert np.allclose(r[2], row)

    def test_orthonormal_at_sample_point(self):
        r = qb.rotation_matrix(np.array([0.1, 0.2, 0.3]))
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(r) - 1.0) < 1e-12

    def test_orthonormal_random_attitudes(self):
        rng = np.random.default_rng(7)
        att = rng.uniform([-1.4, -1.4, -np.pi], [1.4, 1.4, np.pi], size=(1000, 3))
        r = qb.rotation_matrix(att)
        gram = np.einsum("nij,nik->njk", r, r)
        assert np.abs(gram - np.eye(3)).max() < 1e-10
        assert np.abs(np.linalg.det(r) - 1.0).max() < 1e-10


class TestEulerRateMatrices:
    def test_identity_at_level_attitude(self):
        for psi in (0.0, 1.0, -2.5):
            att = np.array([0.0, 0.0, psi])
            assert np.allclose(qb.euler_rate_matrix(att), np.eye(3))
            assert np.allclose(qb.inverse_euler_rate_matrix(att), np.eye(3))

    def test_product_is_identity(self):
        att = np.array([0.3, 0.4, 0.0])
        prod = qb.inverse_euler_rate_matrix(att) @ qb.euler_rate_matrix(att)
        assert np.abs(prod - np.eye(3)).max() < 1e-12

    def test_singular_pitch_raises(self):
        att = np.array([0.0, np.pi / 2, 0.0])
        with pytest.raises(SingularAttitudeError):
            qb.euler_rate_matrix(att)
        with pytest.raises(SingularAttitudeError):
            qb.inverse_euler_rate_matrix(att)


class TestInertiaJacobian:
    def test_diagonal_at_zero(self, params):
        j = qb.inertia_jacobian(np.zeros(3), params)
        assert np.allclose(j, np.diag(params.inertia_diag))

    def test_matches_triple_product(self, params):
        att = np.array([0.2, 0.3, 0.1])
        w = qb.euler_rate_matrix(att)
        triple = w.T @ np.diag(params.inertia_diag) @ w
        assert np.abs(qb.inertia_jacobian(att, params) - triple).max() < 1e-12

    def test_symmetric_positive_definite_on_grid(self, params):
        phis = np.linspace(-1.4, 1.4, 9)
        thetas = np.linspace(-(np.pi / 2 - 0.1), np.pi / 2 - 0.1, 9)
        for phi in phis:
            for theta in thetas:
                j = qb.inertia_jacobian(np.array([phi, theta, 0.7]), params)
                assert np.abs(j - j.T).max() < 1e-12
                assert np.linalg.eigvalsh(j).min() > 0.0


class TestCoriolisMatrix:
    def test_zero_at_zero_rate(self, params):
        c = qb.coriolis_matrix(np.array([0.4, -0.3, 1.2]), np.zeros(3), params)
        assert np.allclose(c, 0.0)

    def test_matches_lagrangian_oracle_at_sample(self, params):
        att = np.array([0.1, 0.2, 0.3])
        rate = np.array([0.4, -0.2, 0.5])
        acc = np.array([0.3, 0.1, -0.2])
        tau = qb.inertia_jacobian(att, params) @ acc + qb.coriolis_matrix(att, rate, params) @ rate
        oracle = el_torque_fd(att, rate, acc, params)
        assert np.abs(tau - oracle).max() / max(1.0, np.abs(oracle).max()) < 1e-5

    def test_matches_lagrangian_oracle_simple_point(self, params):
        att = np.zeros(3)
        rate = np.array([0.0, 0.0, 1.0])
        tau = qb.coriolis_matrix(att, rate, params) @ rate
        oracle = el_torque_fd(att, rate, np.zeros(3), params)
        assert np.abs(tau - oracle).max() < 1e-6

    def test_lagrangian_equivalence_random(self, params):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            att = rng.uniform([-1.3, -1.3, -np.pi], [1.3, 1.3, np.pi])
            rate = rng.uniform(-2.0, 2.0, 3)
            acc = rng.uniform(-2.0, 2.0, 3)
            tau = qb.inertia_jacobian(att, params) @ acc + qb.coriolis_matrix(att, rate, params) @ rate
            oracle = el_torque_fd(att, rate, acc, params)
            assert np.abs(tau - oracle).max() / max(1.0, np.abs(oracle).max()) < 1e-5


class TestControlAllocation:
    def test_zero_input(self, params):
        thrust, torque = qb.control_allocation(np.zeros(4), params)
        assert thrust == 0.0 and np.allclose(torque, 0.0)

    def test_hover_matches_weight(self, params):
        thrust, torque = qb.control_allocation(hover_input(params), params)
        assert abs(thrust - params.mass * params.gravity) < 1e-12
        assert np.allclose(torque, 0.0)

    def test_opposite_pair_yaw_torque(self, params):
        thrust, torque = qb.control_allocation(np.array([0.0, 1.0, 0.0, 1.0]), params)
        assert torque[0] == 0.0 and torque[1] == 0.0
        assert np.isclose(torque[2], -2.0 * params.drag_coeff)

    def test_negative_entry_rejected(self, params):
        with pytest.raises(ValueError, match="squared speeds"):
            qb.control_allocation(np.array([1.0, -0.1, 0.0, 0.0]), params)

    def test_linearity(self, params):
        rng = np.random.default_rng(3)
        u1 = rng.uniform(0.0, 10.0, 4)
        u2 = rng.uniform(0.0, 10.0, 4)
        a, b = 0.7, 1.9
        t1, q1 = qb.control_allocation(u1, params)
        t2, q2 = qb.control_allocation(u2, params)
        t3, q3 = qb.control_allocation(a * u1 + b * u2, params)
        assert abs(t3 - (a * t1 + b * t2)) < 1e-12
        assert np.abs(q3 - (a * q1 + b * q2)).max() < 1e-12

    def test_inverse_round_trip(self, params):
        rng = np.random.default_rng(5)
        for _ in range(50):
            thrust = rng.uniform(6.0, 18.0)
            torque = rng.uniform(-1.0, 1.0, 3) * np.array([0.3, 0.3, 0.03])
            u = qb.inverse_control_allocation(thrust, torque, params)
            assert np.all(u >= 0.0)
            t2, q2 = qb.control_allocation(u, params)
            assert abs(t2 - thrust) < 1e-10
            assert np.abs(q2 - torque).max() < 1e-10


class TestDynamicsRhs:
    def test_hover_equilibrium(self, params):
        xdot = qb.dynamics_rhs(np.zeros(12), hover_input(params), np.zeros(3), params)
        assert np.abs(xdot).max() < 1e-10

    def test_free_fall(self, params):
        xdot = qb.dynamics_rhs(np.zeros(12), np.zeros(4), np.zeros(3), params)
        expected = np.zeros(12)
        expected[8] = -params.gravity
        assert np.allclose(xdot, expected)

    def test_downward_disturbance_force(self, params):
        xdot = qb.dynamics_rhs(np.zeros(12), hover_input(params), np.array([0.0, 0.0, -1.0]), params)
        assert np.allclose(xdot[VEL], [0.0, 0.0, -1.0 / params.mass])

    def test_singular_pitch_propagates(self, params):
        x = np.zeros(12)
        x[4] = np.pi / 2
        with pytest.raises(SingularAttitudeError):
            qb.dynamics_rhs(x, hover_input(params), np.zeros(3), params)

    def test_batched_evaluation_matches_scalar(self, params):
        rng = np.random.default_rng(9)
        xs = rng.uniform(-0.5, 0.5, size=(6, 12))
        us = rng.uniform(0.0, 10.0, size=(6, 4))
        batch = qb.dynamics_rhs(xs, us, np.zeros(3), params)
        for i in range(6):
            single = qb.dynamics_rhs(xs[i], us[i], np.zeros(3), params)
            assert np.abs(batch[i] - single).max() < 1e-14


class TestHoverInput:
    def test_anchor_value_exact(self, params):
        assert np.all(hover_input(params) == 4.9)

    def test_scales_with_mass(self, params):
        heavier = QuadParams(mass=2.0, thrust_coeff=params.thrust_coeff)
        assert np.allclose(hover_input(heavier), 2.0 * hover_input(params))

    def test_closure_under_dynamics(self):
        for mass in (0.7, 1.0, 2.3):
            p = QuadParams.calibrated(mass=mass)
            xdot = qb.dynamics_rhs(np.zeros(12), hover_input(p), np.zeros(3), p)
            assert np.abs(xdot).max() < 1e-10


def test_energy_conservation_free_fall(params):
    """Unpowered flight from rest conserves mechanical energy under RK4."""
    x = np.zeros(12)
    x[2] = 5.0

    def f(xs, us, fs):
        return qb.dynamics_rhs(xs, us, fs, params)

    e0 = params.mass * params.gravity * x[2]
    for _ in range(100):
        x = qb.rk4_step(f, x, np.zeros(4), np.zeros(3), 0.01)
    energy = params.mass * params.gravity * x[2] + 0.5 * params.mass * np.sum(x[VEL] ** 2)
    assert abs(energy - e0) / e0 < 1e-6


def test_wrap_angle_range():
    vals = wrap_angle(np.array([0.0, np.pi, -np.pi, 3 * np.pi, -3 * np.pi, 7.0]))
    assert np.all(vals > -np.pi) and np.all(vals <= np.pi)
    assert vals[1] == np.pi and vals[2] == np.pi
