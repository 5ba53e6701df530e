import numpy as np
import pytest

import quadbench as qb
from quadbench.dynamics import hover_input
from quadbench.numerics import LinearModel, discretize, linearize, rk4_step


class TestRk4Step:
    def test_zero_field_leaves_state(self):
        x = np.array([1.0, -2.0, 3.0])
        out = rk4_step(lambda xs, u, f: np.zeros_like(xs), x, None, None, 0.3)
        assert np.array_equal(out, x)

    def test_scalar_exponential_decay(self):
        out = rk4_step(lambda xs, u, f: -xs, np.array([1.0]), None, None, 0.1)
        assert abs(out[0] - np.exp(-0.1)) < 1e-7

    def test_hover_is_fixed_point(self, params):
        def f(xs, us, fs):
            return qb.dynamics_rhs(xs, us, fs, params)

        x = np.zeros(12)
        for dt in (0.01, 0.05, 0.1):
            out = rk4_step(f, x, hover_input(params), np.zeros(3), dt)
            assert np.abs(out - x).max() < 1e-12

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError, match="dt"):
            rk4_step(lambda xs, u, f: xs, np.zeros(2), None, None, 0.0)

    def test_free_fall_parabola_global_error(self, params):
        def f(xs, us, fs):
            return qb.dynamics_rhs(xs, us, fs, params)

        x = np.zeros(12)
        x[2] = 10.0
        for _ in range(100):
            x = rk4_step(f, x, np.zeros(4), np.zeros(3), 0.01)
        exact_z = 10.0 - 0.5 * params.gravity * 1.0**2
        assert abs(x[2] - exact_z) < 1e-9
        assert abs(x[8] + params.gravity * 1.0) < 1e-9


class TestLinearize:
    def test_hover_state_jacobian_structure(self, params):
        def f(xs, us, fs):
            return qb.dynamics_rhs(xs, us, fs, params)

        a_c, b_c, v_c = linearize(f, np.zeros(12), hover_input(params))
        # velocity passthrough rows
        assert np.abs(a_c[0:3, 6:9] - np.eye(3)).max() < 1e-6
        assert np.abs(a_c[3:6, 9:12] - np.eye(3)).max() < 1e-6
        # small-angle gravity tilt coupling
        assert abs(a_c[6, 4] - params.gravity) < 1e-5
        assert abs(a_c[7, 3] + params.gravity) < 1e-5
        # thrust column: vertical acceleration per unit rotor input
        assert np.abs(b_c[8] - params.thrust_coeff / params.mass).max() < 1e-6

    def test_disturbance_jacobian_is_inverse_mass(self, params):
        def f(xs, us, fs):
            return qb.dynamics_rhs(xs, us, fs, params)

        _, _, v_c = linearize(f, np.zeros(12), hover_input(params))
        expected = np.zeros((12, 3))
        expected[6:9] = np.eye(3) / params.mass
        assert np.abs(v_c - expected).max() < 1e-9

    def test_directional_derivative_random_points(self, params):
        def f(xs, us, fs):
            return qb.dynamics_rhs(xs, us, fs, params)

        rng = np.random.default_rng(13)
        eps = 1e-6
        for _ in range(50):
            x0 = rng.uniform(-0.5, 0.5, 12)
            u0 = rng.uniform(2.0, 8.0, 4)
            a_c, _, _ = linearize(f, x0, u0)
            v = rng.normal(size=12)
            v /= np.linalg.norm(v)
            lhs = f(x0 + eps * v, u0, np.zeros(3)) - f(x0, u0, np.zeros(3))
            assert np.abs(lhs / eps - a_c @ v).max() < 1e-5


class TestDiscretize:
    def test_zero_dynamics_gives_identity(self):
        model = discretize(np.zeros((3, 3)), np.zeros((3, 1)), np.zeros((3, 1)), 0.1)
        assert np.array_equal(model.a, np.eye(3))

    def test_single_entry_scaling(self):
        a_c = np.zeros((2, 2))
        a_c[0, 1] = 1.0
        model = discretize(a_c, np.zeros((2, 1)), np.zeros((2, 1)), 0.1)
        assert model.a[0, 1] == pytest.approx(0.1)

    def test_double_integrator(self):
        a_c = np.array([[0.0, 1.0], [0.0, 0.0]])
        b_c = np.array([[0.0], [1.0]])
        model = discretize(a_c, b_c, np.zeros((2, 1)), 0.1)
        assert np.allclose(model.a, [[1.0, 0.1], [0.0, 1.0]])
        assert np.allclose(model.b, [[0.0], [0.1]])

    def test_linear_in_matrices(self):
        rng = np.random.default_rng(2)
        a1, a2 = rng.normal(size=(2, 4, 4))
        b1, b2 = rng.normal(size=(2, 4, 2))
        v1, v2 = rng.normal(size=(2, 4, 3))
        m1 = discretize(a1, b1, v1, 0.2)
        m2 = discretize(a2, b2, v2, 0.2)
        m3 = discretize(a1 + a2, b1 + b2, v1 + v2, 0.2)
        assert np.allclose(m3.a - np.eye(4), (m1.a - np.eye(4)) + (m2.a - np.eye(4)))
        assert np.allclose(m3.b, m1.b + m2.b)
        assert np.allclose(m3.v, m1.v + m2.v)


class TestLinearModel:
    def test_validates_shapes(self):
        with pytest.raises(ValueError, match="square"):
            LinearModel(a=np.zeros((2, 3)), b=np.zeros((2, 1)), v=np.zeros((2, 1)), dt=0.1)
        with pytest.raises(ValueError, match="dt"):
            LinearModel(a=np.eye(2), b=np.zeros((2, 1)), v=np.zeros((2, 1)), dt=0.0)

    def test_rejects_nonfinite(self):
        a = np.eye(2)
        a[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            LinearModel(a=a, b=np.zeros((2, 1)), v=np.zeros((2, 1)), dt=0.1)
