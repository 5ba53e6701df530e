import numpy as np
import pytest

import quadbench as qb
from quadbench.qp import BoxQP, solve_box_qp


def slow_projected_gradient(h, g, lb, ub, iters=200000):
    """Independent oracle: plain projected gradient with a 1/L step."""
    lipschitz = np.linalg.eigvalsh(h).max()
    z = np.clip(np.zeros(g.size), lb, ub)
    for _ in range(iters):
        z = np.clip(z - (h @ z + g) / lipschitz, lb, ub)
    return z


def random_problem(rng, n):
    m = rng.normal(size=(n, n))
    h = m.T @ m + np.eye(n)
    g = rng.normal(size=n) * 2.0
    lb = rng.uniform(-1.5, -0.2, n)
    ub = rng.uniform(0.2, 1.5, n)
    return BoxQP(h=h, g=g, lb=lb, ub=ub)


class TestConstruction:
    def test_rejects_asymmetric(self):
        h = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            BoxQP(h=h, g=np.zeros(2), lb=-np.ones(2), ub=np.ones(2))

    def test_rejects_crossed_bounds(self):
        with pytest.raises(ValueError, match="lb > ub"):
            BoxQP(h=np.eye(2), g=np.zeros(2), lb=np.array([0.0, 1.0]), ub=np.array([1.0, 0.0]))

    def test_allows_infinite_bounds(self):
        problem = BoxQP(h=np.eye(2), g=np.array([-1.0, 2.0]), lb=np.full(2, -np.inf), ub=np.full(2, np.inf))
        sol = solve_box_qp(problem)
        assert np.abs(sol.z - [1.0, -2.0]).max() < 1e-7


class TestKnownSolutions:
    def test_interior_minimum(self):
        problem = BoxQP(h=np.eye(2), g=np.array([-1.0, -2.0]), lb=np.full(2, -10.0), ub=np.full(2, 10.0))
        sol = solve_box_qp(problem)
        assert sol.optimal
        assert np.abs(sol.z - [1.0, 2.0]).max() < 1e-7

    def test_clamped_minimum(self):
        problem = BoxQP(h=np.eye(2), g=np.array([-5.0, 0.0]), lb=-np.ones(2), ub=np.ones(2))
        sol = solve_box_qp(problem)
        assert sol.optimal
        assert np.abs(sol.z - [1.0, 0.0]).max() < 1e-9

    def test_matches_slow_oracle_on_random_problems(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            problem = random_problem(rng, n)
            sol = solve_box_qp(problem, tol=1e-10)
            oracle = slow_projected_gradient(problem.h, problem.g, problem.lb, problem.ub)
            assert sol.optimal
            assert sol.kkt_residual <= 1e-8
            assert np.abs(sol.z - oracle).max() < 1e-6

    def test_solution_beats_random_feasible_points(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            n = int(rng.integers(2, 7))
            problem = random_problem(rng, n)
            sol = solve_box_qp(problem)
            best = problem.objective(sol.z)
            samples = rng.uniform(problem.lb, problem.ub, size=(10000, n))
            values = 0.5 * np.einsum("ki,ij,kj->k", samples, problem.h, samples) + samples @ problem.g
            assert best <= values.min() + 1e-9


class TestIterateContracts:
    def test_monotone_descent_and_feasible_iterates(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            problem = random_problem(rng, n)
            values = []

            def watch(z):
                assert np.all(z >= problem.lb - 1e-15) and np.all(z <= problem.ub + 1e-15)
                values.append(problem.objective(z))

            warm = rng.uniform(problem.lb, problem.ub)
            solve_box_qp(problem, warm_start=warm, callback=watch)
            diffs = np.diff(np.array(values))
            assert np.all(diffs <= 1e-9)

    def test_warm_start_outside_box_is_projected(self):
        problem = BoxQP(h=np.eye(2), g=np.zeros(2), lb=-np.ones(2), ub=np.ones(2))
        sol = solve_box_qp(problem, warm_start=np.array([5.0, -7.0]))
        assert np.all(sol.z >= problem.lb) and np.all(sol.z <= problem.ub)

    def test_semidefinite_hessian_regularized(self):
        # Rank-deficient H: regularization keeps the solve well posed.
        h = np.outer([1.0, 1.0], [1.0, 1.0])
        problem = BoxQP(h=h, g=np.array([-1.0, -1.0]), lb=np.zeros(2), ub=np.ones(2))
        sol = solve_box_qp(problem)
        assert sol.optimal
        assert np.abs(sol.z - [1.0, 1.0]).max() < 1e-6

    def test_max_iterations_status_is_feasible(self):
        rng = np.random.default_rng(3)
        problem = random_problem(rng, 5)
        sol = solve_box_qp(problem, tol=1e-14, max_iter=1)
        assert sol.status in ("optimal", "max_iterations")
        assert np.all(sol.z >= problem.lb) and np.all(sol.z <= problem.ub)
