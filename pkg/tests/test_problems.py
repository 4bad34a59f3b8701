import numpy as np
import pytest

from qnops.problems import (
    NonlinearSystem,
    SmoothProblem,
    circle_cosine_system,
    modified_rosenbrock_10,
    motivating_quadratic_2d,
    quadratic_weighted_50,
    random_spd_matrix,
    random_spd_quadratic,
)


def fd_gradient(f, x):
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_jacobian(F, x):
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((F(xp) - F(xm)) / (2.0 * h))
    return np.column_stack(cols)


def assert_gradient_consistent(problem, x):
    g = problem.gradient(x)
    approx = fd_gradient(problem.objective, x)
    assert np.linalg.norm(g - approx) <= 1e-5 * max(1.0, np.linalg.norm(g))


def assert_jacobian_consistent(system, x):
    J = system.jacobian(x)
    approx = fd_jacobian(system.residual, x)
    assert np.linalg.norm(J - approx, "fro") <= 1e-5 * max(1.0, np.linalg.norm(J, "fro"))


class TestWeightedQuadratic:
    def test_objective_at_start(self):
        p = quadratic_weighted_50()
        assert p.objective(p.x0) == pytest.approx(637.5)

    def test_gradient_on_first_axis(self):
        p = quadratic_weighted_50()
        e1 = np.zeros(50)
        e1[0] = 1.0
        np.testing.assert_allclose(p.gradient(e1), e1)

    def test_gradient_at_start_counts_up(self):
        p = quadratic_weighted_50()
        np.testing.assert_allclose(p.gradient(p.x0), np.arange(1.0, 51.0))

    def test_dimensions_and_solution(self):
        p = quadratic_weighted_50()
        assert p.n == 50
        np.testing.assert_array_equal(p.x_star, np.zeros(50))
        np.testing.assert_allclose(p.hessian, np.diag(np.arange(1.0, 51.0)))

    def test_gradient_matches_objective(self):
        p = quadratic_weighted_50()
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert_gradient_consistent(p, rng.standard_normal(50))


class TestMotivatingQuadratic:
    def test_setup_fields(self):
        p, setup = motivating_quadratic_2d()
        np.testing.assert_allclose(setup["b0"], np.diag([1.0, 1e6]))
        assert setup["grad_rtol"] == 1e-6
        theta = np.radians(89.0)
        np.testing.assert_allclose(p.x0, [np.cos(theta), np.sin(theta)])

    def test_identity_hessian(self):
        p, _ = motivating_quadratic_2d()
        np.testing.assert_array_equal(p.hessian, np.eye(2))
        assert_gradient_consistent(p, np.array([0.3, -1.2]))


class TestCircleCosine:
    def test_root(self):
        sys = circle_cosine_system()
        assert sys.n == 2
        r = sys.residual(np.array([0.5, 0.5]))
        np.testing.assert_allclose(r, [-0.5, 0.5 - np.cos(0.5)])

    def test_jacobian_matches_residual(self):
        sys = circle_cosine_system()
        rng = np.random.default_rng(1)
        for _ in range(5):
            assert_jacobian_consistent(sys, rng.uniform(-1.0, 1.0, 2))

    def test_start(self):
        sys = circle_cosine_system()
        np.testing.assert_allclose(sys.x0, [0.5, 0.5])


class TestModifiedRosenbrock:
    def test_solution_is_root(self):
        sys = modified_rosenbrock_10()
        assert sys.n == 10
        np.testing.assert_allclose(sys.residual(sys.x_star), np.zeros(10), atol=1e-14)
        np.testing.assert_array_equal(sys.x_star, np.ones(10))

    def test_start(self):
        sys = modified_rosenbrock_10()
        np.testing.assert_allclose(sys.x0, np.full(10, 0.5))

    def test_block_structure(self):
        sys = modified_rosenbrock_10()
        x = np.linspace(0.1, 1.0, 10)
        r = sys.residual(x)
        for i in range(0, 10, 2):
            assert r[i] == pytest.approx(10.0 * (x[i + 1] - x[i] ** 2))
            assert r[i + 1] == pytest.approx(1.0 - x[i])

    def test_jacobian_matches_residual(self):
        sys = modified_rosenbrock_10()
        rng = np.random.default_rng(2)
        for _ in range(5):
            assert_jacobian_consistent(sys, rng.uniform(0.0, 1.5, 10))


class TestRandomSpd:
    def test_spectrum_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 11))
            lo, hi = sorted(rng.uniform(0.1, 10.0, 2))
            A = random_spd_matrix(n, rng, spectrum=(lo, hi))
            w = np.linalg.eigvalsh(A)
            assert w.min() >= lo * (1 - 1e-10)
            assert w.max() <= hi * (1 + 1e-10)
            assert np.linalg.norm(A - A.T, "fro") <= 1e-12 * np.linalg.norm(A, "fro")

    def test_degenerate_spectrum_is_scaled_identity(self):
        rng = np.random.default_rng(4)
        A = random_spd_matrix(3, rng, spectrum=(2.0, 2.0))
        np.testing.assert_allclose(A, 2.0 * np.eye(3), atol=1e-12)

    def test_reproducible_from_seed(self):
        A = random_spd_matrix(4, np.random.default_rng(7))
        B = random_spd_matrix(4, np.random.default_rng(7))
        np.testing.assert_array_equal(A, B)

    def test_quadratic_wrapper(self):
        p = random_spd_quadratic(5, spectrum=(0.5, 5.0), seed=11)
        assert p.n == 5
        np.testing.assert_array_equal(p.x_star, np.zeros(5))
        assert_gradient_consistent(p, np.ones(5))
        np.testing.assert_allclose(
            p.gradient(np.ones(5)), p.hessian @ np.ones(5), atol=1e-12
        )


class TestContainers:
    def test_smooth_problem_holds_callables(self):
        p = SmoothProblem(
            n=1,
            objective=lambda x: float(x[0] ** 2),
            gradient=lambda x: 2 * x,
        )
        assert p.hessian is None
        assert p.x_star is None
        assert p.objective(np.array([3.0])) == 9.0

    def test_system_holds_callables(self):
        sys = NonlinearSystem(n=1, residual=lambda x: x - 1.0)
        assert sys.jacobian is None
        np.testing.assert_allclose(sys.residual(np.array([2.0])), [1.0])
