import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canetoads import hamilton_jacobi as hj


class TestCubicRoot:
    @pytest.mark.parametrize("x, theta, z", [(0.0, 5.0, 0.0), (9.0, 0.0, -3.0), (-4 / 3, 1.0, 1.0)])
    def test_examples(self, x, theta, z):
        assert hj.cubic_real_root(x, theta) == pytest.approx(z, abs=1e-14)

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            hj.cubic_real_root(1.0, -0.1)

    def test_residual_log_sample(self):
        mags = np.geomspace(1e-8, 1e6, 200)
        x = np.concatenate([mags, -mags, [0.0]])
        th = np.concatenate([[0.0], np.geomspace(1e-8, 1e4, 120)])
        X, TH = np.meshgrid(x, th)
        z = hj.cubic_real_root(X, TH)
        res = np.abs(z**3 + 3 * TH * z + 3 * X)
        assert np.all(res <= 1e-10 * (1 + np.abs(X) + TH**1.5))

    def test_no_cancellation_small_x(self):
        # Z ~ -x / theta when |x| << theta^(3/2)
        z = hj.cubic_real_root(1e-12, 1e4)
        assert z == pytest.approx(-1e-16, rel=1e-10)

    # subnormal x gives a root -x/theta below the smallest double, which rounds to 0
    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1e4, 1e4, allow_subnormal=False), st.floats(0, 1e3))
    def test_sign_and_residual(self, x, theta):
        z = hj.cubic_real_root(x, theta)
        assert abs(z**3 + 3 * theta * z + 3 * x) <= 1e-10 * (1 + abs(x) + theta**1.5)
        assert np.sign(z) == -np.sign(x)

    def test_strictly_decreasing_in_x(self):
        x = np.linspace(-50, 50, 2001)
        for th in (0.0, 0.5, 3.0, 20.0):
            assert np.all(np.diff(hj.cubic_real_root(x, np.full_like(x, th))) < 0)

    def test_derivative_matches_closed_form(self):
        x, th, h = 2.3, 1.7, 1e-6
        z = hj.cubic_real_root(x, th)
        fd = (hj.cubic_real_root(x + h, th) - hj.cubic_real_root(x - h, th)) / (2 * h)
        assert fd == pytest.approx(-1 / (z * z + th), rel=1e-7)


class TestPsi:
    @pytest.mark.parametrize("t, x, theta, val", [(2, 0, 4, 2), (1, -4 / 3, 1, 1), (1, 4 / 3, 1, 1)])
    def test_examples(self, t, x, theta, val):
        assert hj.psi(t, x, theta) == pytest.approx(val, rel=1e-13)

    def test_t_positive(self):
        with pytest.raises(ValueError):
            hj.psi(0.0, 1.0, 1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.1, 10), st.floats(-50, 50), st.floats(0, 20))
    def test_lower_bound(self, t, x, theta):
        assert hj.psi(t, x, theta) >= theta**2 / (4 * t) * (1 - 1e-14)

    def test_equality_only_at_zero(self):
        assert hj.psi(1.0, 0.0, 3.0) == 9 / 4
        assert hj.psi(1.0, 1e-3, 3.0) > 9 / 4


class TestMinimizer:
    def test_examples(self):
        assert hj.theta_star(4 / 3) == pytest.approx(1.0)
        assert hj.psi_min(1, 4 / 3) == pytest.approx(1.0)
        assert hj.theta_star(36) == pytest.approx(9.0)
        assert hj.psi_min(3, 36) == pytest.approx(27.0)

    def test_boundary_flag(self):
        m = hj.psi_minimum(1.0, 0.0, 1.0)
        assert bool(m.boundary) and float(m.theta) == 1.0

    def test_interior_minimum(self):
        for x in (2.0, 10.0, -40.0):
            ths = hj.theta_star(x)
            grid = np.linspace(1.0, 4 * ths + 5, 4001)
            vals = hj.psi(2.0, np.full_like(grid, x), grid)
            assert np.all(vals >= hj.psi_min(2.0, x) * (1 - 1e-12))
            assert hj.psi(2.0, x, ths) == pytest.approx(hj.psi_min(2.0, x), rel=1e-10)

    def test_critical_radius(self):
        assert hj.critical_radius(1.0) == pytest.approx(4 / 3)
        assert hj.theta_star(hj.critical_radius(2.5)) == pytest.approx(2.5)


class TestLevelSet:
    def test_examples(self):
        assert hj.level_set_x(3.0, 6.0) == pytest.approx(0.0)
        assert hj.level_set_x(1.0, 1.0) == pytest.approx(4 / 3)
        # direct substitution gives (2/3) sqrt 2, see the decisions ledger
        assert hj.level_set_x(1.0, 0.0) == pytest.approx(2 / 3 * math.sqrt(2))

    def test_empty_above_2t(self):
        with pytest.raises(ValueError):
            hj.level_set_x(1.0, 2.5)

    def test_argmax_is_t(self):
        for t in (0.5, 2.0, 7.0):
            th = np.linspace(0, 2 * t, 2001)
            i = np.argmax(hj.level_set_x(t, th))
            assert abs(th[i] - t) <= th[1] - th[0]
            assert hj.level_set_x(t, t) == pytest.approx(hj.edge_point(t).x_edge)

    def test_psi_equals_t_on_level_set(self):
        t = 2.5
        th = np.linspace(0.01, 2 * t - 0.01, 50)
        assert np.allclose(hj.psi(t, hj.level_set_x(t, th), th), t, rtol=1e-10)


class TestTrajectory:
    def test_endpoints(self):
        assert hj.optimal_trajectory(1.0, 0.0) == (0.0, 0.0)
        X, TH = hj.optimal_trajectory(4.0, 4.0)
        assert X == pytest.approx(4 / 3 * 8) and TH == pytest.approx(4.0)

    def test_midpoint(self):
        X, TH = hj.optimal_trajectory(1.0, 0.5)
        assert X == pytest.approx(5 / 12) and TH == pytest.approx(3 / 4)

    def test_theta_concave_increasing(self):
        s = np.linspace(0, 3, 301)
        _, th = hj.optimal_trajectory(3.0, s)
        assert np.all(np.diff(th) > 0) and np.all(np.diff(th, 2) < 0)

    def test_velocity_is_derivative(self):
        s, h = np.linspace(0.1, 1.9, 19), 1e-6
        X1, T1 = hj.optimal_trajectory(2.0, s + h)
        X0, T0 = hj.optimal_trajectory(2.0, s - h)
        vx, vt = hj.optimal_velocity(2.0, s)
        assert np.allclose((X1 - X0) / (2 * h), vx, rtol=1e-7)
        assert np.allclose((T1 - T0) / (2 * h), vt, rtol=1e-6, atol=1e-8)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            hj.optimal_trajectory(1.0, 1.5)


class TestLagrangian:
    @pytest.mark.parametrize("theta, vx, vt, val", [(1, 2, 0, 1), (4, 0, 2, 1), (1, 2, 2, 2)])
    def test_examples(self, theta, vx, vt, val):
        assert hj.lagrangian(theta, vx, vt) == val

    def test_domain(self):
        with pytest.raises(ValueError):
            hj.lagrangian(0.0, 1.0, 1.0)

    def test_unit_along_optimal_path(self):
        s = np.linspace(0.01, 5, 200)
        _, th = hj.optimal_trajectory(5.0, s)
        assert np.allclose(hj.lagrangian(th, *hj.optimal_velocity(5.0, s)), 1.0)


class TestAction:
    @pytest.mark.parametrize("tf, tol", [(1.0, 1e-4), (4.0, 1e-3), (9.0, 1e-3)])
    def test_equals_t_final(self, tf, tol):
        assert hj.action_along_optimal(tf, 10_000) == pytest.approx(tf, abs=tol)

    def test_coarse_and_fine_agree(self):
        # the integrand is identically 1, so even 10 steps are exact up to rounding
        assert abs(hj.action_along_optimal(1.0, 10) - 1.0) < 1e-13
        assert abs(hj.action_along_optimal(1.0, 10_000) - 1.0) < 1e-11

    def test_min_steps(self):
        with pytest.raises(ValueError):
            hj.action_along_optimal(1.0, 5)


class TestResiduals:
    @pytest.mark.parametrize("x, theta", [(1.0, 1.0), (0.0, 2.0), (-5.0, 3.0)])
    def test_harmonicity_examples(self, x, theta):
        assert abs(hj.harmonicity_residual(x, theta, h=1e-3)) <= 1e-5

    def test_hj_residual_second_order(self):
        t, x, th = 2.0, 3.0, 1.5
        r1 = abs(hj.hj_residual(t, x, th, h=4e-3))
        r2 = abs(hj.hj_residual(t, x, th, h=2e-3))
        assert 3.5 < r1 / r2 < 4.5

    def test_harmonicity_second_order(self):
        r1 = abs(hj.harmonicity_residual(2.0, 1.5, h=2e-2))
        r2 = abs(hj.harmonicity_residual(2.0, 1.5, h=1e-2))
        assert 3.5 < r1 / r2 < 4.5

    @pytest.mark.parametrize("seed", range(3))
    def test_random_sample(self, seed):
        rng = np.random.default_rng(seed)
        t, x, th = rng.uniform(0.5, 10, 10_000), rng.uniform(-50, 50, 10_000), rng.uniform(0, 20, 10_000)
        assert np.max(np.abs(hj.hj_residual(t, x, th))) <= 1e-5
        assert np.max(np.abs(hj.harmonicity_residual(x, th))) <= 1e-5
