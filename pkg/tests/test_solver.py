import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from canetoads.grid import Field, GridSpec, integrate_theta
from canetoads.solver import (
    Boundary,
    EllipseSpec,
    EllipseWarning,
    ModelKind,
    NumericalError,
    SolverConfig,
    dirichlet_ellipse_mask,
    make_initial_bump,
    run,
    step,
    top_band_fraction,
)

NEUMANN = Boundary.NEUMANN_ZERO
REACTIVE = (ModelKind.LOCAL, ModelKind.NONLOCAL, ModelKind.LINEARIZED)


def _neumann(grid, model, t_end=1.0, save_every=1):
    return SolverConfig(grid, model, t_end, save_every, NEUMANN, NEUMANN)


def _trap_mass(f):
    g = f.grid
    return float(np.trapezoid(integrate_theta(f).values, dx=g.hx))


class TestConfig:
    def test_dt_limit(self):
        with pytest.raises(ValueError):
            SolverConfig(GridSpec(0.0, 1.0, 1.0, 2.0, 5, 5, 0.6))

    def test_ellipse_required(self, small_grid):
        with pytest.raises(ValueError):
            SolverConfig(small_grid, ModelKind.ELLIPSE)
        with pytest.raises(ValueError):
            SolverConfig(small_grid, ModelKind.LOCAL, ellipse=lambda t: EllipseSpec(0, 5, 1))

    def test_steps_cover_t_end(self, small_grid):
        n, dt = SolverConfig(small_grid, t_end=0.12).steps()
        assert n == 3 and dt == pytest.approx(0.04)

    def test_left_boundary_default(self, small_grid):
        cfg = SolverConfig(small_grid, boundary_x=NEUMANN)
        assert cfg.x_bcs == (NEUMANN, NEUMANN)
        cfg = SolverConfig(small_grid, boundary_x_left=NEUMANN)
        assert cfg.x_bcs == (NEUMANN, Boundary.DIRICHLET_ZERO)


class TestInvariants:
    @pytest.mark.parametrize("model", REACTIVE)
    def test_zero_stays_zero(self, small_grid, model):
        snaps = run(SolverConfig(small_grid, model, t_end=0.5), Field(small_grid, np.zeros(small_grid.shape)))
        assert all(np.all(s.field.values == 0) for s in snaps)

    def test_local_one_is_steady(self, small_grid):
        snaps = run(_neumann(small_grid, ModelKind.LOCAL), Field(small_grid, np.ones(small_grid.shape)))
        assert np.allclose(snaps[-1].field.values, 1.0, atol=1e-12)

    def test_linearized_constant_grows_exponentially(self, small_grid):
        snaps = run(_neumann(small_grid, ModelKind.LINEARIZED), Field(small_grid, np.full(small_grid.shape, 0.3)))
        assert np.allclose(snaps[-1].field.values, 0.3 * math.e, rtol=1e-12)

    def test_linearized_mass_growth(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 3.0)
        cfg = _neumann(small_grid, ModelKind.LINEARIZED, t_end=small_grid.dt)
        g = step(f, cfg)
        assert _trap_mass(g) == pytest.approx(math.exp(small_grid.dt) * _trap_mass(f), rel=1e-10)

    def test_uniform_in_x_matches_theta_only_problem(self):
        # data independent of x: x diffusion is inert, compare with a grid of width 3 in x
        wide = GridSpec(-5.0, 5.0, 1.0, 6.0, 21, 41, 0.02)
        thin = GridSpec(0.0, 1.0, 1.0, 6.0, 3, 41, 0.02)
        prof = lambda x, th: np.exp(-((th - 3.0) ** 2))
        a = run(_neumann(wide, ModelKind.LINEARIZED, 0.4), Field.from_function(wide, prof))[-1].field
        b = run(_neumann(thin, ModelKind.LINEARIZED, 0.4), Field.from_function(thin, prof))[-1].field
        assert np.allclose(a.values, a.values[:1, :], rtol=1e-12)
        assert np.allclose(a.values[0], b.values[0], rtol=1e-12)

    def test_local_sup_bound(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 3.0, height=2.5)
        for s in run(SolverConfig(small_grid, ModelKind.LOCAL, t_end=2.0), f):
            assert s.field.values.max() <= 2.5 + 1e-12
        g = make_initial_bump(small_grid, 0.0, 5.0, 3.0, height=0.5)
        for s in run(SolverConfig(small_grid, ModelKind.LOCAL, t_end=2.0), g):
            assert s.field.values.max() <= 1.0 + 1e-12

    def test_deterministic(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 3.0)
        cfg = SolverConfig(small_grid, ModelKind.NONLOCAL, t_end=1.0)
        a = run(cfg, f)[-1].field.values
        b = run(cfg, f)[-1].field.values
        assert np.array_equal(a, b)

    def test_t_end_zero(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 3.0)
        snaps = run(SolverConfig(small_grid, t_end=0.0), f)
        assert len(snaps) == 1 and snaps[0].field is f

    def test_snapshot_schedule(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 3.0)
        snaps = run(SolverConfig(small_grid, t_end=0.55, save_every=4), f)
        assert [round(s.time, 10) for s in snaps] == [0.0, 0.2, 0.4, 0.55]

    def test_rejects_negative_input(self, small_grid):
        v = np.zeros(small_grid.shape)
        v[3, 3] = -1.0
        with pytest.raises(ValueError):
            step(Field(small_grid, v), SolverConfig(small_grid))

    def test_blowup_reported(self):
        g = GridSpec(0.0, 1.0, 1.0, 2.0, 3, 3, 0.5)
        f = Field(g, np.full(g.shape, 1e306))
        with pytest.raises(NumericalError):
            run(_neumann(g, ModelKind.LINEARIZED, 20.0), f)


GRID5 = GridSpec(0.0, 2.0, 1.0, 3.0, 5, 5, 0.1)


class TestComparison:
    @settings(max_examples=40, deadline=None)
    @given(
        arrays(np.float64, (5, 5), elements=st.floats(0, 2)),
        arrays(np.float64, (5, 5), elements=st.floats(0, 2)),
        st.sampled_from([ModelKind.LOCAL, ModelKind.LINEARIZED]),
    )
    def test_ordered_data_stay_ordered(self, u, d, model):
        cfg = SolverConfig(GRID5, model, t_end=0.3)
        a = run(cfg, Field(GRID5, u))[-1].field.values
        b = run(cfg, Field(GRID5, u + d))[-1].field.values
        assert np.all(a <= b + 1e-12)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (5, 5), elements=st.floats(0, 5)), st.sampled_from(REACTIVE))
    def test_positivity(self, u, model):
        for s in run(SolverConfig(GRID5, model, t_end=0.3), Field(GRID5, u)):
            assert np.all(s.field.values >= 0)


class TestConvergence:
    def test_self_convergence_second_order_in_h(self):
        # dt proportional to h^2 makes the first-order splitting O(h^2)
        fields = []
        for k in (1, 2, 4):
            g = GridSpec(-4.0, 4.0, 1.0, 5.0, 16 * k + 1, 8 * k + 1, 0.04 / k**2)
            f0 = Field.from_function(g, lambda x, th: np.exp(-(x**2) - (th - 3.0) ** 2))
            out = run(_neumann(g, ModelKind.LOCAL, 0.5), f0)[-1].field.values
            fields.append(out[:: k, :: k])
        e1 = np.abs(fields[0] - fields[1]).max()
        e2 = np.abs(fields[1] - fields[2]).max()
        assert 3.0 < e1 / e2 < 5.0


class TestBump:
    def test_shape(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 2.0, height=0.7)
        assert f.values.max() == pytest.approx(0.7)
        X, TH = small_grid.mesh()
        assert np.all(f.values[X**2 + (TH - 5) ** 2 >= 4] == 0)

    def test_errors(self, small_grid):
        with pytest.raises(ValueError):
            make_initial_bump(small_grid, 0.0, 5.0, 0.2)
        with pytest.raises(ValueError):
            make_initial_bump(small_grid, 9.0, 5.0, 2.0)
        with pytest.raises(ValueError):
            make_initial_bump(small_grid, 0.0, 1.5, 2.0)
        with pytest.raises(ValueError):
            make_initial_bump(small_grid, 0.0, 5.0, 2.0, mirrored=True)

    def test_mirrored(self):
        g = GridSpec(0.0, 5.0, 1.0, 6.0, 21, 21)
        f = make_initial_bump(g, 0.0, 3.0, 2.0, mirrored=True)
        assert f.values[0].max() == pytest.approx(1.0)

    def test_half_domain_matches_full(self):
        full = GridSpec(-6.0, 6.0, 1.0, 6.0, 49, 21, 0.05)
        half = GridSpec(0.0, 6.0, 1.0, 6.0, 25, 21, 0.05)
        a = run(SolverConfig(full, ModelKind.NONLOCAL, 1.0), make_initial_bump(full, 0.0, 3.0, 2.0))[-1]
        b = run(
            SolverConfig(half, ModelKind.NONLOCAL, 1.0, boundary_x_left=NEUMANN),
            make_initial_bump(half, 0.0, 3.0, 2.0, mirrored=True),
        )[-1]
        assert np.allclose(a.field.values[24:], b.field.values, atol=1e-12)

    def test_top_band(self, small_grid):
        f = make_initial_bump(small_grid, 0.0, 5.0, 2.0)
        assert top_band_fraction(f) == 0.0
        assert top_band_fraction(Field(small_grid, np.zeros(small_grid.shape))) == 0.0


class TestEllipse:
    def test_area_ratio(self):
        e = EllipseSpec(0.0, 20.0, 5.0)
        exact = math.pi * 5.0**2 * math.sqrt(20.0)
        ratios = []
        for h in (0.5, 0.25, 0.125):
            g = GridSpec.from_spacing(-40.0, 40.0, 1.0, 40.0, h, h, 0.05)
            ratios.append(dirichlet_ellipse_mask(g, e).sum() * g.hx * g.htheta / exact)
        assert abs(ratios[-1] - 1) < 0.01
        assert abs(ratios[-1] - 1) <= abs(ratios[0] - 1) + 1e-12

    def test_center_inside(self, small_grid):
        m = dirichlet_ellipse_mask(small_grid, EllipseSpec(0.0, 6.0, 1.0))
        i = np.argmin(np.abs(small_grid.x))
        j = np.argmin(np.abs(small_grid.theta - 6.0))
        assert m[i, j]

    def test_warnings(self, small_grid):
        with pytest.warns(EllipseWarning):
            dirichlet_ellipse_mask(small_grid, EllipseSpec(0.0, 2.0, 1.5))
        with pytest.warns(EllipseWarning):
            dirichlet_ellipse_mask(small_grid, EllipseSpec(0.0, 6.0, 4.9))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            dirichlet_ellipse_mask(small_grid, EllipseSpec(0.0, 6.0, 1.0))

    def test_zero_outside(self, small_grid):
        e = EllipseSpec(0.0, 6.0, 2.0)
        cfg = SolverConfig(small_grid, ModelKind.ELLIPSE, 0.5, ellipse=lambda t: e)
        out = run(cfg, Field(small_grid, np.ones(small_grid.shape)))[-1].field
        assert np.all(out.values[~dirichlet_ellipse_mask(small_grid, e)] == 0)
        assert out.values.max() > 0
