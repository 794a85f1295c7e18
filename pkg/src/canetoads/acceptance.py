"""Acceptance checks, one function per criterion.

Each check returns a :class:`CheckResult`; :func:`run_all` collects them for
the ``acceptance`` subcommand and the test suite. The two long simulations
(local and non-local, t in [0, 40]) are cached per process.
"""

import functools
import math
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fronts
from . import hamilton_jacobi as hj
from . import spectral
from .grid import Field, GridSpec, RhoProfile
from .solver import Boundary, ModelKind, SolverConfig, iter_run, make_initial_bump, top_band_fraction
from .supersolution import (
    SupersolParams,
    envelope_x,
    fit_amplitude,
    residual_sweep,
    rho_upper_profile,
    tilde_u_field,
)


class CheckResult(NamedTuple):
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _timed(number, name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            passed, detail = fn(*args, **kwargs)
            return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)

        run.number = number
        return run

    return wrap


def hj_sample(n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.5, 10, n), rng.uniform(-50, 50, n), rng.uniform(0, 20, n)


@_timed(1, "HJ identity")
def check_hj_identity(seed=0):
    t0 = time.perf_counter()
    t, x, th = hj_sample(seed=seed)
    worst = float(np.max(np.abs(hj.hj_residual(t, x, th))))
    dt = time.perf_counter() - t0
    return worst <= 1e-5 and dt < 1.0, f"max |residual| = {worst:.2e} (<= 1e-5), {dt:.3f} s (< 1 s)"


@_timed(2, "harmonicity of Z")
def check_harmonicity(seed=0):
    t0 = time.perf_counter()
    _, x, th = hj_sample(seed=seed)
    worst = float(np.max(np.abs(hj.harmonicity_residual(x, th))))
    dt = time.perf_counter() - t0
    return worst <= 1e-5 and dt < 1.0, f"max |theta Z_xx + Z_thth| = {worst:.2e} (<= 1e-5), {dt:.3f} s"


@_timed(3, "action along optimal path")
def check_action():
    errs = {tf: abs(hj.action_along_optimal(tf, 10_000) - tf) / tf for tf in (1.0, 4.0, 9.0)}
    worst = max(errs.values())
    return worst <= 1e-4, f"max relative error {worst:.2e} over t_final in {{1, 4, 9}} (<= 1e-4)"


@_timed(4, "super-solution residual")
def check_supersolution_residual(seed=0):
    t0 = time.perf_counter()
    rep = residual_sweep(SupersolParams(1.0, 1.0, 1.0), (1.0, 20.0), 10_000, seed=seed)
    dt = time.perf_counter() - t0
    ok = rep.min_relative_residual >= -1e-6 and dt < 10
    return ok, (
        f"min residual / tilde_u = {rep.min_relative_residual:.3e} (>= -1e-6) at {rep.worst_point}, "
        f"{rep.n_used} samples, {dt:.2f} s"
    )


@_timed(5, "envelope asymptotics")
def check_envelope_asymptotics():
    t = 1e4
    ratio = envelope_x(t, 0.5, SupersolParams(1.0, math.e, 1.0)) / t**1.5
    rel = abs(ratio / (4 / 3) - 1)
    return rel <= 0.02, f"envelope_x / t^1.5 = {ratio:.6f}, {100 * rel:.3f}% from 4/3 (<= 2%)"


# --- simulations -------------------------------------------------------------


@dataclass(frozen=True)
class RunSetup:
    """Shared grid and initial data of the acceptance simulations.

    The data are even in x, so only x >= 0 is simulated with a Neumann
    condition at x = 0.
    """

    t_end: float = 40.0
    hx: float = 0.25
    htheta: float = 0.5
    dt: float = 0.05
    theta_lower: float = 1.0
    theta0: float = 2.5
    radius: float = 1.5
    level: float = 0.1
    a: float = 1.0

    def grid(self):
        x_max = 1.5 * 4 / 3 * self.t_end**1.5
        th_max = self.theta_lower + 3 * self.t_end
        return GridSpec.from_spacing(0.0, x_max, self.theta_lower, th_max, self.hx, self.htheta, self.dt)

    def config(self, model):
        return SolverConfig(
            self.grid(),
            model,
            self.t_end,
            save_every=int(round(1 / self.dt)),
            boundary_x=Boundary.DIRICHLET_ZERO,
            boundary_x_left=Boundary.NEUMANN_ZERO,
        )

    def initial(self):
        return make_initial_bump(self.grid(), 0.0, self.theta0, self.radius, 1.0, mirrored=True)

    def params(self):
        return SupersolParams(self.a, fit_amplitude(self.initial(), self.a, self.theta_lower), self.theta_lower)


class RunSummary(NamedTuple):
    times: np.ndarray
    field_front: np.ndarray  # nan where the level is not reached
    rho_front: np.ndarray
    rho_envelope_front: np.ndarray
    rho_max: np.ndarray
    excess: np.ndarray  # max(u - tilde_u) / max u per slice
    top_band: float
    seconds: float


@functools.lru_cache(maxsize=4)
def simulate(model: ModelKind, setup: RunSetup = RunSetup()) -> RunSummary:
    t0 = time.perf_counter()
    cfg = setup.config(model)
    p = setup.params()
    g = cfg.grid
    rows = []
    top = 0.0
    for snap in iter_run(cfg, setup.initial()):
        u = snap.field.values
        ut = tilde_u_field(g, snap.time, p).values
        up = rho_upper_profile(g, snap.time, p)
        xf = fronts.front_position(snap.field, setup.level)
        xr = fronts.rho_front_position(snap.rho, setup.level)
        xe = fronts.rho_front_position(RhoProfile(g, up.values, snap.time), setup.level)
        rows.append((
            snap.time,
            np.nan if xf is None else xf,
            np.nan if xr is None else xr,
            np.nan if xe is None else xe,
            float(snap.rho.values.max()),
            float((u - ut).max() / u.max()),
        ))
        top = max(top, top_band_fraction(snap.field))
    a = np.array(rows)
    return RunSummary(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5], top, time.perf_counter() - t0)


def _window_series(times, xs, lo=15.0, hi=40.0, level=0.1, source=fronts.FrontSource.FIELD_LEVEL):
    sel = (times >= lo - 1e-9) & (times <= hi + 1e-9) & np.isfinite(xs)
    return fronts.FrontSeries(times[sel], xs[sel], level, source)


@_timed(6, "comparison with the super-solution")
def check_comparison(setup: RunSetup = RunSetup()):
    run = simulate(ModelKind.LOCAL, setup)
    sel = run.times <= 30 + 1e-9
    worst = float(run.excess[sel].max())
    return worst <= 1e-3, (
        f"max (u - tilde_u) / max u over saved t <= 30: {worst:.2e} (<= 1e-3); "
        f"over t <= {setup.t_end:g}: {run.excess.max():.2e}; simulation {run.seconds:.1f} s"
    )


@_timed(7, "local acceleration exponent")
def check_local_exponent(setup: RunSetup = RunSetup()):
    run = simulate(ModelKind.LOCAL, setup)
    s = _window_series(run.times, run.field_front, level=setup.level)
    fit = fronts.fit_power_law(s, (15.0, 40.0))
    ratio = s.positions / s.times**1.5
    increasing = bool(np.all(np.diff(ratio) > 0))
    p = setup.params()
    cap = 1.05 * np.array([envelope_x(t, setup.level, p) for t in s.times]) / s.times**1.5
    below = bool(np.all(ratio <= cap))
    ok = 1.3 <= fit.exponent <= 1.6 and increasing and below
    return ok, (
        f"exponent {fit.exponent:.4f} in [1.3, 1.6] (r^2 = {fit.r_squared:.6f}); "
        f"x/t^1.5 from {ratio[0]:.4f} to {ratio[-1]:.4f}, increasing: {increasing}; "
        f"below 1.05 x envelope / t^1.5: {below} (min margin {np.min(cap - ratio):.4f})"
    )


@_timed(8, "non-local front")
def check_nonlocal(setup: RunSetup = RunSetup()):
    run = simulate(ModelKind.NONLOCAL, setup)
    s = _window_series(run.times, run.rho_front, level=setup.level, source=fronts.FrontSource.RHO_LEVEL)
    fit = fronts.fit_power_law(s, (15.0, 40.0))
    rho_max = float(run.rho_max.max())
    have = np.isfinite(run.rho_front)
    beyond = run.rho_front[have] - run.rho_envelope_front[have] - setup.hx
    n_bad = int(np.sum(beyond > 0))
    ok = 1.3 <= fit.exponent <= 1.6 and rho_max <= 5 and n_bad == 0
    return ok, (
        f"rho-front exponent {fit.exponent:.4f} in [1.3, 1.6]; sup rho = {rho_max:.4f} (<= 5); "
        f"envelope violations {n_bad} (max excess {beyond.max():.3f}); simulation {run.seconds:.1f} s"
    )


@_timed(9, "Dirichlet eigenvalue oracle")
def check_eigen_oracle():
    t0 = time.perf_counter()
    exact = spectral.bessel_j01() ** 2
    err = {n: spectral.principal_eigenpair(spectral.DiscGrid(1.0, n)).lam - exact for n in (101, 201)}
    rel = abs(err[201]) / exact
    ratio = err[101] / err[201]
    dt = time.perf_counter() - t0
    ok = rel <= 0.01 and 3 <= ratio <= 5 and dt < 30
    return ok, f"n=201 relative error {rel:.2e} (<= 1%), error ratio 101/201 = {ratio:.3f} in [3, 5], {dt:.2f} s"


CRITERION10_R = 10.0


@_timed(10, "coefficient limits")
def check_coefficient_limits(R=CRITERION10_R, n=101):
    eps = 0.1
    f = spectral.LocalOptimal(1000.0, 1000.0, eps)
    g = spectral.DiscGrid(R, n)
    min_G, t_min = spectral.min_G_over_time(f, R)
    lag = spectral.constraint_sweep(f, 2001)
    lam = spectral.eigenpair_along(f, g, f.T / 2).lam
    lap = spectral.principal_eigenpair(g).lam
    dphi = spectral.eigen_time_derivative_check(f, g, f.T / 2, f.T / 100)
    ok = min_G >= 0.75 * eps and lag.passed and abs(lam / lap - 1) <= 0.05 and dphi <= eps / 4
    return ok, (
        f"R = {R:g}: min G = {min_G:.4f} (>= {0.75 * eps:.3f}, at t = {t_min:g}); "
        f"max L = {lag.max_lagrangian:.6f} (<= {lag.bound:.3f}); lambda(T/2) / lambda_Laplace - 1 = "
        f"{lam / lap - 1:.2e} (<= 5%); |d_t phi / phi| = {dphi:.2e} (<= {eps / 4:.3f})"
    )


class EllipseRun(NamedTuple):
    sub: object
    min_gap: float  # min over saved t of min(u - v) / sup v(t)
    v0_max: float


@functools.lru_cache(maxsize=2)
def ellipse_run(R=16.0, n=161, theta_c=40.0, T=300.0, eps=0.1, delta=1e-3):
    traj = spectral.Fixed(0.0, theta_c, T=T, eps=eps)
    sub = spectral.assemble_subsolution(traj, spectral.DiscGrid(R, n), eps, delta)
    half_x = R * math.sqrt(theta_c) + 10
    grid = GridSpec.from_spacing(-half_x, half_x, 1.0, theta_c + R + 4, 1.0, 0.5, 0.1)
    cfg = SolverConfig(grid, ModelKind.ELLIPSE, T, save_every=100, ellipse=spectral.EllipsePath(traj, R))
    X, TH = grid.mesh()
    v0 = sub.v(0.0, X, TH)
    gap = np.inf
    for snap in iter_run(cfg, Field(grid, v0)):
        v = sub.v(snap.time, X, TH)
        gap = min(gap, float((snap.field.values - v).min() / v.max()))
    return EllipseRun(sub, gap, float(v0.max()))


@_timed(11, "sub-solution growth")
def check_subsolution():
    run = ellipse_run()
    sub = run.sub
    sup_T = sub.sup_v(sub.T)
    ok = abs(sup_T - 1) <= 1e-9 and sub.c_R > 0 and run.v0_max <= sub.delta * (1 + 1e-12) and run.min_gap >= -1e-3
    return ok, (
        f"sup v(T) = {sup_T:.12f}; c_R = min v(T) on the half disc = {sub.c_R:.4f} > 0; "
        f"sup v(0) = {run.v0_max:.3e} (<= delta); lambda = {sub.lam_max:.4f}, r = {sub.r:.4f}; "
        f"min (u - v) / sup v = {run.min_gap:.2e} (>= -1e-3)"
    )


@_timed(12, "non-local constants")
def check_nonlocal_constants():
    c1 = fronts.lower_constant(0.0)
    ok = abs(c1 - 1.16977) <= 1e-4 and c1 < 4 / 3
    return ok, f"8 / (3 sqrt(3 sqrt 3)) = {c1:.6f} (1.16977 +- 1e-4), below 4/3: {c1 < 4 / 3}"


CHECKS = (
    check_hj_identity,
    check_harmonicity,
    check_action,
    check_supersolution_residual,
    check_envelope_asymptotics,
    check_comparison,
    check_local_exponent,
    check_nonlocal,
    check_eigen_oracle,
    check_coefficient_limits,
    check_subsolution,
    check_nonlocal_constants,
)


def run_all(only=None):
    return [c() for c in CHECKS if only is None or c.number in only]
