"""Time stepping for the local, non-local and linearized cane toads equations

    u_t = theta u_xx + u_theta_theta + R(u)

on a truncated (x, theta) grid, with u_theta = 0 at theta = theta_min.

Each step is a Strang splitting: half a reaction step, one implicit-Euler
sweep in x (per theta row) and one in theta (per x column), half a reaction
step. Both sweeps are tridiagonal M-matrix solves, so the diffusion part is
unconditionally stable, positivity preserving and order preserving. The
reaction sub-steps use the exact flow of the (frozen) reaction ODE.
"""

import enum
import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np
from scipy.linalg import lapack

from .grid import Field, GridSpec, RhoProfile, integrate_theta


class NumericalError(RuntimeError):
    pass


class ModelKind(enum.Enum):
    LOCAL = "local"
    NONLOCAL = "nonlocal"
    LINEARIZED = "linearized"
    ELLIPSE = "ellipse"  # linearized, zeroed outside a moving Dirichlet ellipse


class Boundary(enum.Enum):
    NEUMANN_ZERO = "neumann"
    DIRICHLET_ZERO = "dirichlet"


@dataclass(frozen=True)
class EllipseSpec:
    """{(x - x_c)^2 / theta_c + (theta - theta_c)^2 <= R^2}."""

    x_c: float
    theta_c: float
    R: float

    def contains(self, x, theta):
        return (x - self.x_c) ** 2 / self.theta_c + (theta - self.theta_c) ** 2 <= self.R**2


class EllipseWarning(UserWarning):
    pass


def dirichlet_ellipse_mask(grid: GridSpec, e: EllipseSpec) -> np.ndarray:
    """Boolean mask of the grid nodes inside the ellipse."""
    if e.theta_c - e.R <= grid.theta_min:
        warnings.warn("ellipse touches theta_min", EllipseWarning, stacklevel=2)
    half_x = e.R * math.sqrt(e.theta_c)
    if (
        e.x_c - half_x <= grid.x_min
        or e.x_c + half_x >= grid.x_max
        or e.theta_c + e.R >= grid.theta_max
    ):
        warnings.warn("ellipse touches the grid edge", EllipseWarning, stacklevel=2)
    X, TH = grid.mesh()
    return e.contains(X, TH)


@dataclass(frozen=True)
class SolverConfig:
    grid: GridSpec
    model: ModelKind = ModelKind.LOCAL
    t_end: float = 1.0
    save_every: int = 1
    boundary_top: Boundary = Boundary.NEUMANN_ZERO
    boundary_x: Boundary = Boundary.DIRICHLET_ZERO
    # left x edge; defaults to boundary_x. Neumann here with data even in x
    # reproduces the problem on the mirrored domain.
    boundary_x_left: Optional[Boundary] = None
    ellipse: Optional[Callable[[float], EllipseSpec]] = None

    def __post_init__(self):
        if self.grid.dt > 0.5:
            raise ValueError("dt must be <= 0.5 for the reaction step")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.save_every < 1:
            raise ValueError("save_every must be a positive integer")
        if (self.model is ModelKind.ELLIPSE) != (self.ellipse is not None):
            raise ValueError("an ellipse path is required exactly for the ellipse model")

    @property
    def x_bcs(self):
        return (self.boundary_x_left or self.boundary_x, self.boundary_x)

    def steps(self):
        """(number of steps, effective dt) covering [0, t_end]."""
        n = math.ceil(self.t_end / self.grid.dt - 1e-9)
        return n, (self.t_end / n if n else self.grid.dt)


class _TridiagonalLines:
    """LU factors of many independent tridiagonal systems stacked end to end.

    ``lower[k, i]`` and ``upper[k, i]`` multiply u[i-1] and u[i+1] in row i of line k.
    """

    def __init__(self, lower, diag, upper):
        self.shape = diag.shape
        lower = lower.copy()
        upper = upper.copy()
        lower[:, 0] = 0.0
        upper[:, -1] = 0.0
        out = lapack.dgttrf(lower.ravel()[1:], diag.ravel().copy(), upper.ravel()[:-1])
        if out[-1] != 0:
            raise NumericalError("tridiagonal factorization failed")
        self.factors = out[:-1]

    def solve(self, rhs):
        x, info = lapack.dgttrs(*self.factors, rhs.ravel())
        if info != 0:
            raise NumericalError("tridiagonal solve failed")
        return x.reshape(self.shape)


def _implicit_lines(coef, n, h, dt, low_bc, high_bc):
    """Factor (I - dt * coef[k] * D2) on each line k, D2 the 3-point Laplacian."""
    r = np.repeat((dt * np.asarray(coef, dtype=float) / h**2)[:, None], n, axis=1)
    lower = -r.copy()
    upper = -r.copy()
    diag = 1.0 + 2.0 * r
    if low_bc is Boundary.NEUMANN_ZERO:
        upper[:, 0] = -2.0 * r[:, 0]  # reflected ghost node
    else:
        diag[:, 0], upper[:, 0] = 1.0, 0.0
    if high_bc is Boundary.NEUMANN_ZERO:
        lower[:, -1] = -2.0 * r[:, -1]
    else:
        diag[:, -1], lower[:, -1] = 1.0, 0.0
    return _TridiagonalLines(lower, diag, upper)


class Snapshot(NamedTuple):
    time: float
    field: Field
    rho: RhoProfile


class Stepper:
    """Pre-factored one-step map for a given configuration."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        g = cfg.grid
        _, self.dt = cfg.steps()
        self.x_lines = _implicit_lines(g.theta, g.nx, g.hx, self.dt, *cfg.x_bcs)
        self.theta_lines = _implicit_lines(
            np.ones(g.nx), g.ntheta, g.htheta, self.dt, Boundary.NEUMANN_ZERO, cfg.boundary_top
        )
        self._dirichlet_left = cfg.x_bcs[0] is Boundary.DIRICHLET_ZERO
        self._dirichlet_right = cfg.x_bcs[1] is Boundary.DIRICHLET_ZERO
        self._dirichlet_top = cfg.boundary_top is Boundary.DIRICHLET_ZERO

    def _react(self, u, tau, rho):
        model = self.cfg.model
        if model is ModelKind.LOCAL:
            e = math.exp(tau)
            return u * e / (1.0 + u * (e - 1.0))
        if model is ModelKind.NONLOCAL:
            return u * np.exp((1.0 - rho) * tau)[:, None]
        return u * math.exp(tau)

    def _boundary_rhs(self, u):
        if self._dirichlet_left:
            u[0, :] = 0.0
        if self._dirichlet_right:
            u[-1, :] = 0.0
        if self._dirichlet_top:
            u[:, -1] = 0.0
        return u

    def step(self, f: Field) -> Field:
        u = f.values
        rho = None
        if self.cfg.model is ModelKind.NONLOCAL:
            rho = np.trapezoid(u, dx=self.cfg.grid.htheta, axis=1)
        half = 0.5 * self.dt
        u = self._react(u, half, rho)
        u = self._boundary_rhs(u.copy())
        u = self.x_lines.solve(np.ascontiguousarray(u.T)).T
        u = self._boundary_rhs(np.ascontiguousarray(u))
        u = self.theta_lines.solve(u)
        u = self._react(u, half, rho)
        t_new = f.time + self.dt
        if self.cfg.model is ModelKind.ELLIPSE:
            X, TH = self.cfg.grid.mesh()
            u = np.where(self.cfg.ellipse(t_new).contains(X, TH), u, 0.0)
        return Field(self.cfg.grid, _check(u), t_new)


def _check(u):
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite values after step")
    umin = u.min()
    if umin < 0:
        scale = max(u.max(), 1e-300)
        if -umin > 1e-12 * scale:
            raise NumericalError(f"positivity lost: min {umin:g}")
        u = np.maximum(u, 0.0)
    return u


@functools.lru_cache(maxsize=8)
def _stepper(cfg: SolverConfig) -> Stepper:
    return Stepper(cfg)


def step(f: Field, cfg: SolverConfig) -> Field:
    """Advance ``f`` by one time step of ``cfg``."""
    if f.grid != cfg.grid:
        raise ValueError("field and config use different grids")
    if np.any(f.values < 0):
        raise ValueError("fields must be non-negative")
    return _stepper(cfg).step(f)


def iter_run(cfg: SolverConfig, initial: Field) -> Iterator[Snapshot]:
    """Yield snapshots at t = 0, every ``save_every`` steps, and at t_end."""
    stepper = Stepper(cfg)
    n, _ = cfg.steps()
    f = initial
    yield Snapshot(f.time, f, integrate_theta(f))
    for k in range(1, n + 1):
        f = stepper.step(f)
        if k % cfg.save_every == 0 or k == n:
            yield Snapshot(f.time, f, integrate_theta(f))


def run(cfg: SolverConfig, initial: Field) -> list:
    return list(iter_run(cfg, initial))


def make_initial_bump(grid: GridSpec, x0, theta0, radius, height=1.0, mirrored=False) -> Field:
    """Smooth bump height * exp(1 - 1/(1 - r^2)), r = distance / radius.

    ``mirrored`` allows a bump centred on x_min, for grids that represent the
    half x >= x_min of a problem even in x (Neumann at x_min).
    """
    if radius <= max(grid.hx, grid.htheta):
        raise ValueError("bump radius must exceed one grid cell")
    if mirrored and x0 != grid.x_min:
        raise ValueError("a mirrored bump must be centred on x_min")
    if (
        (x0 - radius < grid.x_min and not mirrored)
        or x0 + radius > grid.x_max
        or theta0 - radius < grid.theta_min
        or theta0 + radius > grid.theta_max
    ):
        raise ValueError("bump support exceeds the grid")
    X, TH = grid.mesh()
    r2 = ((X - x0) ** 2 + (TH - theta0) ** 2) / radius**2
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.where(r2 < 1, height * np.exp(1.0 - 1.0 / (1.0 - np.minimum(r2, 1 - 1e-300))), 0.0)
    return Field(grid, vals, 0.0)


def top_band_fraction(f: Field, band=0.05) -> float:
    """Share of the total mass held in the top ``band`` of theta nodes."""
    k = max(1, int(round(band * f.grid.ntheta)))
    total = f.values.sum()
    return float(f.values[:, -k:].sum() / total) if total > 0 else 0.0
