"""Discretization of the (x, theta) half-plane and the fields that live on it."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Node-centered uniform grid on [x_min, x_max] x [theta_min, theta_max].

    ``theta_min`` is the lowest admissible trait; the Neumann condition of the
    models is imposed there.
    """

    x_min: float
    x_max: float
    theta_min: float
    theta_max: float
    nx: int
    ntheta: int
    dt: float = 0.05

    def __post_init__(self):
        errors = []
        if not self.theta_min > 0:
            errors.append("theta_min must be > 0")
        if not self.theta_max > self.theta_min:
            errors.append("theta_max must exceed theta_min")
        if not self.x_max > self.x_min:
            errors.append("x_max must exceed x_min")
        if self.nx < 3 or self.ntheta < 3:
            errors.append("nx and ntheta must be >= 3")
        if not self.dt > 0:
            errors.append("dt must be > 0")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def htheta(self) -> float:
        return (self.theta_max - self.theta_min) / (self.ntheta - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(self.theta_min, self.theta_max, self.ntheta)

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ntheta)

    def mesh(self):
        """Return (X, THETA) arrays of shape (nx, ntheta)."""
        return np.meshgrid(self.x, self.theta, indexing="ij")

    @classmethod
    def from_spacing(cls, x_min, x_max, theta_min, theta_max, hx, htheta, dt):
        """Build a grid whose mesh widths are at most ``hx`` and ``htheta``."""
        nx = int(np.ceil((x_max - x_min) / hx - 1e-9)) + 1
        ntheta = int(np.ceil((theta_max - theta_min) / htheta - 1e-9)) + 1
        return cls(x_min, x_max, theta_min, theta_max, nx, ntheta, dt)


@dataclass
class Field:
    """Nodal values u(x_i, theta_j) at one time."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values have shape {self.values.shape}, grid expects {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid, func, time=0.0):
        X, TH = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, TH), grid.shape).copy(), time)

    def column_max(self) -> np.ndarray:
        """max over theta at each x node."""
        return self.values.max(axis=1)


@dataclass
class RhoProfile:
    grid: GridSpec
    values: np.ndarray
    time: float = 0.0
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx,):
            raise ValueError("rho profile must have one value per x node")
        self.x = self.grid.x


def integrate_theta(f: Field) -> RhoProfile:
    """Trapezoid-rule integral over theta of each x column."""
    vals = np.trapezoid(f.values, dx=f.grid.htheta, axis=1)
    return RhoProfile(f.grid, vals, f.time)


def linf_distance(a: Field, b: Field) -> float:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(np.max(np.abs(a.values - b.values)))
