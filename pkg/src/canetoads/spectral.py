"""Moving-domain spectral machinery behind the growing sub-solution.

A trajectory (X(t), Theta(t)) carries the ellipse

    (x - X)^2 / Theta + (theta - Theta)^2 <= R^2,

which the change of variables y = (x - X) / sqrt(Theta), eta = theta - Theta
maps to the disc B_R. After the exponential tilt

    v = exp(-(X' / (2 sqrt(Theta))) y - (Theta' / 2) eta) w,

the residual v_t - theta v_xx - v_theta_theta - (1 - eps) v becomes
exp(...) (w_t + L w - G w) with L = -A d_y - D d_yy - d_eta_eta and

    A = y Theta' / (2 Theta) - (X' / sqrt(Theta)) (eta / Theta)
    D = 1 + eta / Theta
    G = 1 - eps - X'^2 / (4 Theta) - Theta'^2 / 4
        + y (X'' / (2 sqrt(Theta)) - X' Theta' / (2 Theta^(3/2)))
        + eta (X'^2 / (4 Theta^2) + Theta'' / 2).

With w = delta_w e^{r t} phi(t), phi the principal Dirichlet eigenfunction of
L(t) on B_R, the residual is w (r + lambda + d_t phi / phi - G).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import splu

from .solver import EllipseSpec, NumericalError


# --- trajectories ---------------------------------------------------------


class TrajectoryState(NamedTuple):
    X: np.ndarray
    Theta: np.ndarray
    dX: np.ndarray
    dTheta: np.ndarray
    ddX: np.ndarray
    ddTheta: np.ndarray


@dataclass(frozen=True)
class LocalOptimal:
    """Slowed-down optimal path from (0, H) to the edge of the front at time T."""

    T: float
    H: float
    eps: float

    def __post_init__(self):
        if not (self.T > 0 and self.H > 0 and 0 < self.eps < 0.5):
            raise ValueError("need T > 0, H > 0 and eps in (0, 1/2)")

    @property
    def eps_effective(self):
        return self.eps

    def eval(self, t) -> TrajectoryState:
        t = np.asarray(t, dtype=float)
        k3 = (1 - 2 * self.eps) ** 0.75
        k2 = (1 - 2 * self.eps) ** 0.5
        T = self.T
        sT = math.sqrt(T)
        X = k3 * (2 * t**2 / sT - 2 * t**3 / (3 * T * sT))
        dX = k3 * (4 * t / sT - 2 * t**2 / (T * sT))
        ddX = k3 * (4 / sT - 4 * t / (T * sT))
        Th = k2 * (2 * t - t**2 / T) + self.H
        dTh = k2 * (2 - 2 * t / T)
        ddTh = np.full_like(t, -2 * k2 / T)
        return TrajectoryState(X, Th, dX, dTh, ddX, ddTh)


@dataclass(frozen=True)
class NonlocalStraight:
    """Straight line in (x^(2/3), theta) used for the non-local lower bound."""

    t_eps: float
    H: float
    gamma: float
    eps: float
    T: float = 1.0

    def __post_init__(self):
        if not (self.t_eps >= 0 and self.H >= 0 and self.gamma > 0 and self.T > 0):
            raise ValueError("need t_eps >= 0, H >= 0, gamma > 0, T > 0")
        if not 0 < self.gamma * self.eps < 0.5:
            raise ValueError("gamma * eps must lie in (0, 1/2)")

    @property
    def eps_effective(self):
        # the Lagrangian bound of this family is 1 - 2 gamma eps
        return self.gamma * self.eps

    @property
    def c_gamma(self):
        return 8.0 / (3.0 * math.sqrt(3.0 * math.sqrt(3.0))) * (1 - 2 * self.gamma * self.eps) ** 0.75

    def eval(self, t) -> TrajectoryState:
        s = np.asarray(t, dtype=float) + self.t_eps
        c = self.c_gamma
        k = (1 - 2 * self.gamma * self.eps) ** 0.5
        X = c * s**1.5
        dX = 1.5 * c * np.sqrt(s)
        with np.errstate(divide="ignore"):
            ddX = 0.75 * c / np.sqrt(s)
        Th = k * (2 / math.sqrt(3) * s + self.H)
        dTh = np.full_like(s, 2 * k / math.sqrt(3))
        return TrajectoryState(X, Th, dX, dTh, ddX, np.zeros_like(s))


@dataclass(frozen=True)
class Fixed:
    x_c: float
    theta_c: float
    T: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if not self.theta_c > 0:
            raise ValueError("theta_c must be positive")

    @property
    def eps_effective(self):
        return self.eps

    def eval(self, t) -> TrajectoryState:
        t = np.asarray(t, dtype=float)
        z = np.zeros_like(t)
        return TrajectoryState(z + self.x_c, z + self.theta_c, z, z, z, z)


def trajectory_eval(f, t) -> TrajectoryState:
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > f.T):
        raise ValueError("t must lie in [0, T]")
    return f.eval(t)


def lagrangian_along(f, t):
    s = f.eval(t)
    return s.dX**2 / (4 * s.Theta) + s.dTheta**2 / 4


class ConstraintReport(NamedTuple):
    max_lagrangian: float
    bound: float
    passed: bool
    t_at_max: float


def constraint_sweep(f, n_samples=1001) -> ConstraintReport:
    """Max over [0, T] of X'^2 / (4 Theta) + Theta'^2 / 4 against 1 - 2 eps."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    t = np.linspace(0.0, f.T, n_samples)
    L = lagrangian_along(f, t)
    i = int(np.argmax(L))
    bound = 1 - 2 * f.eps_effective
    return ConstraintReport(float(L[i]), bound, bool(L[i] <= bound + 1e-12), float(t[i]))


# --- coefficients ---------------------------------------------------------


@dataclass(frozen=True)
class Coefficients:
    state: TrajectoryState
    eps: float

    def A(self, y, eta):
        s = self.state
        return y * s.dTheta / (2 * s.Theta) - s.dX / np.sqrt(s.Theta) * eta / s.Theta

    def D(self, eta):
        return 1.0 + eta / self.state.Theta

    def G_parts(self):
        """(G(0, 0), dG/dy, dG/deta); G is affine in (y, eta)."""
        s = self.state
        g0 = 1 - self.eps - s.dX**2 / (4 * s.Theta) - s.dTheta**2 / 4
        gy = s.ddX / (2 * np.sqrt(s.Theta)) - s.dX * s.dTheta / (2 * s.Theta**1.5)
        ge = s.dX**2 / (4 * s.Theta**2) + s.ddTheta / 2
        return g0, gy, ge

    def G(self, y, eta):
        g0, gy, ge = self.G_parts()
        return g0 + gy * y + ge * eta

    def min_G(self, R):
        """Exact minimum of G over the closed disc B_R."""
        g0, gy, ge = self.G_parts()
        return g0 - R * np.hypot(gy, ge)


def coefficients(f, t, eps=None, R=None) -> Coefficients:
    """Frozen-time coefficients of the rescaled operator along ``f``.

    With ``R`` given, D must stay positive on B_R.
    """
    eps = f.eps_effective if eps is None else eps
    c = Coefficients(f.eval(float(t)), eps)
    if R is not None and not np.all(c.state.Theta > R):
        raise ValueError(f"D = 1 + eta/Theta vanishes on B_R: R = {R} >= Theta = {float(c.state.Theta)}")
    return c


def min_G_over_time(f, R, eps=None, n_samples=2001):
    """(min over t in [0, T] and B_R of G, time of the minimum)."""
    eps = f.eps_effective if eps is None else eps
    t = np.linspace(0.0, f.T, n_samples)
    c = Coefficients(f.eval(t), eps)
    m = c.min_G(R)
    i = int(np.argmin(m))
    return float(m[i]), float(t[i])


# --- disc discretization and eigenpairs --------------------------------------


@dataclass(frozen=True)
class DiscGrid:
    """n x n nodes on [-R, R]^2; unknowns are the nodes strictly inside B_R."""

    R: float
    n: int

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.n < 5 or self.n % 2 == 0:
            raise ValueError("n must be odd and >= 5")

    @property
    def h(self):
        return 2 * self.R / (self.n - 1)

    @property
    def axis(self):
        return np.linspace(-self.R, self.R, self.n)

    def mesh(self):
        """(Y, ETA) with Y varying along axis 0."""
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @property
    def mask(self):
        Y, E = self.mesh()
        return Y**2 + E**2 < self.R**2 * (1 - 1e-12)


class EigenPair(NamedTuple):
    lam: float
    phi: np.ndarray  # (n, n), zero outside the disc, sup norm 1
    grid: DiscGrid
    l2_norm: float
    residual: float  # ||L phi - lam phi||_inf / lam
    iterations: int


def _assemble(g: DiscGrid, A, D, scheme):
    n, h, R = g.n, g.h, g.R
    Y, E = g.mesh()
    inside = g.mask
    idx = -np.ones((n, n), dtype=int)
    idx[inside] = np.arange(inside.sum())
    ii, jj = np.nonzero(inside)
    y, e = Y[ii, jj], E[ii, jj]
    Av = np.zeros_like(y) if A is None else np.broadcast_to(A(y, e), y.shape).astype(float)
    Dv = np.ones_like(y) if D is None else np.broadcast_to(D(e), y.shape).astype(float)

    rows, cols, vals = [], [], []
    diag = np.zeros_like(y)

    def arm(di, dj, coord, other):
        # distance to the neighbour or to the circle (Shortley-Weller)
        ni, nj = ii + di, jj + dj
        ok = (ni >= 0) & (ni < n) & (nj >= 0) & (nj < n)
        nb = np.full(y.shape, -1)
        nb[ok] = idx[ni[ok], nj[ok]]
        sgn = di + dj
        reach = np.sqrt(np.maximum(R * R - other**2, 0.0))
        dist = np.where(nb >= 0, h, np.minimum(h, np.abs(sgn * reach - coord)))
        return nb, dist

    for axis_k, (coord, other, coef) in enumerate(((y, e, Dv), (e, y, np.ones_like(y)))):
        step = (1, 0) if axis_k == 0 else (0, 1)
        nb_p, hp = arm(step[0], step[1], coord, other)
        nb_m, hm = arm(-step[0], -step[1], coord, other)
        cp = 2.0 / (hp * (hp + hm))
        cm = 2.0 / (hm * (hp + hm))
        diag += coef * (cp + cm)
        off_p, off_m = -coef * cp, -coef * cm
        if axis_k == 0:
            if scheme == "upwind":
                pos = Av > 0
                diag += np.where(pos, Av / hp, -Av / hm)
                off_p = off_p - np.where(pos, Av / hp, 0.0)
                off_m = off_m + np.where(pos, 0.0, Av / hm)
            elif scheme == "centered":
                den = hp * hm * (hp + hm)
                diag -= Av * (hp**2 - hm**2) / den
                off_p = off_p - Av * hm**2 / den
                off_m = off_m + Av * hp**2 / den
            else:
                raise ValueError("scheme must be 'upwind' or 'centered'")
        for nb, off in ((nb_p, off_p), (nb_m, off_m)):
            keep = nb >= 0
            rows.append(np.nonzero(keep)[0])
            cols.append(nb[keep])
            vals.append(off[keep])
    k = np.arange(y.size)
    rows.append(k)
    cols.append(k)
    vals.append(diag)
    M = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(y.size, y.size)
    )
    return M, inside


def principal_eigenpair(
    g: DiscGrid,
    A: Optional[Callable] = None,
    D: Optional[Callable] = None,
    *,
    scheme="upwind",
    tol=1e-10,
    max_iter=1000,
) -> EigenPair:
    """Principal Dirichlet eigenpair of -A d_y - D d_yy - d_eta_eta on B_R.

    ``A(y, eta)`` defaults to 0 and ``D(eta)`` to 1. Inverse power iteration
    on a sparse LU factorization; stops when successive eigenvalue estimates
    agree to ``tol`` (relative) and the iterate has settled.
    """
    M, inside = _assemble(g, A, D, scheme)
    lu = splu(M)
    Y, E = g.mesh()
    x = np.maximum(g.R**2 - Y[inside] ** 2 - E[inside] ** 2, 0.0) + 1e-3
    x /= np.abs(x).max()
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        z = lu.solve(x)
        lam = float(x @ z / (z @ z))
        z /= z[np.argmax(np.abs(z))]
        dx = float(np.abs(z - x).max())
        x = z
        if abs(lam - lam_old) <= tol * abs(lam) and dx < 1e-8:
            break
        lam_old = lam
    else:
        raise NumericalError(f"inverse iteration did not converge in {max_iter} iterations")

    if x.min() < -1e-12 * x.max():
        raise NumericalError(f"eigenfunction lost positivity: min {x.min():g}")
    x = np.maximum(x, 0.0)
    lam = float(x @ (M @ x) / (x @ x))
    res = float(np.abs(M @ x - lam * x).max() / abs(lam))
    phi = np.zeros((g.n, g.n))
    phi[inside] = x
    return EigenPair(lam, phi, g, float(math.sqrt(np.sum(phi**2)) * g.h), res, it)


def eigenpair_along(f, g: DiscGrid, t, eps=None, scheme="upwind") -> EigenPair:
    c = coefficients(f, t, eps, R=g.R)
    return principal_eigenpair(g, c.A, c.D, scheme=scheme)


def inner_disc(g: DiscGrid):
    Y, E = g.mesh()
    return Y**2 + E**2 <= (g.R / 2) ** 2


def eigen_time_derivative_check(f, g: DiscGrid, t, dt, eps=None) -> float:
    """sup over B_{R/2} of |phi(t + dt) - phi(t)| / (dt phi(t))."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    t2 = t + dt if t + dt <= f.T else t - dt
    p1 = eigenpair_along(f, g, t, eps)
    p2 = eigenpair_along(f, g, t2, eps)
    sel = inner_disc(g)
    return float(np.max(np.abs(p2.phi[sel] - p1.phi[sel]) / (dt * p1.phi[sel])))


def bessel_j01(tol=1e-14) -> float:
    """First positive zero of J0 by bisection on its power series."""

    def j0(x):
        term, total, k = 1.0, 1.0, 0
        q = -(x * x) / 4.0
        while abs(term) > 1e-18:
            k += 1
            term *= q / (k * k)
            total += term
        return total

    lo, hi = 2.0, 3.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if j0(lo) * j0(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def tilt_bound(f, t, R) -> float:
    """M_R = sup over B_R of exp(|tilt|), so w / M_R <= v <= M_R w on the disc."""
    s = f.eval(float(t))
    a = float(s.dX) / (2 * math.sqrt(float(s.Theta)))
    b = float(s.dTheta) / 2
    return math.exp(R * math.hypot(a, b))


# --- the growing sub-solution ----------------------------------------------


class PreconditionError(ValueError):
    """A bound required by the sub-solution construction does not hold."""

    def __init__(self, violations):
        self.violations = violations
        super().__init__("; ".join(f"{k}: {v}" for k, v in violations.items()))


@dataclass(frozen=True)
class EllipsePath:
    """t -> ellipse of half-size R carried by a trajectory."""

    traj: object
    R: float

    def __call__(self, t) -> EllipseSpec:
        s = self.traj.eval(float(t))
        return EllipseSpec(float(s.X), float(s.Theta), self.R)


@dataclass
class Subsolution:
    traj: object
    grid: DiscGrid
    eps: float
    delta: float
    T: float
    r: float
    delta_w: float
    times: np.ndarray
    pairs: list
    lam_max: float
    dphi_max: float
    min_G: float
    c_R: float
    l2_norms: np.ndarray
    _interp: list = field(default_factory=list, repr=False)

    @property
    def residual_bound(self):
        """Upper bound on (w_t + L w - G w) / w over the disc and [0, T]."""
        return self.r + self.lam_max + self.dphi_max - self.min_G

    def _phi(self, t):
        if len(self.pairs) == 1:
            return self.pairs[0].phi
        k = int(np.clip(np.searchsorted(self.times, t) - 1, 0, len(self.times) - 2))
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1 - s) * self.pairs[k].phi + s * self.pairs[k + 1].phi

    def w(self, t):
        """w on the disc grid at time t."""
        return self.delta_w * math.exp(self.r * t) * self._phi(t)

    def v(self, t, x, theta):
        """Sub-solution in original coordinates, zero outside the ellipse."""
        s = self.traj.eval(float(t))
        sq = math.sqrt(float(s.Theta))
        y = (np.asarray(x, float) - float(s.X)) / sq
        eta = np.asarray(theta, float) - float(s.Theta)
        ax = self.grid.axis
        interp = RegularGridInterpolator((ax, ax), self.w(t), bounds_error=False, fill_value=0.0)
        inside = y**2 + eta**2 < self.grid.R**2
        tilt = float(s.dX) / (2 * sq) * y + float(s.dTheta) / 2 * eta
        pts = np.stack([np.broadcast_to(y, np.broadcast(y, eta).shape), np.broadcast_to(eta, np.broadcast(y, eta).shape)], axis=-1)
        vals = interp(pts) * np.exp(-tilt)
        return np.where(inside, vals, 0.0)

    def sup_v(self, t):
        s = self.traj.eval(float(t))
        Y, E = self.grid.mesh()
        tilt = float(s.dX) / (2 * math.sqrt(float(s.Theta))) * Y + float(s.dTheta) / 2 * E
        return float(np.max(self.w(t) * np.exp(-tilt)))

    def min_on_inner(self, t):
        s = self.traj.eval(float(t))
        Y, E = self.grid.mesh()
        tilt = float(s.dX) / (2 * math.sqrt(float(s.Theta))) * Y + float(s.dTheta) / 2 * E
        sel = inner_disc(self.grid)
        return float(np.min((self.w(t) * np.exp(-tilt))[sel]))


def _tilted_sup(traj, g, phi, t):
    s = traj.eval(float(t))
    Y, E = g.mesh()
    tilt = float(s.dX) / (2 * math.sqrt(float(s.Theta))) * Y + float(s.dTheta) / 2 * E
    return float(np.max(phi * np.exp(-tilt)))


def assemble_subsolution(traj, g: DiscGrid, eps, delta, T=None, n_times=11, check=True) -> Subsolution:
    """Build v = exp(-tilt) delta_w e^{r t} phi(t) on the moving ellipse.

    delta_w and r are chosen so that sup v(0) = delta and sup v(T) = 1.
    With ``check`` set, r, lambda and the eigenfunction time derivative must
    each stay below eps / 4; otherwise :class:`PreconditionError` is raised.
    """
    T = traj.T if T is None else T
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    moving = not isinstance(traj, Fixed)
    times = np.linspace(0.0, T, n_times) if moving else np.array([0.0])
    pairs = [eigenpair_along(traj, g, t, eps) for t in times]
    lam_max = max(p.lam for p in pairs)
    if moving:
        dt = times[1] - times[0]
        sel = inner_disc(g)
        dphi = max(
            float(np.max(np.abs(b.phi[sel] - a.phi[sel]) / (dt * a.phi[sel])))
            for a, b in zip(pairs[:-1], pairs[1:])
        )
    else:
        dphi = 0.0
    min_G = min(Coefficients(traj.eval(float(t)), eps).min_G(g.R) for t in np.linspace(0, T, 2001))

    s0 = _tilted_sup(traj, g, pairs[0].phi, 0.0)
    sT = _tilted_sup(traj, g, pairs[-1].phi, T)
    delta_w = delta / s0
    r = math.log(1.0 / (delta_w * sT)) / T

    if check:
        bad = {}
        if not r < eps / 4:
            bad["growth rate r < eps/4"] = f"r = {r:.6g}, eps/4 = {eps / 4:.6g} (increase T)"
        if not lam_max < eps / 4:
            bad["eigenvalue < eps/4"] = f"lambda = {lam_max:.6g}, eps/4 = {eps / 4:.6g} (increase R)"
        if not dphi <= eps / 4:
            bad["|d_t phi / phi| <= eps/4"] = f"{dphi:.6g} (increase H, T)"
        if bad:
            raise PreconditionError(bad)

    sub = Subsolution(
        traj, g, eps, delta, T, r, delta_w, times, pairs, lam_max, dphi, float(min_G), 0.0,
        np.array([p.l2_norm for p in pairs]),
    )
    sub.c_R = sub.min_on_inner(T)
    return sub


# --- empirical thresholds ----------------------------------------------------


class Thresholds(NamedTuple):
    R_eps: float  # smallest R with lambda_Laplace(B_R) < eps / 4
    H_eps: float  # smallest H = T with min G >= 3 eps / 4 on [0, T] x B_{R_eps}
    T_eps_delta: float  # smallest T with log(1/delta) / T < eps / 4


def thresholds(eps, delta, n=101, R=None, H_range=(1.0, 1e9)) -> Thresholds:
    """Thresholds for the LocalOptimal construction, found numerically.

    R_eps uses the exact scaling lambda(R) = lambda(1) / R^2 of the discrete
    Laplacian eigenvalue; H_eps is bisected in log scale.
    """
    lam1 = principal_eigenpair(DiscGrid(1.0, n)).lam
    R_eps = math.sqrt(lam1 / (eps / 4)) if R is None else R

    def ok(H):
        return min_G_over_time(LocalOptimal(H, H, eps), R_eps)[0] >= 0.75 * eps

    lo, hi = H_range
    if not ok(hi):
        raise NumericalError("no H in range satisfies the G bound")
    if ok(lo):
        hi = lo
    while hi / lo > 1.001:
        mid = math.sqrt(lo * hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return Thresholds(R_eps, hi, 4 / eps * math.log(1 / delta))
