"""Closed-form objects of the Hamilton-Jacobi limit

    psi_t + theta * psi_x**2 + psi_theta**2 = 0,

started from a point mass at the origin. Everything here is a pure,
vectorized function of its arguments.

The solution is psi = (theta + Z**2)**2 / (4 t), where Z(x, theta) is the
real root of Z**3 + 3 theta Z + 3 x = 0.
"""

from typing import NamedTuple

import numpy as np


class EdgePoint(NamedTuple):
    x_edge: float
    theta_edge: float
    t: float


class PsiMinimum(NamedTuple):
    theta: np.ndarray
    value: np.ndarray
    boundary: np.ndarray  # True where the minimum over theta >= theta_lower sits at theta_lower


def _continued_root(x, theta):
    # Real root of Z^3 + 3 theta Z + 3x = 0 on the branch through the theta >= 0 root.
    # Negative theta is only reached by finite-difference stencils near theta = 0.
    x, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(theta, float))
    z = np.zeros(x.shape)
    disc = 2.25 * x**2 + theta**3

    one = disc >= 0
    if np.any(one):
        xs, ts = x[one], theta[one]
        sgn = np.where(xs < 0, -1.0, 1.0)
        # larger-magnitude Cardano term; the partner is -theta/u
        u = np.cbrt(-sgn * (1.5 * np.abs(xs) + np.sqrt(disc[one])))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -ts / u
            # Z = u + v, and u^3 + v^3 = -3x gives Z = -3x / (u^2 - uv + v^2)
            zz = -3.0 * xs / (u * u + ts + v * v)
        z[one] = np.where(u == 0, 0.0, zz)

    three = ~one
    if np.any(three):
        xs, ts = x[three], theta[three]
        s = np.sqrt(-ts)
        arg = np.clip(1.5 * np.abs(xs) / (-ts * s), -1.0, 1.0)
        big = 2.0 * s * np.cos(np.arccos(arg) / 3.0)
        z[three] = np.where(xs == 0, 0.0, -np.sign(xs) * big)

    # one Newton step; derivative 3(Z^2 + theta) is positive off the origin
    fp = 3.0 * (z * z + theta)
    f = z**3 + 3.0 * theta * z + 3.0 * x
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(fp > 0, z - f / fp, z)
    return z


def cubic_real_root(x, theta):
    """Unique real root Z of Z**3 + 3 theta Z + 3 x = 0 for theta >= 0."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError("theta must be non-negative")
    z = _continued_root(x, theta) + 0.0  # no signed zeros
    return z if z.ndim else float(z)


def psi(t, x, theta):
    """Rate function (theta + Z^2)^2 / (4t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    z = _continued_root(x, theta)
    out = (np.asarray(theta) + z * z) ** 2 / (4.0 * t)
    return out if np.ndim(out) else float(out)


def theta_star(x):
    """Interior minimizer (3|x|/4)^(2/3) of psi(t, x, .)."""
    return (0.75 * np.abs(x)) ** (2.0 / 3.0)


def psi_min(t, x):
    return (0.75 * np.abs(x)) ** (4.0 / 3.0) / t


def critical_radius(theta_lower):
    """|x| above which the minimizer theta_star exceeds theta_lower."""
    return 4.0 / 3.0 * theta_lower**1.5


def psi_minimum(t, x, theta_lower) -> PsiMinimum:
    """Minimum of psi(t, x, theta) over theta >= theta_lower.

    Where |x| < r_c the minimum is on the boundary theta = theta_lower and the
    ``boundary`` flag is set.
    """
    x = np.asarray(x, dtype=float)
    boundary = np.abs(x) < critical_radius(theta_lower)
    th = np.where(boundary, theta_lower, theta_star(x))
    val = np.where(boundary, psi(t, x, np.full_like(x, theta_lower)), psi_min(t, x))
    return PsiMinimum(th, val, boundary)


def level_set_x(t, theta):
    """Non-negative x on the level set {e^(t - psi) = 1} at trait theta."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta > 2 * t) or np.any(theta < 0):
        raise ValueError("level set only exists for 0 <= theta <= 2t")
    out = 2.0 / 3.0 * (theta + t) * np.sqrt(2 * t - theta)
    return out if out.ndim else float(out)


def edge_point(t) -> EdgePoint:
    return EdgePoint(4.0 / 3.0 * t**1.5, float(t), float(t))


def optimal_trajectory(t_final, s):
    """Forward optimal path from the origin to the edge point at time t_final."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > t_final):
        raise ValueError("s must lie in [0, t_final]")
    r = s / t_final
    X = (1.5 - 0.5 * r) * r**2 * (4.0 / 3.0) * t_final**1.5
    TH = s * (2.0 - r)
    return X, TH


def optimal_velocity(t_final, s):
    """(dX/ds, dTheta/ds) along :func:`optimal_trajectory`."""
    r = np.asarray(s, dtype=float) / t_final
    return 2.0 * np.sqrt(t_final) * r * (2.0 - r), 2.0 - 2.0 * r


def lagrangian(theta, vx, vtheta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("theta must be positive")
    out = np.asarray(vx) ** 2 / (4.0 * theta) + np.asarray(vtheta) ** 2 / 4.0
    return out if np.ndim(out) else float(out)


def action_along_optimal(t_final, n_steps=10_000):
    """Midpoint-rule action of the Lagrangian along the optimal path."""
    if n_steps < 10:
        raise ValueError("n_steps must be >= 10")
    ds = t_final / n_steps
    s = (np.arange(n_steps) + 0.5) * ds
    _, th = optimal_trajectory(t_final, s)
    vx, vth = optimal_velocity(t_final, s)
    return float(np.sum(lagrangian(th, vx, vth)) * ds)


def local_steps(t, x, theta, rel):
    """Finite-difference steps proportional to the natural scales at a point.

    psi is homogeneous under (t, x, theta) -> (k t, k^(3/2) x, k theta), and
    near a point the trait scale is Z^2 + theta, the space scale its 3/2 power.
    """
    z = _continued_root(x, theta)
    ell2 = z * z + np.asarray(theta, dtype=float)
    return rel * np.asarray(t, dtype=float), rel * ell2**1.5, rel * ell2


def harmonicity_residual(x, theta, h=None, rel=1e-4):
    """theta Z_xx + Z_theta_theta by second-order central differences.

    ``h`` fixes one step for both axes; otherwise steps follow
    :func:`local_steps` with relative size ``rel``.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if h is None:
        _, hx, hth = local_steps(1.0, x, theta, rel)
    else:
        hx = hth = h
    z0 = _continued_root(x, theta)
    zxx = (_continued_root(x + hx, theta) - 2 * z0 + _continued_root(x - hx, theta)) / hx**2
    ztt = (_continued_root(x, theta + hth) - 2 * z0 + _continued_root(x, theta - hth)) / hth**2
    out = theta * zxx + ztt
    return out if out.ndim else float(out)


def _psi_any(t, x, theta):
    z = _continued_root(x, theta)
    return (theta + z * z) ** 2 / (4.0 * t)


def hj_residual(t, x, theta, h=None, rel=3e-5):
    """psi_t + theta psi_x^2 + psi_theta^2 by central differences.

    With ``h`` given, the same step is used on all three axes.
    """
    t, x, theta = (np.asarray(a, dtype=float) for a in (t, x, theta))
    if h is None:
        ht, hx, hth = local_steps(t, x, theta, rel)
    else:
        ht = hx = hth = h
    pt = (_psi_any(t + ht, x, theta) - _psi_any(t - ht, x, theta)) / (2 * ht)
    px = (_psi_any(t, x + hx, theta) - _psi_any(t, x - hx, theta)) / (2 * hx)
    pth = (_psi_any(t, x, theta + hth) - _psi_any(t, x, theta - hth)) / (2 * hth)
    out = pt + theta * px**2 + pth**2
    return out if out.ndim else float(out)
