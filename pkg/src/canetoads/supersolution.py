"""Piecewise super-solution of the linearized cane toads equation.

The function is glued from three closed forms, with tau = t + a:

* x <= 0:                 C exp(tau - theta^2 / (4 tau))
* x >= 0 outside Omega:   C exp(tau - psi(tau, x, theta))
* Omega:                  C exp(tau - (3x/4)^(4/3) / tau)

where Omega = {x >= r_c, theta_lower <= theta <= theta_star(x)} is the region
below the curve of minimizers of psi.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from . import hamilton_jacobi as hj
from .grid import Field, GridSpec, integrate_theta


class RegionTag(enum.IntEnum):
    LEFT_HALF = 0
    OMEGA_COMPLEMENT_RIGHT = 1
    OMEGA = 2


@dataclass(frozen=True)
class SupersolParams:
    a: float = 1.0
    C: float = 1.0
    theta_lower: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.C > 0 and self.theta_lower > 0):
            raise ValueError("a, C and theta_lower must be positive")

    @property
    def r_c(self):
        return hj.critical_radius(self.theta_lower)


def _region_codes(x, theta, theta_lower):
    x, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(theta, float))
    in_omega = (x >= hj.critical_radius(theta_lower)) & (theta <= hj.theta_star(x))
    return np.where(
        in_omega,
        RegionTag.OMEGA,
        np.where(x <= 0, RegionTag.LEFT_HALF, RegionTag.OMEGA_COMPLEMENT_RIGHT),
    ).astype(int)


def classify_region(x, theta, theta_lower):
    """Region of (x, theta); points on Gamma belong to Omega."""
    if np.any(np.asarray(theta) < theta_lower):
        raise ValueError("theta below theta_lower is outside the trait domain")
    codes = _region_codes(x, theta, theta_lower)
    return RegionTag(int(codes)) if codes.ndim == 0 else codes


def _log_branch(code, tau, x, theta):
    """log(u/C) for the closed form attached to ``code``."""
    if code == RegionTag.LEFT_HALF:
        return tau - theta**2 / (4 * tau)
    if code == RegionTag.OMEGA:
        return tau - (0.75 * np.maximum(x, 0.0)) ** (4.0 / 3.0) / tau
    z = hj._continued_root(x, theta)
    return tau - (theta + z * z) ** 2 / (4 * tau)


def log_tilde_u(t, x, theta, p: SupersolParams):
    t, x, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, theta)))
    tau = t + p.a
    codes = _region_codes(x, theta, p.theta_lower)
    out = np.empty(x.shape)
    for code in RegionTag:
        sel = codes == code
        if np.any(sel):
            out[sel] = _log_branch(code, tau[sel], x[sel], theta[sel])
    return out + np.log(p.C)


def tilde_u(t, x, theta, p: SupersolParams):
    out = np.exp(log_tilde_u(t, x, theta, p))
    return out if out.ndim else float(out)


def tilde_u_field(grid: GridSpec, t, p: SupersolParams) -> Field:
    X, TH = grid.mesh()
    return Field(grid, tilde_u(t, X, TH, p), t)


def fit_amplitude(initial: Field, a=1.0, theta_lower=None, safety=1.0):
    """Smallest C with tilde_u(0, ., .) >= initial at every node (times ``safety``)."""
    theta_lower = initial.grid.theta_min if theta_lower is None else theta_lower
    X, TH = initial.grid.mesh()
    base = tilde_u(0.0, X, TH, SupersolParams(a, 1.0, theta_lower))
    pos = initial.values > 0
    if not np.any(pos):
        return 1.0
    return float(safety * np.max(initial.values[pos] / base[pos]))


class Residual(NamedTuple):
    value: np.ndarray  # u_t - theta u_xx - u_theta_theta - u
    scale: np.ndarray  # tilde_u at the stencil center
    crosses: np.ndarray  # stencil touches a different region


def residual(t, x, theta, p: SupersolParams, h=1e-3) -> Residual:
    """Central-difference residual of the linearized operator applied to tilde_u.

    All stencil values are taken from the closed form of the center's region;
    stencils reaching into another region are flagged in ``crosses``.
    """
    t, x, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, theta)))
    codes = _region_codes(x, theta, p.theta_lower)
    crosses = np.zeros(x.shape, dtype=bool)
    for dx, dth in ((h, 0), (-h, 0), (0, h), (0, -h)):
        crosses |= _region_codes(x + dx, theta + dth, p.theta_lower) != codes

    value = np.empty(x.shape)
    center = np.empty(x.shape)
    for code in RegionTag:
        sel = codes == code
        if not np.any(sel):
            continue
        tau, xs, ths = t[sel] + p.a, x[sel], theta[sel]
        u0 = np.exp(_log_branch(code, tau, xs, ths))

        def rel(dtau=0.0, dx=0.0, dth=0.0):
            # ratio to the center value, so exp never sees the full exponent twice
            return np.exp(_log_branch(code, tau + dtau, xs + dx, ths + dth) - np.log(u0))

        ut = (rel(dtau=h) - rel(dtau=-h)) / (2 * h)
        uxx = (rel(dx=h) - 2 + rel(dx=-h)) / h**2
        utt = (rel(dth=h) - 2 + rel(dth=-h)) / h**2
        value[sel] = p.C * u0 * (ut - ths * uxx - utt - 1.0)
        center[sel] = p.C * u0
    return Residual(value, center, crosses)


class SweepReport(NamedTuple):
    min_relative_residual: float
    worst_point: tuple
    per_region: dict
    n_used: int
    n_excluded: int


def residual_sweep(
    p: SupersolParams,
    t_range=(1.0, 20.0),
    samples_per_region=10_000,
    x_extent=60.0,
    theta_extent=40.0,
    h=1e-3,
    seed=0,
) -> SweepReport:
    """Random residual sweep with ``samples_per_region`` interior points in each region."""
    rng = np.random.default_rng(seed)
    kept = {code: [] for code in RegionTag}
    counts = dict.fromkeys(RegionTag, 0)
    excluded = 0
    while min(counts.values()) < samples_per_region:
        n = 20_000
        t = rng.uniform(*t_range, n)
        x = rng.uniform(-x_extent, x_extent, n)
        theta = rng.uniform(p.theta_lower + 2 * h, theta_extent, n)
        # Omega is thin; bias a share of draws into it
        k = n // 2
        x[:k] = rng.uniform(p.r_c, x_extent, k)
        theta[:k] = p.theta_lower + 2 * h + rng.uniform(0, 1, k) * np.maximum(
            hj.theta_star(x[:k]) - p.theta_lower - 2 * h, 0.0
        )
        # interior: at least 2h from every interface
        codes = _region_codes(x, theta, p.theta_lower)
        near = np.zeros(n, dtype=bool)
        for dx, dth in ((2 * h, 0), (-2 * h, 0), (0, 2 * h), (0, -2 * h)):
            near |= _region_codes(x + dx, theta + dth, p.theta_lower) != codes
        excluded += int(near.sum())
        for code in RegionTag:
            sel = (codes == code) & ~near
            kept[code].append((t[sel], x[sel], theta[sel]))
            counts[code] += int(sel.sum())

    worst = (np.inf, None)
    per_region = {}
    n_used = 0
    for code in RegionTag:
        t = np.concatenate([b[0] for b in kept[code]])[:samples_per_region]
        x = np.concatenate([b[1] for b in kept[code]])[:samples_per_region]
        th = np.concatenate([b[2] for b in kept[code]])[:samples_per_region]
        res = residual(t, x, th, p, h)
        ok = ~res.crosses
        rel = res.value[ok] / res.scale[ok]
        excluded += int((~ok).sum())
        n_used += int(ok.sum())
        i = int(np.argmin(rel))
        per_region[code.name] = float(rel[i])
        if rel[i] < worst[0]:
            worst = (float(rel[i]), (float(t[ok][i]), float(x[ok][i]), float(th[ok][i])))
    return SweepReport(worst[0], worst[1], per_region, n_used, excluded)


def boundary_theta_derivative(t, x, p: SupersolParams, h=1e-4):
    """One-sided d(tilde_u)/d(theta) at theta = theta_lower (signed)."""
    th0 = np.full(np.shape(x), p.theta_lower)
    return (tilde_u(t, x, th0 + h, p) - tilde_u(t, x, th0, p)) / h


def envelope_x(t, m, p: SupersolParams):
    """Rightmost point of the level set {tilde_u(t, ., .) = m}."""
    tau = np.asarray(t, dtype=float) + p.a
    inner = 1.0 - np.log(m / p.C) / tau
    if np.any(inner <= 0):
        raise ValueError("level set {tilde_u = m} is empty: m >= C exp(t + a)")
    out = 4.0 / 3.0 * tau**1.5 * inner**0.75
    return out if out.ndim else float(out)


class RhoEnvelope(NamedTuple):
    x_mt: float
    integral: float
    bulk: float
    tail: float
    tail_bound: float
    precondition_ok: bool


def rho_envelope_check(t, p: SupersolParams, m=0.5) -> RhoEnvelope:
    """theta-integral of tilde_u at x_{m,t}, the envelope for level m / (10 (t + a)).

    The tail beyond 5 theta_star is bounded with the Gaussian Mills ratio
    C (2 tau / A) exp(tau - A^2 / (4 tau)), A = 5 theta_star.
    """
    tau = t + p.a
    x_mt = envelope_x(t, m / (10 * tau), p)
    th_star = float(hj.theta_star(x_mt))
    ok = 5 * tau / 6 <= th_star <= 7 * tau / 6

    def f(theta):
        return float(tilde_u(t, x_mt, theta, p))

    lo = p.theta_lower
    split = max(th_star, lo)
    bulk = integrate.quad(f, lo, split, epsabs=0, epsrel=1e-10)[0]
    bulk += integrate.quad(f, split, 5 * th_star, epsabs=0, epsrel=1e-10, limit=200)[0]
    tail = integrate.quad(f, 5 * th_star, np.inf, epsabs=0, epsrel=1e-8)[0]
    A = 5 * th_star
    tail_bound = p.C * (2 * tau / A) * np.exp(tau - A * A / (4 * tau))
    return RhoEnvelope(x_mt, bulk + tail, bulk, tail, float(tail_bound), ok)


def rho_upper_profile(grid: GridSpec, t, p: SupersolParams):
    """Trapezoid theta-integral of tilde_u on the nodes of ``grid``.

    Any field lying below tilde_u at the nodes has a rho profile below this one.
    """
    return integrate_theta(tilde_u_field(grid, t, p))
