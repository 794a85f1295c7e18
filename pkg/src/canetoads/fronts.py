"""Front positions of simulated fields and power-law fits of their motion."""

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .grid import Field, RhoProfile
from .supersolution import SupersolParams, envelope_x

UPPER_CONSTANT = 4.0 / 3.0


class FrontSource(enum.Enum):
    FIELD_LEVEL = "field"
    RHO_LEVEL = "rho"


@dataclass(frozen=True)
class FrontSeries:
    times: np.ndarray
    positions: np.ndarray
    level: float
    source: FrontSource = FrontSource.FIELD_LEVEL

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)
        if t.shape != x.shape or t.ndim != 1:
            raise ValueError("times and positions must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")


class PowerFit(NamedTuple):
    exponent: float
    coefficient: float
    r_squared: float
    window: tuple


def last_crossing(x: np.ndarray, values: np.ndarray, level: float) -> Optional[float]:
    above = np.nonzero(values >= level)[0]
    if above.size == 0:
        return None
    i = above[-1]
    if i == values.size - 1:
        return float(x[-1])
    # values[i] >= level > values[i + 1]
    s = (values[i] - level) / (values[i] - values[i + 1])
    return float(x[i] + s * (x[i + 1] - x[i]))


def front_position(f: Field, m: float) -> Optional[float]:
    """Largest x where max over theta of f reaches ``m``, linearly interpolated.

    Returns None when the level is never attained.
    """
    if not 0 < m < 1:
        raise ValueError("m must lie in (0, 1)")
    return last_crossing(f.grid.x, f.column_max(), m)


def rho_front_position(r: RhoProfile, level: float) -> Optional[float]:
    """Largest x with rho(x) >= level, linearly interpolated."""
    if not level > 0:
        raise ValueError("level must be positive")
    return last_crossing(r.x, r.values, level)


def fit_power_law(s: FrontSeries, window=None) -> PowerFit:
    """Least-squares line through (log t, log x) on ``window``.

    The default window is the last half of the series in time.
    """
    if window is None:
        window = (0.5 * (s.times[0] + s.times[-1]), s.times[-1])
    lo, hi = window
    sel = (s.times >= lo - 1e-12) & (s.times <= hi + 1e-12)
    if sel.sum() < 5:
        raise ValueError("need at least 5 points in the fit window")
    t, x = s.times[sel], s.positions[sel]
    if np.any(t <= 0) or np.any(x <= 0):
        raise ValueError("times and positions in the window must be positive")
    lt, lx = np.log(t), np.log(x)
    slope, intercept = np.polyfit(lt, lx, 1)
    pred = slope * lt + intercept
    ss_res = float(np.sum((lx - pred) ** 2))
    ss_tot = float(np.sum((lx - lx.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerFit(float(slope), float(math.exp(intercept)), min(max(r2, 0.0), 1.0), (lo, hi))


class EnvelopeReport(NamedTuple):
    passed: bool
    violations: int
    worst_time: Optional[float]
    worst_excess: float  # max of position - envelope - tolerance (<= 0 when passing)


def envelope_compare(s: FrontSeries, p: SupersolParams, m: float, hx: float = 0.0) -> EnvelopeReport:
    """Check positions(t) <= envelope_x(t, m, p) + hx at every saved time."""
    env = np.array([envelope_x(t, m, p) for t in s.times])
    excess = s.positions - env - hx
    bad = excess > 0
    i = int(np.argmax(excess))
    return EnvelopeReport(
        not bool(bad.any()),
        int(bad.sum()),
        float(s.times[i]) if bad.any() else None,
        float(excess[i]),
    )


def nonlocal_constants(eps: float):
    """(upper, lower) acceleration constants of the non-local model.

    upper is 4/3; lower is 8 / (3 sqrt(3 sqrt 3)) (1 - 2 eps)^(3/4).
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    return UPPER_CONSTANT, lower_constant(eps)


def lower_constant(eps: float = 0.0) -> float:
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 1/2)")
    return 8.0 / (3.0 * math.sqrt(3.0 * math.sqrt(3.0))) * (1.0 - 2.0 * eps) ** 0.75


def series_from_snapshots(snapshots, level, source=FrontSource.FIELD_LEVEL) -> FrontSeries:
    """Front series of the snapshots where the level is attained."""
    ts, xs = [], []
    for snap in snapshots:
        if source is FrontSource.FIELD_LEVEL:
            x = front_position(snap.field, level)
        else:
            x = rho_front_position(snap.rho, level)
        if x is not None:
            ts.append(snap.time)
            xs.append(x)
    return FrontSeries(np.array(ts), np.array(xs), level, source)
