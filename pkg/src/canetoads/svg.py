"""Self-contained SVG figures: level-set contours in (x, theta) and log-log front plots."""

import math
from typing import NamedTuple

import numpy as np
from skimage import measure

from .grid import Field

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class ContourSet(NamedTuple):
    level: float
    paths: list  # each an (k, 2) array of (x, theta) points
    closed: list


def contour_paths(f: Field, level: float) -> ContourSet:
    """Marching-squares polylines of ``f == level`` in (x, theta) coordinates."""
    g = f.grid
    paths, closed = [], []
    v = f.values
    if v.min() < level < v.max():
        for c in measure.find_contours(v, level):
            xy = np.column_stack([g.x_min + c[:, 0] * g.hx, g.theta_min + c[:, 1] * g.htheta])
            paths.append(xy)
            closed.append(bool(np.allclose(c[0], c[-1])))
    return ContourSet(level, paths, closed)


class _Frame:
    """Affine map from data coordinates to an SVG viewport."""

    def __init__(self, xlim, ylim, width, height, margin=50, logx=False, logy=False):
        self.logx, self.logy = logx, logy
        self.x0, self.x1 = (self._tx(v) for v in xlim)
        self.y0, self.y1 = (self._ty(v) for v in ylim)
        self.w, self.h, self.m = width, height, margin

    def _tx(self, v):
        return math.log10(v) if self.logx else v

    def _ty(self, v):
        return math.log10(v) if self.logy else v

    def px(self, x):
        return self.m + (self._tx(x) - self.x0) / (self.x1 - self.x0) * (self.w - 2 * self.m)

    def py(self, y):
        return self.h - self.m - (self._ty(y) - self.y0) / (self.y1 - self.y0) * (self.h - 2 * self.m)

    def axes(self, xlabel, ylabel):
        m, w, h = self.m, self.w, self.h
        return [
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#000"/>',
            f'<text x="{w / 2:.1f}" y="{h - 12}" text-anchor="middle" font-size="13">{xlabel}</text>',
            f'<text x="14" y="{h / 2:.1f}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 14 {h / 2:.1f})">{ylabel}</text>',
        ]

    def ticks(self, xs, ys):
        out = []
        for x in xs:
            p = self.px(x)
            out.append(f'<line x1="{p:.2f}" y1="{self.h - self.m}" x2="{p:.2f}" y2="{self.h - self.m + 5}" stroke="#000"/>')
            out.append(f'<text x="{p:.2f}" y="{self.h - self.m + 18}" text-anchor="middle" font-size="10">{x:g}</text>')
        for y in ys:
            p = self.py(y)
            out.append(f'<line x1="{self.m - 5}" y1="{p:.2f}" x2="{self.m}" y2="{p:.2f}" stroke="#000"/>')
            out.append(f'<text x="{self.m - 8}" y="{p + 3:.2f}" text-anchor="end" font-size="10">{y:g}</text>')
        return out


def _doc(width, height, body):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="#fff"/>', *body, "</svg>"]) + "\n"


def _nice_ticks(lo, hi, n=5):
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for k in (1, 2, 5, 10):
        if (hi - lo) / (k * step) <= n:
            step *= k
            break
    start = math.ceil(lo / step) * step
    return [round(v, 10) for v in np.arange(start, hi + 1e-9 * step, step)]


def emit_contour_svg(fields, levels, width=640, height=420, title=None):
    """SVG with the contours of each field at each level.

    ``fields`` is one Field or a sequence on a common grid. Levels that
    produce no contour are skipped and listed in a comment.
    """
    fields = [fields] if isinstance(fields, Field) else list(fields)
    g = fields[0].grid
    fr = _Frame((g.x_min, g.x_max), (g.theta_min, g.theta_max), width, height)
    body = fr.axes("x", "theta") + fr.ticks(_nice_ticks(g.x_min, g.x_max), _nice_ticks(g.theta_min, g.theta_max))
    if title:
        body.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="14">{title}</text>')
    empty = []
    for i, f in enumerate(fields):
        color = _PALETTE[i % len(_PALETTE)]
        for level in levels:
            cs = contour_paths(f, level)
            if not cs.paths:
                empty.append(f"t={f.time:g} level={level:g}")
                continue
            for path, closed in zip(cs.paths, cs.closed):
                pts = " ".join(f"{fr.px(x):.2f},{fr.py(y):.2f}" for x, y in path)
                tag = "polygon" if closed else "polyline"
                body.append(
                    f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="1.5">'
                    f"<title>t={f.time:g} level={level:g}</title></{tag}>"
                )
    if empty:
        body.append(f"<!-- no contour for: {'; '.join(empty)} -->")
    return _doc(width, height, body)


def _decades(lo, hi):
    return [10.0**k for k in range(math.ceil(math.log10(lo)), math.floor(math.log10(hi)) + 1)]


def emit_loglog_svg(times, positions, fit=None, width=560, height=420, title="front position"):
    """Log-log scatter of a front series, with the fitted power law if given."""
    t = np.asarray(times, float)
    x = np.asarray(positions, float)
    keep = (t > 0) & (x > 0)
    t, x = t[keep], x[keep]
    if t.size == 0:
        raise ValueError("nothing positive to plot")
    pad = 1.15
    fr = _Frame((t.min() / pad, t.max() * pad), (x.min() / pad, x.max() * pad), width, height, logx=True, logy=True)
    body = fr.axes("t", "front x") + fr.ticks(
        _decades(t.min() / pad, t.max() * pad), _decades(x.min() / pad, x.max() * pad)
    )
    body.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="14">{title}</text>')
    for ti, xi in zip(t, x):
        body.append(f'<circle cx="{fr.px(ti):.2f}" cy="{fr.py(xi):.2f}" r="2.5" fill="#1f77b4"/>')
    if fit is not None:
        lo, hi = fit.window
        tt = np.geomspace(lo, hi, 50)
        pts = " ".join(f"{fr.px(a):.2f},{fr.py(fit.coefficient * a**fit.exponent):.2f}" for a in tt)
        body.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
        body.append(
            f'<text x="{width - 60}" y="{60}" text-anchor="end" font-size="12">'
            f"x = {fit.coefficient:.4g} t^{fit.exponent:.4f}</text>"
        )
    return _doc(width, height, body)
