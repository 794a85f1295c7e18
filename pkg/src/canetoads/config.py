"""Key = value run configuration for the ``simulate`` subcommand.

Lines are ``key = value``; ``#`` starts a comment. Recognized keys::

    model        local | nonlocal | linearized          (default local)
    x_min x_max theta_min theta_max                      (floats)
    nx ntheta                                            (node counts)
    dt t_end save_every                                  (float, float, int)
    seed                                                 (int, default 0)
    ic.type      bump                                    (only bump data)
    ic.x0 ic.theta0 ic.radius ic.height                  (floats)
    ic.mirrored  true | false
    bc.top bc.x bc.x_left   neumann | dirichlet

Unset sizes follow the front envelope: x_max = 1.5 (4/3) t_end^(3/2),
x_min = -x_max (0 when the bump is mirrored), theta_max = theta_min + 3 t_end,
hx = 0.25, htheta = 0.5. The non-local model needs an explicit theta_max.
"""

import math
from dataclasses import asdict, dataclass, field

from .grid import Field, GridSpec
from .solver import Boundary, ModelKind, SolverConfig, make_initial_bump


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_FLOAT_KEYS = ("x_min", "x_max", "theta_min", "theta_max", "dt", "t_end")
_INT_KEYS = ("nx", "ntheta", "save_every", "seed")
_IC_FLOAT = ("ic.x0", "ic.theta0", "ic.radius", "ic.height")
_BC_KEYS = ("bc.top", "bc.x", "bc.x_left")
KNOWN_KEYS = frozenset(("model", "ic.type", "ic.mirrored") + _FLOAT_KEYS + _INT_KEYS + _IC_FLOAT + _BC_KEYS)


@dataclass(frozen=True)
class RunConfig:
    model: ModelKind
    grid: GridSpec
    t_end: float
    save_every: int
    boundary_top: Boundary
    boundary_x: Boundary
    boundary_x_left: Boundary
    ic: dict
    seed: int = 0
    defaults: tuple = field(default=(), compare=False)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            self.grid,
            self.model,
            self.t_end,
            self.save_every,
            self.boundary_top,
            self.boundary_x,
            self.boundary_x_left,
        )

    def initial_field(self) -> Field:
        ic = self.ic
        return make_initial_bump(
            self.grid, ic["x0"], ic["theta0"], ic["radius"], ic["height"], mirrored=ic["mirrored"]
        )

    def echo(self) -> dict:
        """Flat, JSON-friendly view of every resolved setting."""
        g = asdict(self.grid)
        out = {"model": self.model.value, "t_end": self.t_end, "save_every": self.save_every, "seed": self.seed}
        out.update(g)
        out.update({"bc.top": self.boundary_top.value, "bc.x": self.boundary_x.value,
                    "bc.x_left": self.boundary_x_left.value})
        out.update({f"ic.{k}": v for k, v in self.ic.items()})
        out["defaults_filled"] = list(self.defaults)
        return out


def _read_pairs(text):
    pairs, errors = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            errors.append(f"{key}: given more than once")
        pairs[key] = value
    return pairs, errors


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str, strict: bool = True) -> RunConfig:
    """Parse and validate a run configuration; raises ConfigError listing all problems."""
    pairs, errors = _read_pairs(text)
    if strict:
        errors += [f"{k}: unknown key" for k in pairs if k not in KNOWN_KEYS]

    vals = {}
    for k in _FLOAT_KEYS + _IC_FLOAT:
        if k in pairs:
            try:
                vals[k] = float(pairs[k])
                if not math.isfinite(vals[k]):
                    raise ValueError
            except ValueError:
                errors.append(f"{k}: not a finite number: {pairs[k]!r}")
    for k in _INT_KEYS:
        if k in pairs:
            try:
                vals[k] = int(pairs[k])
            except ValueError:
                errors.append(f"{k}: not an integer: {pairs[k]!r}")

    model = ModelKind.LOCAL
    if "model" in pairs:
        try:
            model = ModelKind(pairs["model"].lower())
        except ValueError:
            model = None
            errors.append(f"model: must be local, nonlocal or linearized, got {pairs['model']!r}")
        if model is ModelKind.ELLIPSE:
            errors.append("model: the ellipse model is driven by a trajectory, not a config file")

    bcs = {}
    for k in _BC_KEYS:
        if k in pairs:
            try:
                bcs[k] = Boundary(pairs[k].lower())
            except ValueError:
                errors.append(f"{k}: must be neumann or dirichlet, got {pairs[k]!r}")
    if pairs.get("ic.type", "bump").lower() != "bump":
        errors.append(f"ic.type: only 'bump' is supported, got {pairs['ic.type']!r}")
    mirrored = False
    if "ic.mirrored" in pairs:
        try:
            mirrored = _bool(pairs["ic.mirrored"])
        except ValueError as e:
            errors.append(f"ic.mirrored: {e}")

    if "dt" in vals and not 0 < vals["dt"] <= 0.5:
        errors.append(f"dt: must lie in (0, 0.5], got {vals['dt']}")
    if "t_end" in vals and not vals["t_end"] > 0:
        errors.append(f"t_end: must be positive, got {vals['t_end']}")
    if "theta_min" in vals and not vals["theta_min"] > 0:
        errors.append(f"theta_min: must be positive, got {vals['theta_min']}")
    for k in ("nx", "ntheta"):
        if k in vals and vals[k] < 3:
            errors.append(f"{k}: must be >= 3, got {vals[k]}")
    if "save_every" in vals and vals["save_every"] < 1:
        errors.append(f"save_every: must be >= 1, got {vals['save_every']}")
    if model is ModelKind.NONLOCAL and "theta_max" not in pairs:
        errors.append("theta_max: required for model=nonlocal (the trait integral needs an explicit truncation)")
    if errors:
        raise ConfigError(errors)

    filled = []

    def get(key, default):
        if key in vals:
            return vals[key]
        filled.append(key)
        return default

    t_end = get("t_end", 10.0)
    dt = get("dt", 0.05)
    theta_min = get("theta_min", 1.0)
    theta_max = get("theta_max", theta_min + 3.0 * t_end)
    x_max = get("x_max", 1.5 * 4.0 / 3.0 * t_end**1.5)
    x_min = get("x_min", 0.0 if mirrored else -x_max)
    nx = get("nx", int(math.ceil((x_max - x_min) / 0.25)) + 1)
    ntheta = get("ntheta", int(math.ceil((theta_max - theta_min) / 0.5)) + 1)
    save_every = get("save_every", max(1, int(round(1.0 / dt))))
    seed = get("seed", 0)

    ic = {
        "x0": get("ic.x0", x_min if mirrored else 0.5 * (x_min + x_max)),
        "theta0": get("ic.theta0", theta_min + 1.5),
        "radius": get("ic.radius", 1.5),
        "height": get("ic.height", 1.0),
        "mirrored": mirrored,
    }
    top = bcs.get("bc.top", Boundary.NEUMANN_ZERO)
    bx = bcs.get("bc.x", Boundary.DIRICHLET_ZERO)
    bxl = bcs.get("bc.x_left", Boundary.NEUMANN_ZERO if mirrored else bx)
    filled += [k for k in _BC_KEYS if k not in bcs]

    try:
        grid = GridSpec(x_min, x_max, theta_min, theta_max, nx, ntheta, dt)
    except ValueError as e:
        raise ConfigError(str(e).split("; ")) from None
    cfg = RunConfig(model, grid, t_end, save_every, top, bx, bxl, ic, seed, tuple(filled))
    try:
        cfg.initial_field()
    except ValueError as e:
        raise ConfigError([f"ic: {e}"]) from None
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
