"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or unmet precondition, 2 numerical
failure (including a failed acceptance check).
"""

import argparse
import logging
import sys

import numpy as np

from . import acceptance, fronts, spectral
from . import hamilton_jacobi as hj
from .config import ConfigError, load_config, parse_config
from .grid import GridSpec
from .outputs import csv_document, json_document, output_dir, read_csv, verify_hash, write_text
from .solver import NumericalError, iter_run
from .supersolution import SupersolParams, envelope_x, fit_amplitude, residual_sweep, tilde_u_field
from .svg import emit_contour_svg, emit_loglog_svg

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _floats(text):
    """'1,2,3' or 'start:stop:count' (inclusive linspace)."""
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(v) for v in text.split(",")])


# --- simulate --------------------------------------------------------------


def cmd_simulate(args):
    cfg = load_config(args.config)
    out = output_dir(args.output_dir)
    echo = cfg.echo()
    g = cfg.grid
    rows = []
    last = None
    for snap in iter_run(cfg.solver_config(), cfg.initial_field()):
        colmax = snap.field.column_max()
        rows.extend((snap.time, x, r, c) for x, r, c in zip(g.x, snap.rho.values, colmax))
        if args.fields:
            X, TH = g.mesh()
            doc = csv_document(
                ("x", "theta", "u"),
                zip(X.ravel(), TH.ravel(), snap.field.values.ravel()),
                {**echo, "t": snap.time},
            )
            write_text(out / f"field_t{snap.time:010.4f}.csv", doc)
        last = snap
    path = write_text(out / "profiles.csv", csv_document(("t", "x", "rho", "colmax"), rows, echo))
    if args.svg_levels:
        levels = [float(v) for v in args.svg_levels.split(",")]
        write_text(out / "contours.svg", emit_contour_svg(last.field, levels, title=f"u at t = {last.time:g}"))
    print(path)
    return EXIT_OK


# --- hj-eval ---------------------------------------------------------------


def cmd_hj_eval(args):
    ts, xs, ths = _floats(args.t), _floats(args.x), _floats(args.theta)
    if np.any(ts <= 0) or np.any(ths < 0):
        raise ValueError("need t > 0 and theta >= 0")
    T, X, TH = (a.ravel() for a in np.meshgrid(ts, xs, ths, indexing="ij"))
    z = hj.cubic_real_root(X, TH)
    p = hj.psi(T, X, TH)
    ok = TH <= 2 * T
    lx = np.full(T.shape, np.nan)
    lx[ok] = hj.level_set_x(T[ok], TH[ok])
    rows = zip(T, X, TH, np.atleast_1d(z), np.atleast_1d(p), hj.theta_star(X), lx)
    doc = csv_document(("t", "x", "theta", "Z", "psi", "theta_star", "level_x"), rows, {"t": args.t, "x": args.x, "theta": args.theta})
    sys.stdout.write(doc)
    return EXIT_OK


# --- verify-supersolution ----------------------------------------------------


def cmd_verify_supersolution(args):
    p = SupersolParams(args.a, args.C, args.theta_lower)
    rep = residual_sweep(p, tuple(args.t_range), args.samples, seed=args.seed)
    ts = np.linspace(args.t_range[0], args.t_range[1], 20)
    series = [{"t": float(t), "x_envelope": envelope_x(t, args.m, p)} for t in ts]
    payload = {
        "min_residual": rep.min_relative_residual,
        "worst_point": rep.worst_point,
        "per_region": rep.per_region,
        "n_used": rep.n_used,
        "n_excluded": rep.n_excluded,
        "envelope_series": series,
    }
    config = {"a": args.a, "C": args.C, "theta_lower": args.theta_lower, "t_range": list(args.t_range),
              "samples": args.samples, "seed": args.seed, "m": args.m}
    doc = json_document(payload, config)
    out = output_dir(args.output_dir)
    write_text(out / "supersolution.json", doc)
    if args.svg:
        t_max = 3.0
        grid = GridSpec.from_spacing(-5, 1.2 * envelope_x(t_max, 1.0, p) + 1, args.theta_lower, 4 * (t_max + args.a), 0.05, 0.05, 0.1)
        fields = [tilde_u_field(grid, t, p) for t in (1.0, 2.0, 3.0)]
        write_text(out / "supersolution_levels.svg", emit_contour_svg(fields, [1.0], title="{tilde u = 1} at t = 1, 2, 3"))
    sys.stdout.write(doc)
    return EXIT_OK if rep.min_relative_residual >= -1e-6 else EXIT_NUMERICAL


# --- eigen -------------------------------------------------------------------


def _trajectory(args):
    if args.traj == "local":
        return spectral.LocalOptimal(args.T, args.H, args.eps)
    if args.traj == "nonlocal":
        return spectral.NonlocalStraight(args.t_eps, args.H, args.gamma, args.eps, args.T)
    return spectral.Fixed(0.0, args.H, args.T, args.eps)


def cmd_eigen(args):
    f = _trajectory(args)
    t = args.T / 2 if args.t is None else args.t
    g = spectral.DiscGrid(args.R, args.n)
    c = spectral.coefficients(f, t, R=args.R)
    pair = spectral.principal_eigenpair(g, c.A, c.D, scheme=args.scheme)
    dphi = 0.0 if args.traj == "fixed" else spectral.eigen_time_derivative_check(f, g, t, args.T / 100)
    inner = spectral.inner_disc(g)
    payload = {
        "lambda": pair.lam,
        "lambda_laplace": spectral.principal_eigenpair(g).lam,
        "min_G": float(c.min_G(args.R)),
        "min_G_over_time": spectral.min_G_over_time(f, args.R)[0],
        "max_lagrangian": spectral.constraint_sweep(f).max_lagrangian,
        "dphi_dt_ratio": dphi,
        "c_R": float(pair.phi[inner].min()),
        "phi_l2_norm": pair.l2_norm,
        "eigen_residual": pair.residual,
        "iterations": pair.iterations,
    }
    config = {k: v for k, v in vars(args).items() if k not in ("func", "output_dir")}
    doc = json_document(payload, config)
    write_text(output_dir(args.output_dir) / "eigen.json", doc)
    sys.stdout.write(doc)
    return EXIT_OK


# --- front-fit ---------------------------------------------------------------


def _config_from_echo(echo):
    lines = [f"{k} = {str(v).lower() if isinstance(v, bool) else v}" for k, v in echo.items() if k != "defaults_filled"]
    return parse_config("\n".join(lines))


def cmd_front_fit(args):
    text = open(args.profiles, encoding="utf-8").read()
    if not verify_hash(text):
        raise ValueError(f"{args.profiles}: content hash mismatch")
    echo, header, rows = read_csv(text)
    data = np.array(rows)
    col = header.index("rho" if args.rho else "colmax")
    times, xs = [], []
    for t in np.unique(data[:, 0]):
        sl = data[data[:, 0] == t]
        x = fronts.last_crossing(sl[:, 1], sl[:, col], args.level)
        if x is not None and t > 0:
            times.append(t)
            xs.append(x)
    source = fronts.FrontSource.RHO_LEVEL if args.rho else fronts.FrontSource.FIELD_LEVEL
    s = fronts.FrontSeries(np.array(times), np.array(xs), args.level, source)
    fit = fronts.fit_power_law(s, tuple(args.window) if args.window else None)

    cfg = _config_from_echo(echo)
    C = args.C if args.C is not None else fit_amplitude(cfg.initial_field(), args.a)
    p = SupersolParams(args.a, C, cfg.grid.theta_min)
    env = fronts.envelope_compare(s, p, args.level, cfg.grid.hx) if not args.rho else None
    payload = {
        "exponent": fit.exponent,
        "coefficient": fit.coefficient,
        "r_squared": fit.r_squared,
        "window": list(fit.window),
        "envelope_violations": None if env is None else env.violations,
        "envelope_worst_time": None if env is None else env.worst_time,
    }
    config = {"profiles_config": echo, "level": args.level, "rho": args.rho, "a": args.a, "C": C}
    doc = json_document(payload, config)
    out = output_dir(args.output_dir)
    write_text(out / "front_fit.json", doc)
    if args.svg:
        write_text(out / "front_fit.svg", emit_loglog_svg(s.times, s.positions, fit))
    sys.stdout.write(doc)
    return EXIT_OK


# --- acceptance --------------------------------------------------------------


def cmd_acceptance(args):
    only = {int(v) for v in args.only.split(",")} if args.only else None
    results = acceptance.run_all(only)
    for r in results:
        print(r.line(), flush=True)
    payload = {"results": [r._asdict() for r in results], "all_passed": all(r.passed for r in results)}
    write_text(output_dir(args.output_dir) / "acceptance.json", json_document(payload, {"only": args.only}))
    return EXIT_OK if payload["all_passed"] else EXIT_NUMERICAL


# --- parser --------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="canetoads", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output-dir", default=None, help="overrides $CANETOADS_OUTPUT_DIR")

    p = sub.add_parser("simulate", help="run the solver from a key = value config file")
    p.add_argument("config")
    p.add_argument("--fields", action="store_true", help="also write one CSV per saved slice")
    p.add_argument("--svg-levels", help="comma-separated levels for a contour SVG of the last slice")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hj-eval", help="evaluate Z, psi, theta_star and the level set on a grid")
    p.add_argument("--t", required=True, help="'1,2' or 'start:stop:count'")
    p.add_argument("--x", required=True)
    p.add_argument("--theta", required=True)
    p.set_defaults(func=cmd_hj_eval)

    p = sub.add_parser("verify-supersolution", help="random residual sweep of the super-solution")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--theta-lower", type=float, default=1.0)
    p.add_argument("--t-range", type=float, nargs=2, default=(1.0, 20.0))
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=float, default=0.5, help="level of the envelope series")
    p.add_argument("--svg", action="store_true", help="write the {tilde u = 1} level sets at t = 1, 2, 3")
    common(p)
    p.set_defaults(func=cmd_verify_supersolution)

    p = sub.add_parser("eigen", help="principal eigenpair on the moving disc")
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--H", type=float, default=1000.0, help="initial trait (theta_c for --traj fixed)")
    p.add_argument("--T", type=float, default=1000.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--traj", choices=("local", "nonlocal", "fixed"), default="local")
    p.add_argument("--t", type=float, default=None, help="defaults to T/2")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t-eps", type=float, default=1.0)
    p.add_argument("--scheme", choices=("upwind", "centered"), default="upwind")
    common(p)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("front-fit", help="front positions and power-law fit from profiles.csv")
    p.add_argument("profiles")
    p.add_argument("--level", type=float, default=0.1)
    p.add_argument("--rho", action="store_true", help="use the rho profile instead of the column max")
    p.add_argument("--window", type=float, nargs=2, default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--C", type=float, default=None, help="defaults to the fit to the run's initial data")
    p.add_argument("--svg", action="store_true")
    common(p)
    p.set_defaults(func=cmd_front_fit)

    p = sub.add_parser("acceptance", help="run the acceptance checks and print a pass/fail table")
    p.add_argument("--only", help="comma-separated criterion numbers")
    common(p)
    p.set_defaults(func=cmd_acceptance)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
