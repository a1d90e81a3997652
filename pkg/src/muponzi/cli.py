"""Command-line front end.

Every command prints a JSON certificate (``schema: 1``) to stdout or
``--out``. Exit codes: 0 pass, 1 verification failure, 2 numeric or
configuration error. ``MUPONZI_THREADS`` sets the number of worker threads
used for grid evaluation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from . import hyperbolic as hyp
from .coarse_core import ExplicitPairs, MetricRadius, disk_window, interval_window
from .discrete_chains import (
    SparseChain1,
    box_window,
    boundary,
    check_effective,
    flux_obstruction,
    free_group_scheme,
    radius_schedule,
    read_chain,
)
from .groups import FreeGroup, parse_group
from .measure_chains import (
    boundary_closed_form,
    case1_value,
    case2_value,
    closed_form_limit,
    counting_on,
    epsilon_bound,
    hyperbolic_area,
    hyperbolic_scheme_chain,
    arctan_tail_constant,
    verify_mu_ps,
)
from .transport import (
    CoverageError,
    NotConstantOnS,
    build_tiling,
    greedy_net,
    hyperbolic_lift_fixture,
    mu_ps_to_ponzi_disk,
    ponzi_to_mu_ps,
)

SCHEMA = 1
DEFAULT_SEED = 20240601
EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

CSV_HELP = "CSV columns: r, angle, closed_form, quadrature, residual (sorted by r, then angle)"


class ConfigError(ValueError):
    pass


def _threads() -> int:
    raw = os.environ.get("MUPONZI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"MUPONZI_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("MUPONZI_THREADS must be >= 1")
    return n


def _positive(name, v):
    if v is None or not (v > 0) or not math.isfinite(v):
        raise ConfigError(f"--{name.replace('_', '-')} must be positive and finite, got {v}")


def _num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def _polar(z) -> dict:
    z = complex(z)
    return {"r": float(hyp.radius_from_origin(z)), "angle": math.atan2(z.imag, z.real) % (2 * math.pi)}


# ---------------------------------------------------------------------------
# commands


def cmd_verify_hyperbolic(args) -> dict:
    spec = hyp.QuadratureSpec(method=args.method, abs_tol=args.quad_tol, seed=args.seed)
    if args.ball_radius is not None:
        return _ball_self_test(args, spec)
    for name in ("r_max", "r_step", "cf_step", "cf_r_max"):
        _positive(name, getattr(args, name))
    if args.angles < 1:
        raise ConfigError("--angles must be >= 1")

    # closed-form path on a fine radial grid
    eps = epsilon_bound()
    rs = np.round(np.arange(0.0, args.cf_r_max + 1e-9, args.cf_step), 12)
    cf = boundary_closed_form(rs)
    i_cf = int(np.argmin(cf))
    tail = np.round(np.arange(0.5, 20.0 + 1e-9, 0.01), 12)
    tail_vals = boundary_closed_form(tail[tail > 0.5])
    nonincreasing = bool(np.all(np.diff(tail_vals) <= 1e-12))
    above_limit = bool(np.all(tail_vals >= closed_form_limit() - 1e-9))
    case1 = boundary_closed_form(rs[rs <= 0.5])
    case1_decreasing = bool(np.all(np.diff(case1) < 0))
    continuity = abs(case1_value(0.5) - case2_value(0.5))

    # quadrature path on the 2-D grid
    window_R = args.r_max + 1.0
    c = hyperbolic_scheme_chain(disk_window(window_R))
    mu = hyperbolic_area(c.support_entourage.window)
    radii = np.round(np.arange(0.0, args.r_max + 1e-9, args.r_step), 12)
    grid, coords = [], []
    for r in radii:
        for k in range(args.angles if r > 0 else 1):
            th = 2 * math.pi * k / args.angles
            grid.append(complex(hyp.polar_point(float(r), th)))
            coords.append((float(r), th))
    cert = verify_mu_ps(c, mu, grid, MetricRadius(1.0, mu.window), spec, epsilon=eps,
                        closed_form=boundary_closed_form, residual_tol=args.residual_tol,
                        workers=_threads())
    # rotation invariance: spread of the quadrature values at each radius
    spread = 0.0
    by_r: dict = {}
    for (r, _), v in zip(coords, cert.values):
        by_r.setdefault(r, []).append(v)
    for vals in by_r.values():
        spread = max(spread, max(vals) - min(vals))
    rot_tol = 2 * args.residual_tol

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "angle", "closed_form", "quadrature", "residual"])
            for (r, th), v, res in sorted(zip(coords, cert.values, cert.residuals)):
                w.writerow([repr(r), repr(th), repr(float(boundary_closed_form(r))), repr(v), repr(res)])

    passed = (cert.passed and float(cf[i_cf]) >= eps and nonincreasing and above_limit
              and case1_decreasing and continuity <= 1e-9 and spread <= rot_tol)
    return {
        "pass": passed,
        "metrics": {
            "epsilon": eps,
            "epsilon_terms": {"case1_at_half": float(boundary_closed_form(0.5)),
                              "tail_constant": arctan_tail_constant()},
            "closed_form_limit": closed_form_limit(),
            "closed_form_min": float(cf[i_cf]),
            "closed_form_grid_points": len(rs),
            "case2_nonincreasing": nonincreasing,
            "case2_above_limit": above_limit,
            "case1_decreasing": case1_decreasing,
            "case_continuity_gap": continuity,
            "quadrature": cert.as_dict(),
            "rotation_spread": spread,
            "rotation_tol": rot_tol,
        },
        "witnesses": {"closed_form_argmin_r": float(rs[i_cf]), "quadrature_argmin": _polar(cert.argmin),
                      "witness_relation": repr(cert.witness)},
    }


def _ball_self_test(args, spec) -> dict:
    R = args.ball_radius
    _positive("ball_radius", R)
    exact = hyp.ball_volume(R)
    expect = exact if args.expect is None else args.expect
    rows = []
    worst = 0.0
    for r in args.centers:
        center = hyp.polar_point(r, 0.0)
        q = hyp.area_integral(lambda w, c=center: hyp.distance(c, w) <= R, center, R, spec)
        dev = abs(q.value - expect)
        worst = max(worst, dev)
        rows.append({"center_r": r, "quadrature": q.value, "error_estimate": q.error, "deviation": dev})
    return {
        "pass": worst <= args.expect_tol,
        "metrics": {"closed_form": exact, "expected": expect, "expect_tol": args.expect_tol,
                    "max_deviation": worst, "centers": rows},
        "witnesses": {},
    }


def cmd_verify_tree(args) -> dict:
    if args.free < 2:
        raise ConfigError(f"--free {args.free}: free(1) = Z is amenable and has no Ponzi scheme; use k >= 2")
    if args.radius < 2:
        raise ConfigError("--radius must be >= 2 so that the window has an interior")
    theta = free_group_scheme(args.free, args.radius)
    win = theta.window
    bd = boundary(theta)
    # the outermost sphere has no children inside the window, so it is untrusted
    trusted = win.interior(1)
    identity_val = bd[""]
    others = sorted({bd[s] for s in trusted if s})
    cert = check_effective(bd, radius_schedule(win, args.radius, 1.0), win, trusted_margin=1)
    expect = 2 * args.free - 2
    passed = cert.passed and identity_val == 2 * args.free and others == [expect]
    return {
        "pass": passed,
        "metrics": {"group": f"free({args.free})", "window_points": len(win), "trusted_points": len(trusted),
                    "identity_boundary": identity_val, "interior_boundary_values": others,
                    "expected_interior_boundary": expect, "certificate": cert.as_dict()},
        "witnesses": {"witness_radius": _num(cert.witness_radius), "argmin": FreeGroup(args.free).format(cert.argmin)
                      if cert.argmin is not None else None},
    }


def _parse_S(text: str, lo: int, hi: int, margin: int) -> list[int]:
    t = text.strip().replace(" ", "")
    if t.lower().endswith("z"):
        k = int(t[:-1] or 1)
        if k <= 0:
            raise ConfigError("--S kZ needs k >= 1")
        return [s for s in range(lo + margin, hi - margin + 1) if s % k == 0]
    return sorted(int(a) for a in t.split(","))


def cmd_convert(args) -> dict:
    if args.direction == "mu-to-ponzi":
        return _convert_mu_to_ponzi(args)
    return _convert_ponzi_to_mu(args)


def _convert_mu_to_ponzi(args) -> dict:
    if args.space != "hyperbolic":
        raise ConfigError("mu-to-ponzi is implemented for --space hyperbolic")
    for name in ("net", "window", "cell_size", "quad_tol"):
        _positive(name, getattr(args, name))
    R, delta = args.window, args.net
    if R < 1 + 2 * delta:
        raise ConfigError("--window must exceed 1 + 2 * --net to leave a trusted interior")
    spec = hyp.QuadratureSpec(abs_tol=args.quad_tol, seed=args.seed)
    eps = epsilon_bound()

    # input certificate: the measure scheme on a coarse grid inside the window
    c = hyperbolic_scheme_chain(disk_window(R))
    mu = hyperbolic_area(c.support_entourage.window)
    grid = [complex(hyp.polar_point(r, 2 * math.pi * k / 8))
            for r in np.arange(0.0, R - 1.0 + 1e-9, 0.5) for k in range(8 if r > 0 else 1)]
    cert_in = verify_mu_ps(c, mu, grid, MetricRadius(1.0, mu.window), spec, epsilon=eps,
                           closed_form=boundary_closed_form, workers=_threads())

    net = greedy_net(R, delta)
    tiling = build_tiling(net, MetricRadius(delta, disk_window(R)))
    out = mu_ps_to_ponzi_disk(tiling, R, eps, cell_size=args.cell_size, spec=spec,
                              tile_samples=args.tile_samples)
    passed = cert_in.passed and out.certificate.passed and (out.margin or 0) > 0
    if out.tile_check is not None:
        passed = passed and out.tile_check.passed
    return {
        "pass": bool(passed),
        "metrics": {
            "input_certificate": cert_in.as_dict(),
            "net_points": len(net),
            "net_delta": delta,
            # each tile lies in a delta-ball, so mu(p^-1{l}) <= mu(B_delta)
            "pushforward_constant_bound": hyp.ball_volume(delta),
            "output": out.as_dict(),
        },
        "witnesses": {"witness_radius": _num(out.certificate.witness_radius),
                      "argmin": _polar(out.certificate.argmin) if out.certificate.argmin is not None else None},
    }


def _convert_ponzi_to_mu(args) -> dict:
    spec = hyp.QuadratureSpec(abs_tol=args.quad_tol, seed=args.seed)
    if args.space in ("Z", "z"):
        lo, hi = args.lo, args.hi
        win = interval_window(lo, hi)
        r_e = int(1 if args.E_radius is None else args.E_radius)
        S = _parse_S(args.S, lo, hi, r_e)
        if args.chain:
            with open(args.chain) as fh:
                entries = read_chain(fh)
        else:
            entries = {(0, 3): 1}
        theta = SparseChain1(entries, None, frozenset(S) | {p for k in entries for p in k})
        if args.E_varying:
            # radius E-radius at the first point of S and E-radius + 1 elsewhere
            pairs = {(s, y) for i, s in enumerate(S) for y in win.ball(s, r_e if i == 0 else r_e + 1)}
            e = ExplicitPairs(frozenset(pairs), win)
        else:
            e = MetricRadius(r_e, win)
        mu = counting_on(list(win.points), win)
        res = ponzi_to_mu_ps(theta, e, mu, spec=spec)
        return {"pass": res.passed, "metrics": {"space": "Z", "S": S, **res.as_dict()}, "witnesses": {}}
    if args.space == "free":
        theta = free_group_scheme(args.free, args.radius)
        win = theta.window
        cert = check_effective(boundary(theta), radius_schedule(win, args.radius, 1.0), win, trusted_margin=1)
        mu = counting_on(list(win.points), win)
        res = ponzi_to_mu_ps(theta, MetricRadius(0, win), mu, spec=spec, theta_certificate=cert,
                             trusted_margin=1)
        return {"pass": res.passed and cert.passed,
                "metrics": {"space": f"free({args.free})", "input_certificate": cert.as_dict(), **res.as_dict()},
                "witnesses": {"witness": repr(res.witness)}}
    if args.space == "hyperbolic":
        theta, e, mu, samples = hyperbolic_lift_fixture(0.5 if args.E_radius is None else args.E_radius,
                                                          args.samples, args.seed)
        res = ponzi_to_mu_ps(theta, e, mu, samples=samples, spec=spec)
        return {"pass": res.passed, "metrics": {"space": "hyperbolic", **res.as_dict(),
                                                "residual_tol": 10 * spec.abs_tol}, "witnesses": {}}
    raise ConfigError(f"unknown --space {args.space!r}")


def cmd_flux(args) -> dict:
    if args.R < 1:
        raise ConfigError("--R must be >= 1")
    if args.max_len < 1:
        raise ConfigError("--max-len must be >= 1")
    pad = args.R + 1
    L = args.max_len
    if args.dim == 1:
        win = interval_window(1 - pad, L + pad)
        windows = [(1, n) for n in range(1, L + 1)]
    else:
        if L > 40:
            raise ConfigError("--max-len is capped at 40 for dim 2")
        win = box_window((1 - pad,) * args.dim, (L + pad,) * args.dim)
        windows = [((1,) * args.dim, (n,) * args.dim) for n in range(1, L + 1)]
    if args.chain:
        group = None if args.dim == 1 else parse_group(f"Z{args.dim}")
        with open(args.chain) as fh:
            entries = read_chain(fh, group)
    elif args.random:
        entries = _random_flux_chain(win, args.R, args.seed)
    elif args.empty:
        entries = {}
    else:
        # translation flow x -> x + e_1
        step = 1 if args.dim == 1 else (1,) + (0,) * (args.dim - 1)
        entries = {}
        for x in win.points:
            y = x + 1 if args.dim == 1 else tuple(a + b for a, b in zip(x, step))
            if y in win:
                entries[(x, y)] = 1
    theta = SparseChain1(entries, MetricRadius(args.R, win))
    theta.validate()
    rep = flux_obstruction(theta, windows, norm_bound=args.norm_bound)
    return {
        "pass": rep.holds,
        "metrics": {"dim": args.dim, "R": args.R, "sup_norm": _num(rep.sup_norm), "oriented": rep.oriented,
                    "norm_bound": args.norm_bound, "rows": [r.as_dict() for r in rep.rows]},
        "witnesses": {"refutations": rep.refutations()},
    }


def _random_flux_chain(win, R, seed):
    rng = np.random.default_rng(seed)
    pts = list(win.points)
    entries = {}
    for x in pts:
        for y in win.ball(x, R):
            if y != x and (x if isinstance(x, tuple) else (x,)) < (y if isinstance(y, tuple) else (y,)):
                v = int(rng.integers(-1, 2))
                if v > 0:
                    entries[(x, y)] = 1
                elif v < 0:
                    entries[(y, x)] = 1
    return entries


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="muponzi", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"muponzi {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON certificate here instead of stdout")
        sp.add_argument("--config", help="JSON file of option defaults (flags override it)")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    h = sub.add_parser("verify-hyperbolic", help="boundary of the hyperbolic scheme vs. epsilon",
                       epilog=CSV_HELP)
    common(h)
    h.add_argument("--r-max", type=float, default=4.0)
    h.add_argument("--r-step", type=float, default=0.25)
    h.add_argument("--angles", type=int, default=16)
    h.add_argument("--cf-step", type=float, default=0.01, help="closed-form grid step")
    h.add_argument("--cf-r-max", type=float, default=10.0)
    h.add_argument("--quad-tol", type=float, default=1e-5)
    h.add_argument("--residual-tol", type=float, default=1e-4)
    h.add_argument("--method", choices=["adaptive_polar", "monte_carlo"], default="adaptive_polar")
    h.add_argument("--csv", help="write per-point rows here")
    h.add_argument("--ball-radius", type=float, help="self-test: quadrature of a ball's area")
    h.add_argument("--expect", type=float, help="expected ball area (default: 2 pi (cosh R - 1))")
    h.add_argument("--expect-tol", type=float, default=1e-6)
    h.add_argument("--centers", type=float, nargs="+", default=[0.0, 0.3, 0.8, 1.5],
                   help="geodesic radii of the ball centers in the self-test")
    h.set_defaults(func=cmd_verify_hyperbolic)

    t = sub.add_parser("verify-tree", help="Ponzi scheme on a ball of the free group")
    common(t)
    t.add_argument("--free", type=int, default=2)
    t.add_argument("--radius", type=int, default=8)
    t.set_defaults(func=cmd_verify_tree)

    c = sub.add_parser("convert", help="convert between measure and discrete Ponzi schemes")
    common(c)
    c.add_argument("--direction", choices=["mu-to-ponzi", "ponzi-to-mu"], required=True)
    c.add_argument("--space", default="hyperbolic", help="hyperbolic, Z or free")
    c.add_argument("--net", type=float, default=0.4, help="net radius delta")
    c.add_argument("--window", type=float, default=4.0, help="disk window radius")
    c.add_argument("--cell-size", type=float, default=0.1)
    c.add_argument("--tile-samples", type=int, default=30)
    c.add_argument("--quad-tol", type=float, default=1e-5)
    c.add_argument("--S", default="3Z", help="kZ or a comma list")
    c.add_argument("--E-radius", type=float, default=None,
                   help="radius of E (default 1 on Z, 0.5 on the hyperbolic fixture)")
    c.add_argument("--E-varying", action="store_true", help="use a non-constant E fixture")
    c.add_argument("--lo", type=int, default=-5)
    c.add_argument("--hi", type=int, default=10)
    c.add_argument("--chain", help="tab-separated chain file")
    c.add_argument("--free", type=int, default=2)
    c.add_argument("--radius", type=int, default=6)
    c.add_argument("--samples", type=int, default=50)
    c.set_defaults(func=cmd_convert)

    f = sub.add_parser("flux", help="flux obstruction over nested windows in Z^n")
    common(f)
    f.add_argument("--dim", type=int, choices=[1, 2], default=1)
    f.add_argument("--R", type=int, default=1)
    f.add_argument("--max-len", type=int, default=100)
    f.add_argument("--norm-bound", type=float, default=1.0)
    g = f.add_mutually_exclusive_group()
    g.add_argument("--chain", help="tab-separated chain file")
    g.add_argument("--random", action="store_true", help="random oriented unit chain")
    g.add_argument("--empty", action="store_true")
    f.set_defaults(func=cmd_flux)
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _config_echo(args) -> dict:
    return {k: _num(v) for k, v in sorted(vars(args).items())
            if k not in ("func", "out", "config") and not callable(v)}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _parse(argv)
    except ConfigError as exc:
        print(f"muponzi: {exc}", file=sys.stderr)
        return EXIT_ERROR
    t0 = time.perf_counter()
    try:
        body = args.func(args)
    except (ConfigError, hyp.GeometryError, hyp.QuadratureError, ArithmeticError, CoverageError,
            OSError, ValueError) as exc:
        if isinstance(exc, NotConstantOnS):
            body = {"pass": False, "metrics": {"failed_check": "constant_on_S_check", "message": str(exc)},
                    "witnesses": {"worst_s": _num(exc.worst)}}
        else:
            print(f"muponzi: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    cert = {
        "schema": SCHEMA,
        "command": args.command,
        "config": _config_echo(args),
        "pass": bool(body["pass"]),
        "metrics": _num(body["metrics"]),
        "witnesses": _num(body["witnesses"]),
        "timing": {"seconds": round(time.perf_counter() - t0, 3)},
    }
    text = json.dumps(cert, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_PASS if cert["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
