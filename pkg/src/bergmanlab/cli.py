"""Command line entry point ``bergmanlab``.

Usage::

    bergmanlab run --config exp.ini [--out DIR] [--only kernel,converge] [--seed N]
    bergmanlab kernel   --weight zero --z 0
    bergmanlab approx   --weight log_pole --gamma 1 --m 2 --z 0.5
    bergmanlab envelope --weight neg_abs_square
    bergmanlab converge --weight neg_abs_square
    bergmanlab check-invariants

With ``--config`` the ``kernel``, ``envelope`` and ``converge`` subcommands run
that single check of the experiment (``approx`` maps to ``converge``) and write
reports like ``run``. Without it they evaluate one catalog weight and print to
stdout: a single value when ``--z`` is given, otherwise a CSV over the grid.

Exit status: 0 when every invariant holds, 1 on violations or failed checks,
2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as config_mod
from .bergman import basis_degree, engine_for
from .demailly import Approximant, converge_run
from .domains import Domain, GridSpec, make_grid, point_columns, real_coords
from .envelope import psh_envelope_toric
from .exceptions import BergmanLabError, ConfigError
from .reports import csv_text, format_value, json_text
from .weights import CATALOG_NAMES, catalog

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_SUBCOMMAND_CHECK = {"kernel": "kernel", "approx": "converge", "envelope": "envelope",
                     "converge": "converge"}


def _parse_point(text: str, n: int) -> np.ndarray:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        coords = [complex(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"cannot parse point {text!r}", key="--z") from exc
    if len(coords) != n:
        raise ConfigError(f"point needs {n} coordinate(s)", key="--z")
    return np.asarray(coords, dtype=complex).reshape(1, n)


def _adhoc_weight(args):
    n = 1 if args.domain == "disk" else 2
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}", key="--param")
        key, value = item.split("=", 1)
        try:
            params[key] = config_mod._weight_param(args.weight, key, value)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key) from exc
    if args.gamma is not None:
        params["gamma"] = args.gamma
    domain = Domain.disk(args.radius) if n == 1 else Domain.polydisk(args.radius)
    return catalog(args.weight, n=n, radius=args.radius, **params), domain


def _adhoc_points(args, domain):
    if args.z is not None:
        return _parse_point(args.z, domain.complex_dim), True
    spec = GridSpec(args.grid, args.points, args.margin)
    return make_grid(domain, spec), False


def _print_values(points, values, single, name="value"):
    if single:
        print(format_value(float(values[0])))
        return
    header = point_columns(points.shape[1]) + [name]
    rows = ([*c, v] for c, v in zip(real_coords(points), values))
    sys.stdout.write(csv_text(header, rows))


def _cmd_kernel(args) -> int:
    w, domain = _adhoc_weight(args)
    pts, single = _adhoc_points(args, domain)
    eng = engine_for(w, args.m, basis_degree(args.m, w.gamma_max, w.bound), args.quad_tol,
                     radius=domain.radius)
    k, _ = eng.kernel(pts)
    _print_values(pts, k, single, "K")
    return EXIT_OK


def _cmd_approx(args) -> int:
    w, domain = _adhoc_weight(args)
    pts, single = _adhoc_points(args, domain)
    _print_values(pts, Approximant(w, args.m, quad_tol=args.quad_tol)(pts), single, "V_m")
    return EXIT_OK


def _cmd_envelope(args) -> int:
    w, domain = _adhoc_weight(args)
    pts, single = _adhoc_points(args, domain)
    env = psh_envelope_toric(w, domain=domain, extra_points=pts)
    _print_values(pts, env(pts), single)
    if not single:
        sys.stderr.write(json_text(env.summary()))
    return EXIT_OK if env.monotone_fixpoint else EXIT_FAIL


def _cmd_converge(args) -> int:
    w, domain = _adhoc_weight(args)
    pts, _ = _adhoc_points(args, domain)
    env = psh_envelope_toric(w, domain=domain, extra_points=pts) if w.toric else None
    schedule = tuple(int(m) for m in args.m_schedule.split(","))
    rep = converge_run(w, schedule, pts, domain, quad_tol=args.quad_tol, envelope=env)
    sys.stdout.write(csv_text(rep.header, rep.csv_rows()))
    keys = ("weight", "max_error_at_mmax", "rate_exponent", "C1_estimate", "bounds_violations")
    sys.stderr.write(json_text({"schema_version": 1, **{k: rep.summary[k] for k in keys}}))
    return EXIT_OK if rep.summary["bounds_violations"] == 0 else EXIT_FAIL


def _cmd_run(args, only=None) -> int:
    from .runner import run

    if args.config is None:
        raise ConfigError("--config is required", key="--config")
    cfg = config_mod.load(args.config).with_overrides(out=args.out, only=only or args.only,
                                                      seed=args.seed)
    status, summary = run(cfg)
    for name, res in summary["checks"].items():
        mark = "PASS" if res["passed"] else "FAIL"
        print(f"{mark:4}  {name:9} rows={res['rows']:<6d} violations={res['violations']:<4d} "
              f"failures={len(res['failures'])}")
        for msg in res["failures"]:
            print(f"      {msg}")
    if summary["failed_checks"]:
        print("failed checks: " + ", ".join(summary["failed_checks"]))
    print(f"reports written to {cfg.output}")
    return status


def _cmd_check_invariants(args) -> int:
    from .invariants import run_invariants

    results = run_invariants(seed=args.seed if args.seed is not None else 42)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL':4}  {r.name:{width}}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} invariants hold")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bergmanlab",
                                     description="Weighted Bergman kernels and Demailly approximants.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="experiment INI file")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        p.add_argument("--only", metavar="CHECK[,CHECK...]",
                       help=f"subset of {','.join(config_mod.CHECKS)}")
        p.add_argument("--seed", type=int, metavar="N", help="seed for randomized checks")

    def adhoc(p, m_default=1):
        p.add_argument("--weight", choices=CATALOG_NAMES, help="catalog weight (ad-hoc mode)")
        p.add_argument("--gamma", type=float, help="log_pole coefficient")
        p.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="extra catalog parameter (repeatable)")
        p.add_argument("--domain", choices=("disk", "polydisk"), default="disk")
        p.add_argument("--radius", type=float, default=1.0)
        p.add_argument("--m", type=int, default=m_default)
        p.add_argument("--z", help="evaluation point, e.g. 0.5 or 0.5+0.1j or 0.5,0.2")
        p.add_argument("--grid", choices=("radial", "cartesian", "log_radial"), default="radial")
        p.add_argument("--points", type=int, default=10, help="grid points per axis")
        p.add_argument("--margin", type=float, default=0.05)
        p.add_argument("--quad-tol", type=float, default=1e-10)

    p = sub.add_parser("run", help="run the checks of an experiment config")
    common(p)
    for name, text in (("kernel", "weighted Bergman kernel K_{mV}"),
                       ("approx", "Demailly approximant V_m"),
                       ("envelope", "psh envelope (toric oracle)"),
                       ("converge", "convergence report over an m schedule")):
        p = sub.add_parser(name, help=text)
        common(p)
        adhoc(p)
        if name == "converge":
            p.add_argument("--m-schedule", default="1,2,4,8,16,32,64")
    p = sub.add_parser("check-invariants", help="run the property suite and print a table")
    p.add_argument("--seed", type=int, metavar="N")
    return parser


_ADHOC = {"kernel": _cmd_kernel, "approx": _cmd_approx, "envelope": _cmd_envelope,
          "converge": _cmd_converge}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check-invariants":
            return _cmd_check_invariants(args)
        if args.config is not None:
            return _cmd_run(args, only=_SUBCOMMAND_CHECK[args.command])
        if args.weight is None:
            parser.error(f"{args.command} needs --config or --weight")
        return _ADHOC[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BergmanLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL if not isinstance(exc, KeyError) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
