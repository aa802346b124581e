"""Command-line front end.

Every command writes CSV or JSON (to ``--out`` or stdout) preceded by a
header that records the tool version and the fully resolved configuration.
Model parameters come from ``--config`` (flat ``key = value``) and/or
flags; flags win.

Exit codes: 0 success, 1 usage or configuration error, 2 unsupported
isocline shape, 3 numerical failure (including failed verification checks).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .criteria import (ScanError, classify_roots, holling4_kappa_star, holling4_q,
                       predict_dynamics, scan_chi_roots, small_c_limits)
from .fast_orbit import DEFAULT_TOL as ORBIT_TOL
from .fast_orbit import OrbitIntegrationError
from .full_sim import SimulationError, equilibrium, find_cycles, simulate
from .model import ConfigError, Family, HumpClass, ModelSpec, classify_isocline, parse_config, ybar

EXIT_OK, EXIT_USAGE, EXIT_SHAPE, EXIT_NUMERIC = 0, 1, 2, 3

MODEL_KEYS = ("family", "r", "k", "c", "m", "a", "b")
EXTRA_KEYS = ("epsilon", "tol", "grid_n", "x0", "y0", "t_max")
SWEEP_PARAMS = ("r", "k", "c", "m", "a", "b", "kappa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# output formatting

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}" if math.isfinite(v) else "null"
    return str(v)


def to_json(obj, indent=0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    if hasattr(obj, "value") and isinstance(obj.value, str):  # enums
        return to_json(obj.value)
    return _fmt(obj)


def _csv_header(cmd, config, notes=()):
    lines = [f"# relaxosc {__version__} {cmd}"]
    lines += [f"# {k} = {_fmt(v)}" for k, v in config.items()]
    lines += [f"# note: {n}" for n in notes]
    return "\n".join(lines) + "\n"


def _json_doc(cmd, config, result):
    return to_json({"tool": "relaxosc", "version": __version__, "command": cmd,
                    "config": config, "result": result}) + "\n"


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# configuration

def _resolve(args, need_model=True):
    """Merge config file and flags; returns (spec or None, resolved dict)."""
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        parsed = parse_config(text, allowed_extra=EXTRA_KEYS)
        values.update({k: v for k, (v, _) in parsed.items()})
    for key in MODEL_KEYS + EXTRA_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    spec = None
    if need_model:
        missing = [k for k in ("family", "r", "k", "c") if k not in values]
        if missing:
            raise UsageError("missing required model parameter(s): "
                             + ", ".join("--" + k for k in missing))
        try:
            spec = ModelSpec(str(values["family"]), r=float(values["r"]), K=float(values["k"]),
                             c=float(values["c"]), m=float(values.get("m", 1.0)),
                             a=float(values.get("a", 1.0)), b=float(values.get("b", 0.0)))
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
    resolved = {}
    if spec is not None:
        resolved = {"family": spec.family.value, "r": spec.r, "k": spec.K, "c": spec.c,
                    "m": spec.m, "a": spec.a, "b": spec.b}
    for key in EXTRA_KEYS:
        if key in values:
            try:
                resolved[key] = int(values[key]) if key == "grid_n" else float(values[key])
            except ValueError:
                raise ConfigError(f"{key} must be numeric, got {values[key]!r}") from None
    return spec, resolved


def _need_eps(resolved):
    eps = resolved.get("epsilon")
    if eps is None:
        raise UsageError("--epsilon is required for this command")
    if not eps > 0:
        raise UsageError("--epsilon must be positive; use 'analyze' for the singular system")
    return eps


def _threads():
    raw = os.environ.get("RELAXOSC_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"RELAXOSC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"RELAXOSC_THREADS must be a positive integer, got {raw!r}")
    return n


# --------------------------------------------------------------------------
# commands

def cmd_analyze(args):
    spec, cfg = _resolve(args)
    tol = cfg.setdefault("tol", ORBIT_TOL)
    grid_n = cfg.setdefault("grid_n", 200)
    shape = classify_isocline(spec)
    if shape.hump_class is HumpClass.UNSUPPORTED:
        sys.stderr.write("unsupported isocline shape: "
                         f"{len(shape.extrema)} interior extrema of F\n")
        _emit(args, _json_doc("analyze", cfg, {"shape": shape.to_dict(),
                                               "verdict": None}))
        return EXIT_SHAPE
    report = predict_dynamics(spec, grid_n=grid_n, tol=tol)
    if args.polylines:
        os.makedirs(args.polylines, exist_ok=True)
        for i, cf in enumerate(report.configurations):
            path = os.path.join(args.polylines, f"gamma_{i}.csv")
            with open(path, "w") as fh:
                fh.write(_csv_header("analyze", dict(cfg, x0=cf.x0)) + cf.to_csv())
    _emit(args, _json_doc("analyze", cfg, report.to_dict()))
    return EXIT_OK


def cmd_chi_scan(args):
    spec, cfg = _resolve(args)
    tol = cfg.setdefault("tol", ORBIT_TOL)
    grid_n = cfg.setdefault("grid_n", 200)
    x_range = None
    if args.x_min is not None or args.x_max is not None:
        lo = args.x_min if args.x_min is not None else 1e-3 * spec.K
        hi = args.x_max if args.x_max is not None else spec.K * (1 - 1e-3)
        if not 0 < lo < hi < spec.K:
            raise UsageError(f"empty or invalid scan range ({lo}, {hi}); need 0 < x-min < x-max < K")
        x_range = (lo, hi)
        cfg.update(x_min=lo, x_max=hi)
    shape = classify_isocline(spec)
    notes = [f"isocline shape: {shape.hump_class.value}"] + list(shape.notes)
    scan = scan_chi_roots(spec, grid_n=grid_n, tol=tol, x_range=x_range)
    notes.append(f"sign changes: {len(scan.roots)}")
    notes += [f"suspected tangency near x0 = {_fmt(x)}" for x in scan.tangencies]
    _emit(args, _csv_header("chi-scan", cfg, notes) + scan.to_csv())
    return EXIT_OK


def cmd_simulate(args):
    spec, cfg = _resolve(args)
    eps = _need_eps(cfg)
    cfg.setdefault("tol", 1e-6)
    cfg.setdefault("x0", 0.5 * spec.K)
    cfg.setdefault("y0", ybar(spec))
    cfg.setdefault("t_max", 10.0 / eps)
    if not (cfg["x0"] > 0 and cfg["y0"] > 0 and cfg["t_max"] > 0):
        raise UsageError("--x0, --y0 and --t-max must be positive")
    traj = simulate(spec, eps, cfg["x0"], cfg["y0"], cfg["t_max"], tol=cfg["tol"])
    notes = list(traj.notes) + [f"termination: {traj.termination}",
                                f"isocline crossings: {len(traj.events)}"]
    _emit(args, traj.to_csv(_csv_header("simulate", cfg, notes)))
    return EXIT_OK


def cmd_cycles(args):
    spec, cfg = _resolve(args)
    eps = _need_eps(cfg)
    tol = cfg.setdefault("tol", 1e-6)
    grid_n = cfg.setdefault("grid_n", 200)
    report = predict_dynamics(spec, grid_n=grid_n)
    cycles = find_cycles(spec, eps, report, tol=tol)
    eq = equilibrium(spec, eps)
    result = {"verdict": report.verdict_label, "equilibrium": eq.to_dict(),
              "cycles": [c.to_dict() for c in cycles]}
    _emit(args, _json_doc("cycles", cfg, result))
    return EXIT_OK


def cmd_threshold_k4(args):
    _, cfg = _resolve(args, need_model=False)
    tol = cfg.setdefault("tol", 1e-10)
    if not 0 < tol < 1:
        raise UsageError("--tol must lie in (0, 1)")
    ks = holling4_kappa_star(tol=tol)
    _emit(args, _json_doc("threshold-k4", cfg, {"kappa_star": ks, "q_at_4": holling4_q(4.0)}))
    return EXIT_OK


def _sweep_point(job):
    """One sweep row; module level so it pickles into worker processes."""
    index, value, base, param, grid_n, eps = job
    if param == "kappa":
        spec = base.with_(K=math.sqrt(value / base.a))
    else:
        spec = base.with_(**{"K" if param == "k" else param: value})
    row = {"index": index, "param": param, "value": value}
    try:
        shape = classify_isocline(spec)
        scan = scan_chi_roots(spec, grid_n=grid_n)
        rep = classify_roots(spec, scan.roots, tol=ORBIT_TOL, shape=shape)
        two = ""
        if spec.family is Family.HOLLING4 and shape.hump_class is HumpClass.TWO_HUMP:
            two = small_c_limits(spec, shape).exists_two_roots
        row.update(shape=shape.hump_class.value, verdict=rep.verdict_label,
                   small_c_two_roots=two, n_roots=len(rep.roots),
                   roots=";".join(f"{_fmt(r.x0)}:{_fmt(r.lam)}" for r in rep.roots))
        if eps is not None:
            cycles = find_cycles(spec, eps, rep)
            row.update(n_cycles=len(cycles),
                       cycles=";".join(f"{_fmt(c.x_section)}:{c.stability.value}" for c in cycles))
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        row.update(shape="", verdict=f"error: {type(exc).__name__}", small_c_two_roots="",
                   n_roots="", roots="")
        if eps is not None:
            row.update(n_cycles="", cycles="")
    return row


def cmd_sweep(args):
    spec, cfg = _resolve(args)
    if args.num < 1:
        raise UsageError("sweep grid is empty: --num must be at least 1")
    if args.num > 1 and not args.stop > args.start:
        raise UsageError("sweep grid is empty: need --stop > --start")
    grid_n = cfg.setdefault("grid_n", 100)
    eps = cfg.get("epsilon") if args.cycles else None
    if args.cycles:
        _need_eps(cfg)
    cfg.update(param=args.param, start=args.start, stop=args.stop, num=args.num)
    values = np.linspace(args.start, args.stop, args.num)
    jobs = [(i, float(v), spec, args.param, grid_n, eps) for i, v in enumerate(values)]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r["index"])
    cols = ["index", "param", "value", "shape", "verdict", "small_c_two_roots", "n_roots",
            "roots"]
    if eps is not None:
        cols += ["n_cycles", "cycles"]
    lines = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in rows]
    _emit(args, _csv_header("sweep", cfg) + "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(args):
    from .verify import FAULTS, format_report, run_checks

    if args.fault is not None and args.fault not in FAULTS:
        raise UsageError(f"unknown fault {args.fault!r}; known: {', '.join(FAULTS)}")
    results = run_checks(filter=args.filter, fault=args.fault)
    if not results:
        raise UsageError(f"--filter {args.filter!r} matches no check")
    cfg = {"filter": args.filter or "", "fault": args.fault or ""}
    _emit(args, _csv_header("verify", cfg) + format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# --------------------------------------------------------------------------

def _model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")
    g.add_argument("--family", help="holling2, gen-holling4, holling4, ivlev or log")
    for key in ("r", "k", "c", "m", "a", "b"):
        g.add_argument(f"--{key}", type=float)


def _common_flags(p, eps=False, sim=False):
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    if eps:
        p.add_argument("--epsilon", type=float, help="predator death rate (> 0)")
    if sim:
        p.add_argument("--x0", type=float)
        p.add_argument("--y0", type=float)
        p.add_argument("--t-max", dest="t_max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaxosc",
                     description="Relaxation oscillations in Gause predator-prey systems.")
    parser.add_argument("--version", action="version", version=f"relaxosc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="classify the isocline and predict the cycles")
    _model_flags(p)
    _common_flags(p)
    p.add_argument("--polylines", metavar="DIR", help="also write one CSV per Gamma(x0)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("chi-scan", help="dump chi and lambda on a grid")
    _model_flags(p)
    _common_flags(p)
    p.add_argument("--x-min", dest="x_min", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.set_defaults(func=cmd_chi_scan)

    p = sub.add_parser("simulate", help="integrate the full system")
    _model_flags(p)
    _common_flags(p, eps=True, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cycles", help="locate the limit cycles of the full system")
    _model_flags(p)
    _common_flags(p, eps=True)
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("threshold-k4", help="Holling IV enrichment threshold kappa*")
    p.add_argument("--config")
    _common_flags(p)
    p.set_defaults(func=cmd_threshold_k4)

    p = sub.add_parser("sweep", help="predictions over a one-parameter grid")
    _model_flags(p)
    _common_flags(p, eps=True)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS,
                   help="swept parameter; 'kappa' sets K = sqrt(kappa / a)")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--num", type=int, required=True)
    p.add_argument("--cycles", action="store_true",
                   help="also run the full-system cycle search (needs --epsilon)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--filter", help="regex selecting check names")
    p.add_argument("--fault", help="inject a known defect (wrong-sign-lambda)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK
    except (ConfigError, UsageError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"relaxosc: error: {exc}\n")
        return EXIT_USAGE
    except (OrbitIntegrationError, SimulationError, ScanError, ArithmeticError) as exc:
        sys.stderr.write(f"relaxosc: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"relaxosc: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
