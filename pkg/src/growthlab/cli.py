"""Command-line front end.

Every subcommand writes one JSON report ``{"version", "command", "cases", "pass"}``
to stdout or ``--out``. Exit status is 0 when every case passes, 1 when a
check fails and 2 on bad arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import identity, kasteleyn, kernel, stationary
from .dynamics import SimConfig, simulate, trajectory, write_jsonl
from .kernel import QuadConfig, QuadratureError
from .stationary import Slope, Weights


class UsageError(Exception):
    pass


def _workers(n_cases: int) -> int:
    raw = os.environ.get("GROWTHLAB_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"GROWTHLAB_THREADS must be an integer, got {raw!r}")
    return max(1, min(cap, n_cases))


def _map(fn, items):
    """Ordered map, threaded up to GROWTHLAB_THREADS workers."""
    items = list(items)
    workers = _workers(len(items))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _parse_slope(text):
    try:
        return Slope.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad slope {text!r}: {exc}")


def _parse_triple(text, what):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad {what} {text!r}")
    if len(vals) != 3:
        raise UsageError(f"{what} needs three comma-separated numbers, got {text!r}")
    return vals


def _quad(args) -> QuadConfig:
    try:
        return QuadConfig(rel_tol=args.rel_tol, max_nodes=args.max_nodes, r0=args.r0, r1=args.r1)
    except ValueError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_speed(args):
    if (args.slope is None) == (args.weights is None):
        raise UsageError("give exactly one of --slope or --weights")
    if args.slope is not None:
        s = _parse_slope(args.slope)
    else:
        try:
            s = stationary.weights_to_slope(Weights(*_parse_triple(args.weights, "weights")))
        except ValueError as exc:
            raise UsageError(str(exc))
    om = stationary.slope_to_omega(s)
    case = {
        "slope": [s.p_a, s.p_b, s.p_c],
        "omega": {"re": om.re, "im": om.im, "frozen": om.frozen},
        "v": stationary.speed(s),
        "pass": True,
    }
    if args.p is not None or args.q is not None:
        p = 1.0 if args.p is None else args.p
        q = 0.0 if args.q is None else args.q
        try:
            case["v_asymmetric"] = stationary.asymmetric_speed(s, p, q)
        except ValueError as exc:
            raise UsageError(str(exc))
    return [case]


def cmd_kernel(args):
    q = _quad(args)
    val, nodes = kernel.eval_K((args.x1, args.n1, args.t1), (args.x2, args.n2, args.t2), q, with_nodes=True)
    return [{
        "point1": [args.x1, args.n1, args.t1],
        "point2": [args.x2, args.n2, args.t2],
        "re": val.real,
        "im": val.imag,
        "nodes_used": nodes,
        "pass": abs(val.imag) < q.real_tol * max(1.0, abs(val.real)),
    }]


def cmd_verify_finite(args):
    q = _quad(args)
    for n in args.n:
        if n < 1:
            raise UsageError("--n values must be >= 1")
    grid = [(x, n, t) for t in args.t for n in args.n for x in args.x]

    def run(p):
        x, n, t = p
        rep = identity.check_theorem_finite(x, n, t, q, tol=args.tol)
        case = rep.to_dict()
        case["pass"] = case.pop("passed")
        case["j"], case["v"] = case.pop("lhs"), case.pop("rhs")
        return case

    return _map(run, grid)


def cmd_verify_stationary(args):
    q = _quad(args)
    slopes = [_parse_slope(s) for s in args.slope]
    for s in slopes:
        if not s.is_rough:
            raise UsageError(f"slope {s} is frozen; the stationary check needs all proportions > 0")

    def run(s):
        rep = identity.check_theorem_stationary(s, q, tol=args.tol, series_tol=args.series_tol)
        case = rep.to_dict()
        case["pass"] = case.pop("passed")
        return case

    return _map(run, slopes)


def _box_graph(args):
    g = kasteleyn.build_boxed_plane_partition(args.box)
    if args.weights is not None:
        a, b, c = _parse_triple(args.weights, "weights")
        if min(a, b, c) <= 0:
            raise UsageError("weights must be positive")
        return kasteleyn.with_abc_weights(g, a, b, c), (a, b, c)
    if args.seed is not None:
        return kasteleyn.with_random_weights(g, args.seed), None
    return g, None


def _link_points(g, args, N):
    if args.x is not None or args.n is not None:
        if args.x is None or args.n is None:
            raise UsageError("--x and --n go together")
        pts = [(args.x, args.n)]
    else:
        pts = [(b.x, b.n) for b in g.blacks if kasteleyn.admissible_depth(g, b.x, b.n) >= max(N, 0)]
    return pts


def cmd_kasteleyn(args):
    if args.box < 1:
        raise UsageError("--box must be >= 1")
    if args.check == "probe":
        if args.box < 5:
            raise UsageError("the bulk probe needs --box >= 5")
        rep = kasteleyn.bulk_probe(args.box).to_dict()
        rep["tolerance"] = args.probe_tol
        rep["pass"] = rep["speed_error"] < args.probe_tol and rep["density_error"] < args.probe_tol
        return [rep]
    g, abc = _box_graph(args)
    if args.check == "count":
        z = kasteleyn.partition_function(g)
        case = {"box": args.box, "Z": z, "seed": args.seed, "weights": abc}
        if args.seed is None and abc is None:
            exact = kasteleyn.macmahon(args.box, args.box, args.box)
            case["macmahon"] = exact
            case["pass"] = abs(z - exact) <= 1e-9 * exact
        else:
            case["pass"] = z > 0
        return [case]
    if args.check in ("recursion", "corollary"):
        if args.check == "corollary" and abc is None:
            raise UsageError("--check corollary needs --weights a,b,c")
        depths = [args.N] if args.N is not None else None
        cases = []
        for x, n in _link_points(g, args, args.N or 0):
            top = kasteleyn.admissible_depth(g, x, n)
            if top < 0:
                raise UsageError(f"no admissible depth at ({x}, {n})")
            for N in depths or range(top + 1):
                try:
                    if args.check == "recursion":
                        rep = kasteleyn.recursion_identity(g, x, n, N, tol=args.tol)
                    else:
                        rep = kasteleyn.corollary_abc_check(g, x, n, N, abc, tol=args.tol)
                except ValueError as exc:
                    raise UsageError(str(exc))
                case = rep.to_dict()
                case["pass"] = case.pop("passed")
                case["seed"] = args.seed
                cases.append(case)
        if not cases:
            raise UsageError(f"no point of the size-{args.box} box admits depth N={args.N}")
        return cases
    raise UsageError(f"unknown check {args.check!r}")


def cmd_simulate(args):
    try:
        cfg = SimConfig(N=args.N, t_end=args.t_end, seed=args.seed, replicas=args.replicas)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.snapshots:
        times = sorted(args.snapshots)
        if times[0] < 0 or times[-1] > cfg.t_end:
            raise UsageError("snapshot times must lie in [0, t_end]")
        if args.jsonl is None:
            raise UsageError("--snapshots needs --jsonl PATH")
        with open(args.jsonl, "w") as fh:
            for r in range(cfg.replicas):
                write_jsonl(trajectory(cfg, times, replica=r), fh)

    def run(r):
        p, log = simulate(cfg, replica=r, check=True)
        return {
            "replica": r,
            "levels": [list(row) for row in p.levels],
            "events": len(log),
            "moves": sum(1 for *_, c in log if c),
            "pass": p.is_interlacing(),
        }

    return _map(run, range(cfg.replicas))


# ---------------------------------------------------------------------------


def _add_quad(p):
    d = kernel.DEFAULT_QUAD
    p.add_argument("--rel-tol", type=float, default=d.rel_tol, help="quadrature convergence tolerance")
    p.add_argument("--max-nodes", type=int, default=d.max_nodes, help="node cap for contour integrals")
    p.add_argument("--r0", type=float, default=d.r0, help="radius of the contour around 0")
    p.add_argument("--r1", type=float, default=d.r1, help="radius of the contour around 1")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="growthlab", description="Interface growth on interlacing particles: kernels, identities, dimers.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.set_defaults(func=fn)
        return p

    p = add("simulate", cmd_simulate, "run the dynamics from the packed start")
    p.add_argument("--N", type=int, required=True, help="number of levels")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--snapshots", type=float, nargs="+", help="times at which to record the pattern")
    p.add_argument("--jsonl", help="file for snapshot patterns, one JSON object per line")

    p = add("kernel", cmd_kernel, "evaluate one finite-time kernel entry")
    for name in ("x1", "n1", "x2", "n2"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--t1", type=float, default=0.0)
    p.add_argument("--t2", type=float, default=0.0)
    _add_quad(p)

    p = add("verify-finite", cmd_verify_finite, "compare the current with the speed series")
    p.add_argument("--x", type=int, nargs="+", required=True)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--tol", type=float, default=None, help="default 100 * rel-tol")
    _add_quad(p)

    p = add("verify-stationary", cmd_verify_stationary, "three-route check of the stationary speed")
    p.add_argument("--slope", action="append", required=True, help="p_a,p_b,p_c; repeatable")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--series-tol", type=float, default=1e-10)
    _add_quad(p)

    p = add("kasteleyn", cmd_kasteleyn, "dimer identities on the boxed plane partition")
    p.add_argument("--box", type=int, required=True, help="box size n")
    p.add_argument("--check", choices=["count", "recursion", "corollary", "probe"], default="count")
    p.add_argument("--N", type=int, default=None, help="recursion depth; all admissible depths if omitted")
    p.add_argument("--x", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="random edge weights in [0.5, 2] from this seed")
    p.add_argument("--weights", default=None, help="lozenge weights a,b,c")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--probe-tol", type=float, default=0.05)

    p = add("speed", cmd_speed, "growth speed of a stationary slope")
    p.add_argument("--slope", default=None, help="p_a,p_b,p_c as fractions or decimals")
    p.add_argument("--weights", default=None, help="a,b,c")
    p.add_argument("--p", type=float, default=None, help="right jump rate")
    p.add_argument("--q", type=float, default=None, help="left jump rate")
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cases = args.func(args)
    except UsageError as exc:
        print(f"growthlab {args.command}: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, kernel.ImaginaryPartError, kasteleyn.UntileableError) as exc:
        print(f"growthlab {args.command}: check failed: {exc}", file=sys.stderr)
        return 1
    ok = all(c["pass"] for c in cases)
    report = _clean({"version": __version__, "command": args.command, "cases": cases, "pass": ok})
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"growthlab {args.command}: {sum(not c['pass'] for c in cases)} case(s) failed", file=sys.stderr)
    return 0 if ok else 1


def main():
    sys.exit(run())
