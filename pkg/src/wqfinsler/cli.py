"""Command-line entry point; every subcommand prints one JSON RunReport.

Exit status: 0 on pass or n.a., 1 on a failed verdict, 2 on usage or
configuration errors (a report is printed in every case).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance, spaces
from .distance import METHODS, distance, triangle_perimeter, weight_from_distances
from .errors import ConfigError, FinslerError
from .geodesic import energy_drift, integrate_geodesic, reversibility_residual
from .metric import CATALOG_NAMES, MetricConfig, make_phi
from .seeding import DEFAULT_SEED, check_seed
from .shen import DEFAULT_GRID, check_admissible

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_TOLS = {
    "geodesic": 1e-6,
    "reverse": 1e-4,
    "weight": 1e-3,
    "weight_norm": 1e-9,
    "triangle": 3e-3,
    "qspace": spaces.TOL,
}


class UsageError(Exception):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _vector(text, name="vector"):
    try:
        return np.array([float(v) for v in text.replace(" ", "").split(",") if v != ""])
    except ValueError:
        raise UsageError(f"cannot parse {name} {text!r}; expected comma-separated reals", name) from None


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise UsageError(f"--param expects k=v, got {text!r}", "param")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise UsageError(f"--param value for {key!r} must be real", "param") from None


def _finite(obj):
    """Replace non-finite reals by None and numpy types by plain Python ones."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _residual(name, value, tol):
    value = float(value)
    return {"name": name, "value": value, "tol": tol, "passed": bool(math.isfinite(value) and value <= tol)}


def _verdict(residuals, extra_ok=True):
    return "pass" if extra_ok and all(r["passed"] for r in residuals) else "fail"


def _config(args):
    if not getattr(args, "config", None):
        raise UsageError("this command needs --config <file>", "config")
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file {str(path)!r} not found", "config")
    return MetricConfig.load(path)


def _tol(args, key):
    return args.tol if args.tol is not None else DEFAULT_TOLS[key]


# subcommands: each returns (outputs, residuals, verdict[, text for stdout])


def cmd_catalog(args):
    entries = []
    for name in CATALOG_NAMES:
        phi = make_phi(name)
        eps = phi.epsilon
        entries.append(
            {
                "name": name,
                "params": dict(phi.params),
                "epsilon": "NotDecomposable" if eps is None else eps,
                "b0": phi.b0,
            }
        )
    return {"entries": entries, "count": len(entries)}, [], "n.a."


def cmd_validate_phi(args):
    phi = make_phi(args.phi, **dict(args.param or []))
    b0 = args.b0 if args.b0 is not None else 0.9 * phi.b0
    if not b0 > 0:
        raise UsageError("--b0 must be positive", "b0")
    if args.grid < 64:
        raise UsageError("--grid must be at least 64", "grid")
    rep = check_admissible(phi, b0, args.grid)
    out = rep.to_dict()
    out["computed_b0"] = phi.b0
    return out, [], "pass" if rep.admissible else "fail"


def cmd_geodesic(args):
    cfg = _config(args)
    x0 = _vector(args.start, "start")
    y0 = _vector(args.velocity, "velocity")
    if len(x0) != cfg.dimension or len(y0) != cfg.dimension:
        raise UsageError(f"--start and --velocity need {cfg.dimension} entries", "start")
    curve = integrate_geodesic(cfg, x0, y0, args.tmax, args.steps)
    drift = energy_drift(cfg, curve)
    residuals = [_residual("energy_drift", drift["max_rel_drift"], _tol(args, "geodesic"))]
    if args.reverse_check:
        residuals.append(_residual("reversibility", reversibility_residual(cfg, curve), DEFAULT_TOLS["reverse"]))
    outputs = {
        "nodes": len(curve),
        "truncated": curve.truncated,
        "t_end": float(curve.times[-1]),
        "endpoint": curve.points[-1],
        "end_velocity": curve.velocities[-1],
        **drift,
    }
    text = curve.to_csv(cfg) if args.out == "csv" else None
    return outputs, residuals, _verdict(residuals), text


def cmd_distance(args):
    cfg = _config(args)
    p = _vector(args.source, "from")
    q = _vector(args.target, "to")
    res = distance(cfg, p, q, args.method)
    residuals = []
    if args.method != "norm":
        tol = args.tol if args.tol is not None else (1e-6 if args.method == "relax" else 1e-10 * cfg.diameter)
        residuals.append(_residual("solver_residual", res.residual, tol))
    text = res.certificate.to_csv(cfg) if args.out == "csv" and res.certificate is not None else None
    verdict = "n.a." if args.method == "norm" else _verdict(residuals, res.converged)
    return res.to_dict(), residuals, verdict, text


def _read_points(path, n):
    try:
        pts = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read points file: {exc}", "points") from None
    if pts.shape[1] != n:
        raise UsageError(f"points file needs {n} columns", "points")
    return pts


def cmd_weight(args):
    cfg = _config(args)
    a = _vector(args.base, "base")
    pts = _read_points(args.points, cfg.dimension)
    wf = weight_from_distances(cfg, a, pts, args.method)
    residuals = []
    if wf.predicted is not None:
        key = "weight_norm" if args.method == "norm" else "weight"
        residuals.append(_residual("prediction_error", float(np.max(np.abs(wf.values - wf.predicted))), _tol(args, key)))
    verdict = _verdict(residuals, wf.converged) if residuals else "n.a."
    return wf.to_dict(), residuals, verdict


def cmd_triangle(args):
    cfg = _config(args)
    verts = [_vector(v, "pts") for v in args.pts.split(";")]
    if len(verts) != 3:
        raise UsageError("--pts needs three points separated by ';'", "pts")
    f, b = triangle_perimeter(cfg, *verts, method=args.method)
    residuals = [_residual("orientation_gap", abs(f - b), _tol(args, "triangle"))]
    return {"forward": f, "backward": b, "method": args.method}, residuals, _verdict(residuals)


def _load_input(args):
    if not args.input:
        raise UsageError("qspace needs --input <file>", "input")
    try:
        return json.loads(Path(args.input).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}", "input") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None


def _weighted(doc, tol):
    m, omega = spaces.load_space(doc)
    if omega is None:
        w = spaces.weigh(m, tol)
        if not w.weightable:
            return None, w
        return w.space, w
    return spaces.WeightedSpace(m, omega, tol), None


def cmd_qspace(args):
    tol = _tol(args, "qspace")
    doc = _load_input(args)
    action = args.action
    if action == "check":
        m, _ = spaces.load_space(doc)
        rep = spaces.check_axioms(m, tol)
        return rep.to_dict(), [], "pass" if rep.valid else "fail"
    if action == "weigh":
        m, _ = spaces.load_space(doc)
        w = spaces.weigh(m, tol)
        out = w.to_dict()
        out["max_perimeter_gap"] = float(np.max(np.abs(spaces.perimeter_defects(m)))) if m.n else 0.0
        return out, [], "pass" if w.weightable else "fail"
    if action == "embed":
        ws, w = _weighted(doc, tol)
        if ws is None:
            return {"weightable": False, **w.to_dict()}, [], "fail"
        emb = spaces.embed(ws, args.lam)
        residuals = [_residual("q_error", emb.max_q_error, 1e-12), _residual("w_error", emb.max_w_error, 1e-12)]
        return emb.to_dict(), residuals, _verdict(residuals, emb.injective)
    if action == "graph":
        if "f" in doc:
            gs = spaces.GraphSpace(doc["d"], doc["f"], args.lam)
            ev = spaces.graph_space(gs, tol=tol)
            return ev.to_dict(), [], "pass" if ev.nonnegative or args.lam != 1 else "fail"
        ws, w = _weighted(doc, tol)
        if ws is None:
            return {"weightable": False, **w.to_dict()}, [], "fail"
        rec = spaces.reconstruct_as_graph(ws, tol)
        ev = spaces.graph_space(rec.graph, tol=tol)
        out = rec.to_dict()
        out["Q"] = ev.Q.tolist()
        out["nonnegative"] = ev.nonnegative
        residuals = [_residual("q_error", rec.max_q_error, 1e-12), _residual("w_error", rec.max_w_error, 1e-12)]
        return out, residuals, _verdict(residuals, ev.nonnegative)
    # morphism
    if not args.map:
        raise UsageError("qspace morphism needs --map <file>", "map")
    try:
        mdoc = json.loads(Path(args.map).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read map: {exc}", "map") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "map") from None
    if "map" not in mdoc:
        raise ConfigError("missing field", "map.map")
    src, _ = _weighted(doc, tol)
    dst, _ = _weighted(mdoc.get("target", doc), tol)
    if src is None or dst is None:
        raise ConfigError("morphism endpoints must be weightable", "input")
    out = spaces.morphism_check(src, dst, mdoc["map"], args.kind or mdoc.get("kind", "morphism"), tol)
    return out, [], "pass" if out["ok"] else "fail"


def cmd_suite(args):
    only = None
    if args.criteria:
        try:
            only = tuple(int(c) for c in args.criteria.split(","))
        except ValueError:
            raise UsageError("--criteria expects comma-separated integers", "criteria") from None
        unknown = [c for c in only if c not in acceptance.CRITERIA]
        if unknown:
            raise UsageError(f"unknown criteria {unknown}", "criteria")
    results = acceptance.run_suite(args.seed, args.quick, only)
    residuals = [
        {"name": f"c{r.number}: {c.name}", "value": c.value, "tol": c.limit, "passed": c.passed}
        for r in results
        for c in r.checks
    ]
    outputs = {"criteria": [r.to_dict() for r in results], "passed": sum(r.passed for r in results), "total": len(results)}
    for r in results:
        print(r.line(), file=sys.stderr)
    return outputs, residuals, "pass" if all(r.passed for r in results) else "fail"


COMMANDS = {
    "catalog": cmd_catalog,
    "validate-phi": cmd_validate_phi,
    "geodesic": cmd_geodesic,
    "distance": cmd_distance,
    "weight": cmd_weight,
    "triangle": cmd_triangle,
    "qspace": cmd_qspace,
    "suite": cmd_suite,
}


def _common(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d(None), help="metric configuration JSON")
    parser.add_argument("--seed", type=int, default=d(None), help=f"u64 seed (default {DEFAULT_SEED})")
    parser.add_argument("--tol", type=float, default=d(None), help="override the command's tolerance")
    parser.add_argument("--out", choices=("json", "csv"), default=d(None), help="csv sends curves to stdout, report to stderr")
    parser.add_argument("--no-wall-time", action="store_true", default=d(False), help="report wall_time as 0 for byte-stable output")


def build_parser():
    parser = _Parser(prog="wqfinsler", description="Weighted quasi-metrics from (alpha, beta) Finsler metrics.")
    _common(parser, suppress=True)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    parent = _Parser(add_help=False)
    _common(parent, suppress=True)

    sub.add_parser("catalog", parents=[parent], help="list phi entries with eps and b0")

    p = sub.add_parser("validate-phi", parents=[parent], help="Shen admissibility report")
    p.add_argument("--phi", required=True, choices=CATALOG_NAMES)
    p.add_argument("--param", type=_param, action="append", metavar="K=V")
    p.add_argument("--b0", type=float, help="radius to check (default 0.9 * computed b0)")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)

    p = sub.add_parser("geodesic", parents=[parent], help="RK4 geodesic with drift/reversibility residuals")
    p.add_argument("--start", required=True)
    p.add_argument("--velocity", required=True)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--reverse-check", action="store_true")

    p = sub.add_parser("distance", parents=[parent], help="quasi-distance between two points")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--method", choices=METHODS, default="norm")

    p = sub.add_parser("weight", parents=[parent], help="weight w_a(x) = d(a,x) - d(x,a) on a point list")
    p.add_argument("--base", required=True)
    p.add_argument("--points", required=True, help="CSV file, one point per row")
    p.add_argument("--method", choices=METHODS, default="norm")

    p = sub.add_parser("triangle", parents=[parent], help="both oriented perimeters of a triangle")
    p.add_argument("--pts", required=True, help="x1,x2;y1,y2;z1,z2")
    p.add_argument("--method", choices=METHODS, default="norm")

    p = sub.add_parser("qspace", parents=[parent], help="finite weighted quasi-metric spaces")
    p.add_argument("action", choices=("check", "weigh", "embed", "graph", "morphism"))
    p.add_argument("--input")
    p.add_argument("--lambda", dest="lam", type=int, default=1)
    p.add_argument("--map")
    p.add_argument("--kind", choices=spaces.MORPHISM_KINDS)

    p = sub.add_parser("suite", parents=[parent], help="run the acceptance battery")
    p.add_argument("--quick", action="store_true", help="Minkowski-only subset")
    p.add_argument("--criteria", help="comma-separated criterion numbers")
    return parser


def _emit(report, stream):
    stream.write(json.dumps(_finite(report), indent=2, allow_nan=False) + "\n")
    stream.flush()


def _echo(args):
    return {k: v for k, v in vars(args).items() if k not in ("no_wall_time",)}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    start = time.perf_counter()
    report = {"command": None, "inputs": {}, "outputs": {}, "residuals": [], "verdict": "fail", "wall_time": 0.0}
    args = None
    code = EXIT_USAGE
    text = None
    try:
        args = build_parser().parse_args(argv)
        for key, default in (("config", None), ("seed", DEFAULT_SEED), ("tol", None), ("out", "json"), ("no_wall_time", False)):
            if not hasattr(args, key) or getattr(args, key) is None:
                setattr(args, key, default)
        if args.command is None:
            raise UsageError("missing subcommand; choose one of " + ", ".join(COMMANDS))
        try:
            args.seed = check_seed(args.seed)
        except ValueError as exc:
            raise UsageError(str(exc), "seed") from None
        report["command"] = args.command
        report["inputs"] = _echo(args)
        result = COMMANDS[args.command](args)
        outputs, residuals, verdict = result[:3]
        text = result[3] if len(result) > 3 else None
        report.update(outputs=outputs, residuals=residuals, verdict=verdict)
        code = EXIT_FAIL if verdict == "fail" else EXIT_PASS
    except UsageError as exc:
        report["outputs"] = {"error": str(exc), "field": exc.field}
    except ConfigError as exc:
        report["outputs"] = {"error": str(exc), "field": exc.field}
    except (FinslerError, ValueError) as exc:
        report["outputs"] = {"error": str(exc), "type": type(exc).__name__}
        code = EXIT_FAIL
    stable = "--no-wall-time" in (sys.argv[1:] if argv is None else argv)
    if not stable and (args is None or not args.no_wall_time):
        report["wall_time"] = time.perf_counter() - start
    if text is not None:
        stdout.write(text)
        _emit(report, stderr)
    else:
        _emit(report, stdout)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
