"""Command-line front end: ``radius-lab <command> [options]``.

Every command writes one JSON document (to ``--out`` or stdout) carrying the
effective configuration; optional CSV files hold plot-ready samples.
Exit status is 0 on success, 1 when a computation failed (the report is
still written, with the error inside) and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import gulliver as gv
from .errors import BudgetExhausted, InvalidInput, PointOutsideDomain, RadiusLabError
from .geodesic import integrate_geodesic, unit_state
from .jacobi import integrate_jacobi, riccati_certify
from .manifold import (FlatTorus, HyperbolicPlane, Sphere, WarpedSurface, descriptor_from_dict,
                       descriptor_to_dict)
from .radii import ReportConfig, assemble_report, is_strongly_convex, scan_point

SCHEMA = "radius-lab/1"
COMMANDS = ("radii", "scan", "convexity", "gulliver-build", "gulliver-certify", "ratio", "trace")


class _Usage(Exception):
    pass


def _num(x: float) -> float:
    return float(f"{x:.12g}")


def jsonable(obj, horizon=None):
    """Plain JSON types; 12 significant digits, inf as ``{"exceeds_horizon": H}``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v, horizon) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, horizon) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v, horizon) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            if x > 0 and horizon is not None:
                return {"exceeds_horizon": _num(horizon)}
            return "inf" if x > 0 else "-inf"
        return _num(x)
    return obj


def dumps(payload: dict, horizon=None) -> str:
    return json.dumps(jsonable(payload, horizon), indent=2, sort_keys=True) + "\n"


def _positive(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return parse


def _count(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return parse


def _point(text):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("point must be 'a,b'") from None
    return (a, b)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radius-lab", description="Geodesic radii of 2D manifolds.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, manifold=True):
        p.add_argument("--out", help="JSON report path (default: stdout)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--horizon", type=_positive("horizon"))
        p.add_argument("--step", type=_positive("step"), default=1e-3)
        if manifold:
            p.add_argument("--manifold", help="sphere, hyperbolic, torus, gulliver, or a JSON descriptor file")
            p.add_argument("--config", help="JSON descriptor file (same as --manifold FILE)")
            p.add_argument("--radius", type=_positive("radius"), default=1.0)
            p.add_argument("--curvature", type=float, default=-1.0)
            p.add_argument("--l1", type=_positive("l1"), default=1.0)
            p.add_argument("--l2", type=_positive("l2"), default=1.0)

    p = sub.add_parser("radii", help="all radii, formulas, oracles and cross-checks")
    common(p)
    p.add_argument("--n-dirs", type=_count("n-dirs"), default=64)
    p.add_argument("--n-pairs", type=_count("n-pairs"), default=200)
    p.add_argument("--stations", type=_count("stations"), default=16)
    p.add_argument("--depth", type=_count("depth"), default=12)
    p.add_argument("--no-oracle", action="store_true")

    p = sub.add_parser("scan", help="per-direction event times at one point")
    common(p)
    p.add_argument("--point", type=_point, default=(0.0, 0.0))
    p.add_argument("--n-dirs", type=_count("n-dirs"), default=64)
    p.add_argument("--csv", help="CSV of angle, conjugate, focal, cut, loop")

    p = sub.add_parser("convexity", help="strong convexity oracle for one ball")
    common(p)
    p.add_argument("--point", type=_point, default=(0.0, 0.0))
    p.add_argument("--s", type=_positive("s"), required=True)
    p.add_argument("--n-pairs", type=_count("n-pairs"), default=200)

    p = sub.add_parser("gulliver-build", help="build a cap-to-hyperbolic profile")
    common(p, manifold=False)
    p.add_argument("--config", help="GulliverConfig JSON (default: the pinned configuration)")
    p.add_argument("--csv", help="CSV of r, f, fprime, K")

    p = sub.add_parser("gulliver-certify", help="sweep certification of a Gulliver profile")
    common(p, manifold=False)
    p.add_argument("--config", help="GulliverConfig JSON (default: the pinned configuration)")
    p.add_argument("--n-geodesics", type=_count("n-geodesics"))
    p.add_argument("--no-stability", action="store_true")

    p = sub.add_parser("ratio", help="convexity/injectivity ratio arithmetic")
    common(p, manifold=False)
    p.add_argument("--R", type=_positive("R"), default=1.7)
    p.add_argument("--D", type=_positive("D"), required=True)
    p.add_argument("--inj-g", type=_positive("inj-g"), required=True)
    p.add_argument("--epsilon", type=_positive("epsilon"), required=True)

    p = sub.add_parser("trace", help="one geodesic with its Jacobi field")
    common(p)
    p.add_argument("--point", type=_point, default=(0.0, 0.0))
    p.add_argument("--angle", type=float, default=0.0)
    p.add_argument("--length", type=_positive("length"), default=math.pi)
    p.add_argument("--csv", help="CSV of the geodesic samples")
    p.add_argument("--jacobi-csv", help="CSV of t, j, jprime")
    return ap


def _read_json(path, what):
    if not os.path.exists(path):
        raise InvalidInput(f"{what}: file not found: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{what}: invalid JSON in {path}: {exc}") from None


def _manifold(args):
    spec = args.config or args.manifold
    if spec is None:
        raise InvalidInput("--manifold or --config is required")
    if spec == "sphere":
        return Sphere(args.radius)
    if spec == "hyperbolic":
        return HyperbolicPlane(args.curvature)
    if spec == "torus":
        return FlatTorus(args.l1, args.l2)
    if spec == "gulliver":
        return gv.gulliver_surface(gv.default_config())
    if spec.endswith(".json") or os.path.exists(spec):
        return descriptor_from_dict(_read_json(spec, "manifold"), path="manifold.")
    raise InvalidInput(f"unknown manifold kind {spec!r} at manifold.kind")


def _describe(m):
    if isinstance(m, WarpedSurface) and getattr(m.profile, "kind", "") == "tabulated":
        return {"kind": "warped", "r_max": m.r_max,
                "curvature_knots": [list(k) for k in m.profile.spec.knots]}
    return descriptor_to_dict(m)


def _gulliver_config(args):
    if args.config:
        d = _read_json(args.config, "config")
        if not isinstance(d, dict):
            raise InvalidInput("config must be an object")
        return gv.GulliverConfig.from_dict(d.get("config", d))
    return gv.default_config()


def _effective(args, extra=None):
    d = {k: v for k, v in vars(args).items() if k not in ("out",)}
    d["threads"] = gv.worker_count()
    if extra:
        d.update(extra)
    return d


# ---------------------------------------------------------------------------
# commands


def _radii(args):
    m = _manifold(args)
    cfg = ReportConfig(n_dirs=args.n_dirs, horizon=args.horizon, step=args.step, n_pairs=args.n_pairs,
                       seed=args.seed, stations=args.stations, depth=args.depth,
                       oracle=not args.no_oracle)
    rep = assemble_report(m, cfg)
    H = rep.horizon
    out = {
        "manifold": _describe(m),
        "horizon": H,
        "conjugate_radius": rep.conjugate,
        "focal_radius": rep.focal,
        "loop_length": rep.loop,
        "closed_geodesic": {"length": rep.closed_geodesic, "provenance": rep.closed_geodesic_provenance},
        "inj": rep.inj_formula,
        "inj_formula": rep.inj_formula,
        "inj_oracle": rep.inj_oracle,
        "r": rep.r_formula,
        "r_formula": rep.r_formula,
        "r_oracle": rep.r_oracle,
        "r_oracle_bracket": rep.r_oracle_bracket,
        "worst_point": rep.worst_point,
        "hessian_minimum": rep.hessian_minimum,
        "points": [asdict(p) for p in rep.points],
        "checks": rep.checks,
        "ok": rep.ok,
        "config": _effective(args, {"report": asdict(cfg), "horizon": H}),
    }
    if rep.errors:
        out["errors"] = rep.errors
    return out, H, 0 if rep.ok else 1


def _scan(args):
    m = _manifold(args)
    sc = scan_point(m, args.point, args.n_dirs, args.horizon, args.step)
    H = sc.horizon
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["angle", "conjugate", "focal", "cut", "loop"])
            for row in sc.rows():
                w.writerow([f"{x:.12g}" for x in row])
    out = {
        "manifold": _describe(m), "point": sc.point, "horizon": H,
        "angles": sc.angles, "conjugate": sc.conjugate, "focal": sc.focal, "cut": sc.cut, "loop": sc.loop,
        "min_conjugate": float(np.min(sc.conjugate)), "min_focal": float(np.min(sc.focal)),
        "unresolved_exits": sc.unresolved_exits, "wronskian_drift": sc.wronskian_drift,
        "config": _effective(args, {"horizon": H}),
    }
    return out, H, 0


def _convexity(args):
    m = _manifold(args)
    status = 0
    try:
        v = is_strongly_convex(m, args.point, args.s, args.n_pairs, args.seed)
    except BudgetExhausted as exc:
        v, status = exc.partial, 1
    out = {
        "manifold": _describe(m), "center": v.center, "radius": v.radius, "convex": v.convex,
        "n_pairs": v.n_pairs, "seed": v.seed, "incomplete": v.incomplete,
        "witness": v.witness.to_dict() if v.witness is not None else None,
        "config": _effective(args),
    }
    return out, None, status


def _gulliver_build(args):
    cfg = _gulliver_config(args)
    prof = gv.build_gulliver(cfg)
    if args.csv:
        gv.profile_csv(prof, args.csv, cfg.r_max)
    r = np.linspace(0.0, cfg.r_max, 4001)
    K = prof.curvature(r)
    out = {
        "gulliver_config": cfg.to_dict(),
        "curvature_bound": float(np.max(np.abs(K))),
        "f_at_cap": float(prof.f(cfg.r_cap)),
        "f_at_R": float(prof.f(cfg.R)),
        "screen_margin": gv.radial_screen(cfg),
        "config": _effective(args),
    }
    return out, None, 0


def _gulliver_certify(args):
    cfg = _gulliver_config(args)
    changes = {}
    if args.horizon:
        changes["horizon"] = args.horizon
    if args.n_geodesics:
        changes["n_geodesics"] = args.n_geodesics
    if args.step != 1e-3:
        changes["step"] = args.step
    if changes:
        cfg = gv.GulliverConfig.from_dict({**cfg.to_dict(), **changes})
    m = gv.gulliver_surface(cfg)
    rep = gv.certify(m, cfg, stability=not args.no_stability)
    out = rep.to_dict()
    out["gulliver_config"] = out.pop("config")
    out["baselines"] = gv.default_baselines()
    out["config"] = _effective(args)
    ok = rep.no_conjugate and rep.focal_found
    return out, cfg.horizon, 0 if ok else 1


def _ratio(args):
    rb = gv.ratio_bound(args.R, args.D, args.inj_g, args.epsilon)
    out = rb.to_dict()
    out["config"] = _effective(args)
    return out, None, 0


def _trace(args):
    m = _manifold(args)
    path = integrate_geodesic(m, unit_state(m, args.point, args.angle), args.length, args.step)
    tr = integrate_jacobi(m, path)
    cert = riccati_certify(m, path)
    if args.csv:
        path.to_csv(args.csv)
    if args.jacobi_csv:
        tr.to_csv(args.jacobi_csv)
    out = {
        "manifold": _describe(m), "start": path.start.position, "end": path.end.position,
        "length": path.total_length, "speed_drift": path.speed_drift,
        "jacobi": tr.summary(), "wronskian_drift": tr.wronskian_drift,
        "riccati": {"certified": cert.certified, "margin": cert.margin, "location": cert.location,
                    "blowup_time": cert.blowup_time},
        "config": _effective(args),
    }
    return out, args.length, 0


_HANDLERS = {"radii": _radii, "scan": _scan, "convexity": _convexity, "gulliver-build": _gulliver_build,
             "gulliver-certify": _gulliver_certify, "ratio": _ratio, "trace": _trace}


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    t0 = time.time()
    try:
        payload, H, status = _HANDLERS[args.command](args)
    except (InvalidInput, PointOutsideDomain) as exc:
        print(f"radius-lab: invalid input: {exc}", file=sys.stderr)
        return 2
    except RadiusLabError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)},
                   "config": _effective(args)}
        H, status = args.horizon, 1
    payload["schema"] = SCHEMA
    payload["command"] = args.command
    _emit(dumps(payload, H), args.out)
    if args.out:
        # timestamps stay out of the report itself
        with open(args.out + ".log", "w") as fh:
            fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {args.command} status={status} "
                     f"elapsed={time.time() - t0:.2f}s\n")
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
