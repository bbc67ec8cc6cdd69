"""Acceptance suite: six end-to-end criteria, one PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v -s`` to see the lines
interleaved, or read them from the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from radiuslab import (ClosedFormProfile, FlatTorus, HyperbolicPlane, Sphere, WarpedSurface, assemble_report,
                       certify, default_config, gulliver_surface, hessian_check,
                       is_strongly_convex, ratio_bound, scan_point)
from radiuslab.gulliver import default_baselines
from radiuslab.radii import ReportConfig

RESULTS = {}


def _record(key, label, ok, detail):
    RESULTS[key] = f"{key} {'PASS' if ok else 'FAIL'}  {label}: {detail}"


@pytest.fixture(autouse=True)
def _announce(request, capsys):
    yield
    key = request.node.name.split("_")[1].upper()
    line = RESULTS.get(key)
    if line:
        with capsys.disabled():
            print("\n" + line)


@pytest.fixture(scope="module")
def reports():
    return {}


def _timed(fn):
    t0 = time.time()
    out = fn()
    return out, time.time() - t0


def test_ac1_sphere(reports):
    rep, dt = _timed(lambda: assemble_report(Sphere(1.0)))
    reports["sphere"] = rep
    lo, hi = rep.r_oracle_bracket
    checks = {
        "r_c": abs(rep.conjugate - math.pi) <= 1e-3,
        "r_f": abs(rep.focal - math.pi / 2) <= 1e-3,
        "l_c": rep.closed_geodesic == 2 * math.pi,
        "inj_formula": abs(rep.inj_formula - math.pi) <= 1e-3,
        "r_formula": abs(rep.r_formula - math.pi / 2) <= 1e-3,
        "bracket": abs(lo - math.pi / 2) <= 0.02 and abs(hi - math.pi / 2) <= 0.02,
        "runtime": dt <= 120,
    }
    ok = all(checks.values())
    _record("AC1", "Sphere(1)", ok,
            f"r_c={rep.conjugate:.6f} r_f={rep.focal:.6f} l_c={rep.closed_geodesic:.6f} "
            f"inj={rep.inj_formula:.6f} r={rep.r_formula:.6f} bracket=[{lo:.4f}, {hi:.4f}] {dt:.0f}s "
            f"failed={[k for k, v in checks.items() if not v]}")
    assert ok, checks


def _wraps(m, w):
    # the witness geodesic is shorter than the straight chord in the ball around p
    a, b = (np.array(q) - np.array([m.l1, m.l2]) * np.round(np.array(q) / [m.l1, m.l2]) for q in w.pair)
    return w.lengths[0] < np.linalg.norm(a - b) - 1e-6


@pytest.mark.parametrize("l2", [1.0, 3.0])
def test_ac2_torus(l2, reports):
    m = FlatTorus(1.0, l2)
    p = (0.0, 0.0)

    def run():
        rep = assemble_report(m, ReportConfig(horizon=10.0))
        yes = is_strongly_convex(m, p, 0.24, n_pairs=1000)
        no = is_strongly_convex(m, p, 0.26, n_pairs=1000)
        return rep, yes, no

    (rep, yes, no), dt = _timed(run)
    reports[f"torus{l2:g}"] = rep
    w = no.witness
    checks = {
        "r_f>H": math.isinf(rep.focal), "r_c>H": math.isinf(rep.conjugate),
        "l_c": rep.closed_geodesic == 1.0,
        "inj_formula": abs(rep.inj_formula - 0.5) <= 1e-3,
        "inj_oracle": rep.inj_oracle is not None and abs(rep.inj_oracle - 0.5) <= 1e-3,
        "r_formula": abs(rep.r_formula - 0.25) <= 1e-12,
        "convex@0.24": bool(yes),
        "witness@0.26": w is not None and w.mode == "LeavesBall" and _wraps(m, w),
        "runtime": dt <= 120,
    }
    ok = all(checks.values())
    _record("AC2", f"FlatTorus(1,{l2:g})", ok,
            f"inj={rep.inj_formula:.6f}/{rep.inj_oracle:.6f} r={rep.r_formula:.4f} l_c={rep.closed_geodesic:g} "
            f"convex(0.24)={bool(yes)} witness(0.26)={w.mode if w else None} {dt:.0f}s "
            f"failed={[k for k, v in checks.items() if not v]}")
    assert ok, checks


def test_ac3_hyperbolic(reports):
    H = HyperbolicPlane(-1.0)
    chart = WarpedSurface(ClosedFormProfile("sinh"), 6.0)
    t0 = time.time()
    rep = assemble_report(H, ReportConfig(hessian_geodesics=200))
    reports["hyperbolic"] = rep
    sc = scan_point(chart, (0.0, 0.0), 64, 20.0, cut=False, loops=False)
    hc = hessian_check(H, (0.0, 0.0), 3.0, n_geodesics=1000)
    hc_chart = hessian_check(chart, (0.0, 0.0), 3.0, n_geodesics=1000)
    dt = time.time() - t0
    checks = {
        "no conjugate": math.isinf(rep.conjugate) and bool(np.all(np.isinf(sc.conjugate))),
        "no focal": math.isinf(rep.focal) and bool(np.all(np.isinf(sc.focal))),
        "chart resolved": sc.unresolved_exits == 0,
        "hessian>0": hc.minimum > 0 and hc_chart.minimum > 0,
    }
    ok = all(checks.values())
    _record("AC3", "HyperbolicPlane(-1)", ok,
            f"horizon={rep.horizon:g} hessian min={hc.minimum:.4f} (plane) {hc_chart.minimum:.4f} (sinh chart, "
            f"r<6) over 1000 geodesics in B(p,3) {dt:.0f}s failed={[k for k, v in checks.items() if not v]}")
    assert ok, checks


def test_ac4_gulliver():
    cfg = default_config()
    m = gulliver_surface(cfg)
    rep, dt = _timed(lambda: certify(m, cfg))
    base = default_baselines()
    st = rep.stability
    checks = {
        "|K|<=1": rep.curvature_bound <= 1 + 1e-9,
        "riccati on >=1000": rep.no_conjugate and rep.n_geodesics >= 1000 and rep.riccati_margin > 0,
        "focal in ball": rep.focal_found and math.isfinite(rep.r_f_ball),
        "r_f_ball stable": st["r_f_ball_rel_change"] < 0.01 and st["r_f_ball_double_n_rel_change"] < 0.01,
        "D stable": st["diameter_rel_change"] < 0.01,
        "baselines": abs(rep.r_f_ball - base["r_f_ball"]) <= 1e-6 * base["r_f_ball"]
        and abs(rep.diameter - base["diameter"]) <= 1e-6 * base["diameter"],
        "runtime": dt <= 600,
    }
    ok = all(checks.values())
    _record("AC4", "Gulliver certification", ok,
            f"|K|max={rep.curvature_bound:.12g} geodesics={rep.n_geodesics} conjugate={rep.n_conjugate} "
            f"margin={rep.riccati_margin:.4f} r_f_ball={rep.r_f_ball:.6f} D={rep.diameter:.6f} "
            f"dr_f={st['r_f_ball_rel_change']:.1e} dD={st['diameter_rel_change']:.1e} {dt:.0f}s "
            f"failed={[k for k, v in checks.items() if not v]}")
    assert ok, checks


def _sturm_ok(m, kmax, kmin):
    sc = scan_point(m, (0.5, 0.0), 32, 12.0, cut=False, loops=False)
    ok = bool(np.all(sc.focal <= sc.conjugate)) and sc.wronskian_drift <= 1e-6
    if kmax > 0:
        ok &= bool(np.all(sc.conjugate >= math.pi / math.sqrt(kmax) - 1e-4))
    if kmin > 0:
        ok &= bool(np.all(sc.conjugate <= math.pi / math.sqrt(kmin) + 1e-4))
    return ok


def test_ac5_invariants(reports):
    g = gulliver_surface(default_config())
    t0 = time.time()
    # reuse the reports of the earlier criteria when they ran in this session
    if "sphere" not in reports:
        reports["sphere"] = assemble_report(Sphere(1.0))
    if "torus1" not in reports:
        reports["torus1"] = assemble_report(FlatTorus(1.0, 1.0), ReportConfig(horizon=10.0))
    if "hyperbolic" not in reports:
        reports["hyperbolic"] = assemble_report(HyperbolicPlane(-1.0), ReportConfig(hessian_geodesics=200))
    reports["gulliver"] = assemble_report(g)
    checks = {}
    for name in ("sphere", "torus1", "hyperbolic", "gulliver"):
        rep = reports[name]
        per_geodesic = all(v["ok"] for k, v in rep.checks.items()
                           if k.startswith(("focal<=conjugate", "wronskian", "cut<=conjugate")))
        focal_half = (not math.isfinite(rep.conjugate)) or rep.focal <= 0.5 * rep.conjugate + 1e-3
        pointwise = rep.r_oracle is not None and rep.r_oracle <= rep.focal + 0.02
        checks[name] = per_geodesic and focal_half and pointwise and not rep.errors
    checks["sturm"] = (_sturm_ok(Sphere(1.0), 1.0, 1.0) and _sturm_ok(g, 1.0, 0.0)
                       and _sturm_ok(WarpedSurface(ClosedFormProfile("sinh"), 6.0), -1.0, 0.0))
    dt = time.time() - t0
    ok = all(checks.values())
    gr = reports["gulliver"]
    _record("AC5", "global invariants", ok,
            f"gulliver r_c={gr.conjugate} r_f={gr.focal:.5f} r_oracle={gr.r_oracle:.5f} "
            f"sphere r_oracle={reports['sphere'].r_oracle:.5f} torus r_oracle={reports['torus1'].r_oracle:.5f} "
            f"{dt:.0f}s failed={[k for k, v in checks.items() if not v]}")
    assert ok, {k: (v, reports[k].checks if k in reports else None) for k, v in checks.items()}


def test_ac6_ratio():
    # (R, D, inj_g, epsilon, expected required_inj_g); rows without a stated inj_g take required + 1
    rows = [(1.7, 3.0, None, 0.1, 31.7), (1.7, 3.0, 35.0, 0.1, 31.7), (1.7, 3.4, None, 0.01, 341.7)]
    ok = True
    details = []
    for R, D, inj, eps, req in rows:
        inj = inj if inj is not None else max(2 * R, D / eps + R) + 1.0
        rb = ratio_bound(R, D, inj, eps)
        ok &= rb.required_inj_g == max(2 * R, D / eps + R)
        ok &= abs(rb.required_inj_g - req) <= 1e-9 * req
        ok &= rb.inj_h_lower == inj - R and rb.ratio_upper == D / (inj - R)
        ok &= rb.ratio_upper < eps and rb.clears
        details.append(f"inj_g={inj:g} required={rb.required_inj_g:.6g} ratio={rb.ratio_upper:.6g}")
    ok &= round(ratio_bound(1.7, 3.0, 35.0, 0.1).ratio_upper, 4) == 0.0901
    _record("AC6", "ratio arithmetic", ok, "; ".join(details))
    assert ok
