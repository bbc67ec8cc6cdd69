import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radiuslab import (ClosedFormProfile, FlatTorus, HyperbolicPlane, InvalidInput, Sphere, WarpedSurface,
                       assemble_report, conjugate_radius_at, convexity_radius, distance, focal_radius_at,
                       hessian_check, injectivity_radius_at, is_strongly_convex, report_points, scan_point)
from radiuslab.radii import ReportConfig

SPHERE = Sphere(1.0)
TORUS = FlatTorus(1.0, 1.0)

# focal radius at the station r = 1 of the pinned Gulliver surface, frozen from a certified sweep
GULLIVER_FOCAL_R1 = 1.58041536744


@pytest.fixture(scope="module")
def sphere_scan():
    return scan_point(SPHERE, (0.0, 0.0), 64, 8.0)


def test_sphere_scan(sphere_scan):
    sc = sphere_scan
    assert np.allclose(sc.conjugate, math.pi, atol=1e-6)
    assert np.allclose(sc.focal, math.pi / 2, atol=1e-6)
    assert np.allclose(sc.cut, math.pi, atol=1e-3)
    assert np.allclose(sc.loop, 2 * math.pi, atol=1e-4)
    assert np.all(sc.cut <= sc.conjugate + 1e-6)


def test_torus_scan_direction_zero():
    sc = scan_point(TORUS, (0.0, 0.0), 8, 5.0)
    assert sc.angles[0] == 0.0
    assert sc.cut[0] == pytest.approx(0.5, abs=1e-6)
    assert sc.loop[0] == pytest.approx(1.0, abs=1e-6)
    assert math.isinf(sc.conjugate[0]) and math.isinf(sc.focal[0])
    assert np.all(sc.cut > 0)


def test_scan_rejects_few_directions():
    with pytest.raises(InvalidInput):
        scan_point(SPHERE, (0.0, 0.0), 4, 4.0)


def test_radii_sphere_and_hyperbolic(sphere_scan):
    assert conjugate_radius_at(SPHERE, (0.0, 0.0), scan=sphere_scan) == pytest.approx(math.pi, abs=1e-6)
    assert focal_radius_at(SPHERE, (0.0, 0.0), scan=sphere_scan) == pytest.approx(math.pi / 2, abs=1e-6)
    H = HyperbolicPlane(-1.0)
    sc = scan_point(H, (0.0, 0.0), 16, 20.0, step=2e-3, cut=False, loops=False)
    assert math.isinf(conjugate_radius_at(H, (0, 0), scan=sc))
    assert math.isinf(focal_radius_at(H, (0, 0), scan=sc))


def test_injectivity_examples(sphere_scan):
    est = injectivity_radius_at(SPHERE, (0.0, 0.0), scan=sphere_scan)
    assert est.formula == pytest.approx(math.pi, abs=1e-6)
    assert est.oracle == pytest.approx(math.pi, abs=1e-3)
    est = injectivity_radius_at(FlatTorus(1.0, 2.0), (0.2, 0.3), horizon=5.0)
    assert est.formula == pytest.approx(0.5, abs=1e-9)
    assert est.oracle == pytest.approx(0.5, abs=1e-4)
    est = injectivity_radius_at(WarpedSurface(ClosedFormProfile("sinh"), 6.0), (0.0, 0.0), n_dirs=16)
    assert math.isinf(est.formula) and math.isinf(est.oracle)


def test_sphere_convexity_examples():
    assert is_strongly_convex(SPHERE, (0.0, 0.0), math.pi / 2 - 0.05)
    v = is_strongly_convex(SPHERE, (0.0, 0.0), math.pi / 2 + 0.05)
    assert not v
    w = v.witness
    assert w.mode == "LeavesBall" and w.max_distance > w.radius
    for q in w.pair:
        assert distance(SPHERE, (0.0, 0.0), q) <= w.radius + 1e-9


def test_torus_witness_wraps():
    v = is_strongly_convex(TORUS, (0.0, 0.0), 0.26, n_pairs=200)
    w = v.witness
    assert w.mode == "LeavesBall" and w.seed == 42
    # the minimal geodesic is shorter than the straight chord inside the ball
    a, b = (np.array(q) - np.round(q) for q in w.pair)
    assert w.lengths[0] < np.linalg.norm(a - b) - 1e-6
    assert w.lengths[0] == pytest.approx(distance(TORUS, *w.pair), abs=1e-9)


def test_convexity_requires_pairs():
    with pytest.raises(InvalidInput):
        is_strongly_convex(SPHERE, (0, 0), 0.5, n_pairs=10)
    with pytest.raises(InvalidInput):
        is_strongly_convex(SPHERE, (0, 0), -0.5)


def test_convexity_seed_is_reproducible():
    a = is_strongly_convex(TORUS, (0.0, 0.0), 0.3, seed=7)
    b = is_strongly_convex(TORUS, (0.0, 0.0), 0.3, seed=7)
    assert a.witness.pair == b.witness.pair and a.seed == 7


def test_convexity_radius_torus():
    cr = convexity_radius(TORUS, horizon=10.0, n_dirs=16)
    assert cr.formula == pytest.approx(0.25)
    assert cr.oracle == pytest.approx(0.25, abs=0.01)


def test_hessian_flat_is_two():
    hc = hessian_check(TORUS, (0.0, 0.0), 0.2, n_geodesics=300)
    assert np.allclose(hc.values, 2.0, atol=1e-3)


def test_hessian_sphere_positive():
    assert hessian_check(SPHERE, (0.0, 0.0), 1.4, n_geodesics=300).minimum > 0


def test_gulliver_scan_off_pole(gulliver):
    m, _ = gulliver
    sc = scan_point(m, (1.0, 0.0), 64, 20.0, cut=False, loops=False)
    assert np.all(np.isinf(sc.conjugate))
    rf = focal_radius_at(m, (1.0, 0.0), scan=sc)
    assert rf == pytest.approx(GULLIVER_FOCAL_R1, rel=1e-6)
    assert sc.unresolved_exits == 0


def test_gulliver_pole_has_no_focal_points(gulliver):
    # f' > 0 on the whole chart, so radial Jacobi fields from the pole never turn
    m, _ = gulliver
    sc = scan_point(m, (0.0, 0.0), 16, 20.0, cut=False, loops=False)
    assert np.all(np.isinf(sc.focal)) and np.all(np.isinf(sc.conjugate))


def test_gulliver_hessian(gulliver):
    m, _ = gulliver
    R = min(GULLIVER_FOCAL_R1, 20.0) - 0.1
    assert hessian_check(m, (1.0, 0.0), R, n_geodesics=100).minimum > 0


def test_report_points():
    assert report_points(SPHERE) == [(0.0, 0.0)]
    pts = report_points(WarpedSurface(ClosedFormProfile("sinh"), 6.0), 20.0)
    assert len(pts) == 17 and pts[0] == (0.0, 0.0)


def test_torus_report():
    rep = assemble_report(FlatTorus(1.0, 2.0))
    assert rep.inj_formula == pytest.approx(0.5)
    assert rep.r_formula == pytest.approx(0.25)
    assert math.isinf(rep.focal)
    assert rep.ok, rep.checks


@settings(max_examples=6, deadline=None)
@given(st.floats(0.2, 0.45), st.floats(0.02, 0.1))
def test_oracle_monotone_torus(s, ds):
    if not is_strongly_convex(TORUS, (0.0, 0.0), s, n_pairs=100):
        assert not is_strongly_convex(TORUS, (0.0, 0.0), s + ds, n_pairs=100)


@settings(max_examples=4, deadline=None)
@given(st.floats(1.3, 2.0))
def test_oracle_monotone_sphere(s):
    if not is_strongly_convex(SPHERE, (0.0, 0.0), s, n_pairs=100):
        assert not is_strongly_convex(SPHERE, (0.0, 0.0), s + 0.02, n_pairs=100)


@pytest.mark.parametrize("m", [SPHERE, TORUS, FlatTorus(1.0, 2.0), FlatTorus(1.0, 3.0)],
                         ids=["sphere", "torus11", "torus12", "torus13"])
def test_inj_formula_matches_cut_oracle(m):
    rep = assemble_report(m, ReportConfig(horizon=10.0, oracle=False))
    assert rep.inj_oracle == pytest.approx(rep.inj_formula, rel=0.02)


def test_hyperbolic_has_no_cut_points():
    rep = assemble_report(HyperbolicPlane(-1.0), ReportConfig(oracle=False))
    assert math.isinf(rep.inj_formula) and math.isinf(rep.inj_oracle)


@pytest.mark.parametrize("m", [SPHERE, TORUS, FlatTorus(1.0, 3.0)], ids=["sphere", "torus11", "torus13"])
def test_r_formula_matches_oracle(m):
    cr = convexity_radius(m, horizon=10.0)
    assert cr.oracle == pytest.approx(cr.formula, rel=0.04)


def test_gulliver_balls_become_convex_again(gulliver):
    # past the second zero of j' the distance spheres bend back, so the ball
    # just beyond the focal radius fails while a much larger one is convex
    m, _ = gulliver
    p = (1.028125, 0.0)
    small = is_strongly_convex(m, p, 1.6)
    assert not small and small.witness.mode == "LeavesBall"
    assert is_strongly_convex(m, p, 2.2)
