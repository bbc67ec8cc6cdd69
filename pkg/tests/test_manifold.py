import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radiuslab import (ClosedFormProfile, CurvatureSpec, FlatTorus, HyperbolicPlane, InvalidInput,
                       PointOutsideDomain, PoleSingularity, ProfileCollapse, Sphere, WarpedSurface,
                       build_profile_from_curvature, descriptor_from_dict, descriptor_to_dict, metric_at)


def test_sphere_curvature_is_one():
    for p in [(0.3, 0.1), (1.5, 4.0), (3.0, 2.0)]:
        assert metric_at(Sphere(1.0), p).gauss_curvature == pytest.approx(1.0, abs=1e-12)


def test_torus_is_flat():
    s = metric_at(FlatTorus(1.0, 1.0), (0.3, 7.25))
    assert s.gauss_curvature == 0.0
    assert np.all(s.christoffels == 0.0)
    assert s.point == pytest.approx((0.3, 0.25))


def test_sinh_warp_curvature():
    m = WarpedSurface(ClosedFormProfile("sinh"), 6.0)
    assert metric_at(m, (0.7, 0.0)).gauss_curvature == pytest.approx(-1.0, abs=1e-9)


def test_warped_metric_components():
    m = WarpedSurface(ClosedFormProfile("sinh"), 6.0)
    s = metric_at(m, (1.2, 0.5))
    assert np.allclose(s.metric, np.diag([1.0, math.sinh(1.2) ** 2]))


def test_outside_domain_and_pole():
    m = WarpedSurface(ClosedFormProfile("sinh"), 2.0)
    with pytest.raises(PointOutsideDomain):
        metric_at(m, (2.0, 0.0))
    with pytest.raises(PoleSingularity) as exc:
        metric_at(m, (0.0, 0.0))
    assert exc.value.gauss_curvature == pytest.approx(-1.0)


@pytest.mark.parametrize("k,ref", [(1.0, np.sin), (-1.0, np.sinh)])
def test_constant_curvature_profiles(k, ref):
    prof = build_profile_from_curvature(CurvatureSpec(((0.0, k), (1.0, k))), 3.0 if k > 0 else 3.1, 1e-4)
    r = np.linspace(0.0, 3.0, 601)
    assert np.max(np.abs(prof.f(r) - ref(r))) < 1e-6


def test_flat_profile():
    prof = build_profile_from_curvature(CurvatureSpec(((0.0, 0.0), (1.0, 0.0))), 3.0, 1e-4)
    r = np.linspace(0.0, 3.0, 301)
    assert np.max(np.abs(prof.f(r) - r)) < 1e-9


def test_profile_collapse_reports_radius():
    with pytest.raises(ProfileCollapse) as exc:
        build_profile_from_curvature(CurvatureSpec(((0.0, 1.0), (1.0, 1.0))), 4.0, 1e-4)
    assert exc.value.r_star == pytest.approx(math.pi, abs=1e-6)


def test_profile_truncates_when_allowed():
    prof = build_profile_from_curvature(CurvatureSpec(((0.0, 1.0), (1.0, 1.0))), 4.0, 1e-4,
                                        allow_truncate=True)
    assert prof.r_end == pytest.approx(math.pi, abs=1e-3)


def test_profile_recovers_curvature():
    spec = CurvatureSpec(((0.0, 1.0), (0.7, 1.0), (1.0, -0.6), (1.7, -1.0)))
    prof = build_profile_from_curvature(spec, 3.0, 1e-4)
    r, f = prof.r, prof._f
    h = prof.step
    fpp = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    inner = f[1:-1] > 1e-3
    K = -fpp[inner] / f[1:-1][inner]
    assert np.max(np.abs(K - spec(r[1:-1][inner]))) <= 1e-4


def test_pchip_stays_in_knot_range():
    spec = CurvatureSpec(((0.0, 1.0), (0.5, 1.0), (0.6, -0.3), (1.7, -1.0)))
    K = spec(np.linspace(0, 3, 5001))
    assert K.max() <= 1.0 and K.min() >= -1.0


def test_sphere_as_warped_surface():
    R0 = 1.7
    m = WarpedSurface(ClosedFormProfile("sin", R0), 5.0)
    assert metric_at(m, (1.1, 0.0)).gauss_curvature == pytest.approx(1 / R0**2, abs=1e-8)


def test_invalid_descriptors():
    with pytest.raises(InvalidInput):
        Sphere(0.0)
    with pytest.raises(InvalidInput):
        HyperbolicPlane(1.0)
    with pytest.raises(InvalidInput):
        FlatTorus(1.0, -1.0)


def test_descriptor_round_trip():
    for m in [Sphere(2.0), HyperbolicPlane(-0.5), FlatTorus(1.0, 3.0),
              WarpedSurface(ClosedFormProfile("sinh"), 6.0)]:
        d = json.loads(json.dumps(descriptor_to_dict(m)))
        assert descriptor_to_dict(descriptor_from_dict(d)) == descriptor_to_dict(m)


def test_descriptor_errors_name_field():
    with pytest.raises(InvalidInput, match="radius"):
        descriptor_from_dict({"kind": "sphere"})
    with pytest.raises(InvalidInput, match="kind"):
        descriptor_from_dict({"kind": "klein"})


_MANIFOLDS = [Sphere(1.3), HyperbolicPlane(-1.0), FlatTorus(1.0, 2.0),
              WarpedSurface(ClosedFormProfile("sin", 1.0), 3.0)]


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(range(len(_MANIFOLDS))), st.floats(0.01, 0.99), st.floats(0, 2 * math.pi))
def test_metric_positive_definite(i, u, th):
    m = _MANIFOLDS[i]
    r = u * (m.r_max if math.isfinite(getattr(m, "r_max", math.inf)) else 6.0)
    s = metric_at(m, (r, th))
    assert np.allclose(s.metric, s.metric.T)
    assert np.all(np.linalg.eigvalsh(s.metric) > 0)


def test_metric_positive_definite_bulk():
    rng = np.random.default_rng(0)
    for m in _MANIFOLDS:
        top = m.r_max if math.isfinite(getattr(m, "r_max", math.inf)) else 6.0
        for r, th in zip(rng.uniform(1e-3, 0.999 * top, 2500), rng.uniform(0, 2 * math.pi, 2500)):
            g = metric_at(m, (r, th)).metric
            assert g[0, 0] > 0 and g[1, 1] > 0
