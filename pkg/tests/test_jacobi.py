import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radiuslab import (ClosedFormProfile, CurvatureSpec, FlatTorus, HyperbolicPlane, InvalidInput, Sphere,
                       WarpedSurface, build_profile_from_curvature, first_conjugate_time,
                       first_focal_time, integrate_geodesic, integrate_jacobi, riccati_certify,
                       unit_state)

SPHERE = Sphere(1.0)


def _path(m, p, a, T, step=1e-3):
    return integrate_geodesic(m, unit_state(m, p, a), T, step)


def test_sphere_jacobi_is_sine():
    tr = integrate_jacobi(SPHERE, _path(SPHERE, (0.3, 0.0), 1.0, 4.0))
    assert np.max(np.abs(tr.j - np.sin(tr.t))) < 1e-6
    assert tr.first_conjugate_time == pytest.approx(math.pi, abs=1e-6)
    assert tr.first_focal_time == pytest.approx(math.pi / 2, abs=1e-6)
    assert tr.wronskian_drift <= 1e-6


def test_flat_jacobi_is_linear():
    m = FlatTorus(1.0, 1.0)
    tr = integrate_jacobi(m, _path(m, (0.1, 0.2), 0.3, 5.0))
    assert np.allclose(tr.j, tr.t, atol=1e-12)
    assert math.isinf(tr.first_conjugate_time) and math.isinf(tr.first_focal_time)


def test_hyperbolic_jacobi_is_sinh():
    m = WarpedSurface(ClosedFormProfile("sinh"), 6.0)
    tr = integrate_jacobi(m, _path(m, (0.2, 0.0), 0.0, 5.0))
    assert np.max(np.abs(tr.j - np.sinh(tr.t)) / np.cosh(tr.t)) < 1e-6
    assert math.isinf(tr.first_focal_time)


def test_first_times_wrappers():
    path = _path(SPHERE, (1.0, 0.5), 2.0, 2 * math.pi)
    assert first_conjugate_time(SPHERE, path) == pytest.approx(math.pi, abs=1e-6)
    assert first_focal_time(SPHERE, path) == pytest.approx(math.pi / 2, abs=1e-6)


def test_hyperbolic_horizon_20():
    path = _path(HyperbolicPlane(-1.0), (0.0, 0.0), 0.3, 20.0, step=2e-3)
    assert math.isinf(first_conjugate_time(HyperbolicPlane(-1.0), path))
    cert = riccati_certify(HyperbolicPlane(-1.0), path)
    assert cert.certified and cert.margin == pytest.approx(0.75 * math.pi, abs=1e-6)


def test_riccati_sphere_blows_down():
    cert = riccati_certify(SPHERE, _path(SPHERE, (0.5, 0.0), 0.0, 3.2))
    assert not cert
    assert cert.blowup_time == pytest.approx(math.pi, abs=1e-6)


def test_riccati_finite_start():
    m = WarpedSurface(ClosedFormProfile("sinh"), 6.0)
    assert riccati_certify(m, _path(m, (0.5, 0.0), 0.0, 4.0), u0=1.0)
    assert not riccati_certify(SPHERE, _path(SPHERE, (0.5, 0.0), 0.0, 2.0), u0=0.0)
    with pytest.raises(InvalidInput):
        riccati_certify(SPHERE, _path(SPHERE, (0.5, 0.0), 0.0, 1.0), u0=-math.inf)


def test_zero_initial_data_rejected():
    with pytest.raises(InvalidInput):
        integrate_jacobi(SPHERE, _path(SPHERE, (0.5, 0.0), 0.0, 1.0), 0.0, 0.0)


def test_exports(tmp_path):
    tr = integrate_jacobi(SPHERE, _path(SPHERE, (0.5, 0.0), 0.0, 0.05))
    tr.to_csv(tmp_path / "j.csv")
    assert (tmp_path / "j.csv").read_text().splitlines()[0] == "t,j,jprime"
    summary = json.loads(tr.to_json())
    assert summary["first_conjugate"] == {"exceeds_horizon": pytest.approx(0.05)}


def test_gulliver_focal_chord(gulliver):
    m, cfg = gulliver
    # the radial chord through the pole, from just outside the cap
    path = _path(m, (0.83, 0.0), math.pi, 4.0)
    tr = integrate_jacobi(m, path)
    assert math.isfinite(tr.first_focal_time)
    assert math.isinf(tr.first_conjugate_time)


def _bump_profile(kmax):
    spec = CurvatureSpec(((0.0, kmax), (0.6, kmax), (1.0, 0.3 * kmax), (1.6, 0.1)))
    return WarpedSurface(build_profile_from_curvature(spec, 4.0, 1e-4), 4.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0, math.pi))
def test_sturm_bounds(kmax, a):
    m = _bump_profile(kmax)
    path = integrate_geodesic(m, unit_state(m, (0.3, 0.0), a), 3.5, on_exit="truncate")
    tc = first_conjugate_time(m, path)
    # K <= kmax everywhere on this surface
    assert tc >= math.pi / math.sqrt(kmax) - 1e-4


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 3.0))
def test_sturm_upper_bound_sphere(R0):
    m = Sphere(R0)
    path = integrate_geodesic(m, unit_state(m, (0.1, 0.0), 0.5), 1.1 * math.pi * R0)
    assert first_conjugate_time(m, path) <= math.pi * R0 + 1e-4


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0, 2 * math.pi))
def test_scaling_leaves_times(c, a):
    path = _path(SPHERE, (0.4, 0.0), a, 3.5)
    base = integrate_jacobi(SPHERE, path)
    scaled = integrate_jacobi(SPHERE, path, 0.0, c)
    assert np.allclose(scaled.j, c * base.j, rtol=1e-9, atol=1e-12)
    assert scaled.first_conjugate_time == pytest.approx(base.first_conjugate_time, abs=1e-9)
    assert scaled.first_focal_time == pytest.approx(base.first_focal_time, abs=1e-9)


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(["sphere", "bump", "sinh"]), st.floats(0.05, 1.0), st.floats(0, math.pi))
def test_detectors_agree_and_focal_first(kind, r, a):
    m = {"sphere": SPHERE, "bump": _bump_profile(1.5),
         "sinh": WarpedSurface(ClosedFormProfile("sinh"), 6.0)}[kind]
    path = integrate_geodesic(m, unit_state(m, (r, 0.0), a), 3.5, on_exit="truncate")
    tr = integrate_jacobi(m, path)
    cert = riccati_certify(m, path)
    assert cert.certified == math.isinf(tr.first_conjugate_time)
    assert tr.first_focal_time <= tr.first_conjugate_time
    if math.isfinite(tr.first_conjugate_time):
        assert tr.first_focal_time < tr.first_conjugate_time
