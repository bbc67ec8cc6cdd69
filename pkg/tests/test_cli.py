import json

import pytest

from radiuslab.cli import dumps, jsonable, run


def _run(tmp_path, *args):
    out = tmp_path / "out.json"
    code = run([*args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_ratio_command(tmp_path):
    code, d = _run(tmp_path, "ratio", "--R", "1.7", "--D", "3.0", "--inj-g", "35", "--epsilon", "0.1")
    assert code == 0
    assert d["schema"] == "radius-lab/1"
    assert d["ratio_upper"] == pytest.approx(0.0901, abs=1e-4)
    assert d["config"]["seed"] == 42


def test_invalid_input_exit_code(tmp_path):
    assert run(["ratio", "--R", "1.7", "--D", "3.0", "--inj-g", "1", "--epsilon", "0.1"]) == 2
    assert run(["ratio", "--R", "-1", "--D", "3.0", "--inj-g", "5", "--epsilon", "0.1"]) == 2
    assert run(["radii", "--manifold", "klein"]) == 2
    assert run(["radii", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["scan", "--config", str(bad)]) == 2


def test_missing_field_reported(tmp_path, capsys):
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"kind": "torus", "l1": 1.0}))
    assert run(["scan", "--config", str(f)]) == 2
    assert "manifold.l2" in capsys.readouterr().err


def test_convexity_torus_witness(tmp_path):
    code, d = _run(tmp_path, "convexity", "--manifold", "torus", "--l1", "1", "--l2", "1", "--s", "0.26")
    assert code == 0
    assert d["convex"] is False
    assert d["witness"]["mode"] == "LeavesBall"
    assert d["witness"]["seed"] == 42


def test_deterministic_output(tmp_path):
    args = ["convexity", "--manifold", "torus", "--s", "0.24", "--n-pairs", "100"]
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run([*args, "--out", str(a)]) == 0
    assert run([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "T" not in json.loads(a.read_text()).get("timestamp", "")
    assert (tmp_path / "a.json.log").exists()


def test_trace_command(tmp_path):
    csv_path = tmp_path / "g.csv"
    jac = tmp_path / "j.csv"
    code, d = _run(tmp_path, "trace", "--manifold", "sphere", "--point", "0.5,0", "--length", "3.5",
                   "--csv", str(csv_path), "--jacobi-csv", str(jac))
    assert code == 0
    assert d["jacobi"]["first_conjugate"] == pytest.approx(3.14159265359)
    assert d["riccati"]["certified"] is False
    assert csv_path.read_text().startswith("t,r,theta,vr,vtheta")
    assert jac.read_text().startswith("t,j,jprime")


def test_trace_infinite_is_horizon(tmp_path):
    code, d = _run(tmp_path, "trace", "--manifold", "torus", "--length", "2")
    assert d["jacobi"]["first_conjugate"] == {"exceeds_horizon": 2.0}


def test_scan_command(tmp_path):
    csv_path = tmp_path / "s.csv"
    code, d = _run(tmp_path, "scan", "--manifold", "torus", "--n-dirs", "8", "--horizon", "3",
                   "--csv", str(csv_path))
    assert code == 0
    assert d["cut"][0] == pytest.approx(0.5, abs=1e-6)
    assert d["conjugate"][0] == {"exceeds_horizon": 3.0}
    assert csv_path.read_text().splitlines()[0] == "angle,conjugate,focal,cut,loop"


def test_gulliver_build_command(tmp_path):
    csv_path = tmp_path / "p.csv"
    code, d = _run(tmp_path, "gulliver-build", "--csv", str(csv_path))
    assert code == 0
    assert d["curvature_bound"] <= 1 + 1e-9
    assert csv_path.read_text().startswith("r,f,fprime,K")


def test_gulliver_config_file(tmp_path):
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"r_cap": 3.0}))
    assert run(["gulliver-build", "--config", str(f)]) == 2


def test_computation_error_exit_one(tmp_path):
    # a large cap acquires conjugate points (or loses its focal ones), so certification fails
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"r_cap": 1.2, "n_geodesics": 20, "r_max": 2.3}))
    code, d = _run(tmp_path, "gulliver-certify", "--config", str(f), "--no-stability")
    assert code == 1
    assert d["schema"] == "radius-lab/1"


def test_jsonable_formats():
    assert jsonable(1 / 3) == 0.333333333333
    assert jsonable(float("inf"), horizon=20) == {"exceeds_horizon": 20.0}
    assert jsonable(float("nan")) is None
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_radii_sphere(tmp_path):
    code, d = _run(tmp_path, "radii", "--manifold", "sphere", "--radius", "1")
    assert code == 0
    assert d["inj"] == pytest.approx(3.14159265359)
    assert d["r"] == pytest.approx(1.57079632679)
    assert all(c["ok"] for c in d["checks"].values())
