"""Scalar Jacobi fields along geodesics of a surface.

In two dimensions a normal Jacobi field is ``J = j E`` with ``E`` a parallel
unit normal, and ``j'' + K(gamma(t)) j = 0``.  The field is integrated
together with the geodesic, so ``K`` is always read at the current point.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _flow
from .errors import InvalidInput, StepTooCoarse
from .geodesic import GeodesicPath, GeodesicState, _internal
from .manifold import Manifold

__all__ = [
    "JacobiTrace",
    "RiccatiCertificate",
    "integrate_jacobi",
    "first_conjugate_time",
    "first_focal_time",
    "riccati_certify",
    "WRONSKIAN_TOL",
]

WRONSKIAN_TOL = 1e-6


@dataclass(frozen=True)
class JacobiTrace:
    t: np.ndarray
    j: np.ndarray
    jp: np.ndarray
    first_conjugate_time: float
    first_focal_time: float
    horizon: float
    wronskian_drift: float = 0.0
    tangency: bool = False

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.j.tolist(), self.jp.tolist()))

    def summary(self) -> dict:
        def fin(x):
            return x if math.isfinite(x) else {"exceeds_horizon": self.horizon}
        return {"first_conjugate": fin(self.first_conjugate_time),
                "first_focal": fin(self.first_focal_time), "horizon": self.horizon}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "j", "jprime"])
            for t, j, jp in zip(self.t, self.j, self.jp):
                w.writerow([f"{t:.12g}", f"{j:.12g}", f"{jp:.12g}"])

    def to_json(self, path=None) -> str:
        text = json.dumps(self.summary(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


@dataclass(frozen=True)
class RiccatiCertificate:
    certified: bool
    margin: float
    location: float | None
    blowup_time: float | None = None

    def __bool__(self):
        return self.certified


def _run(m, path: GeodesicPath, j0, j0p, u0=None):
    sys = _flow.system_for(m)
    X, P = _internal(m, sys, GeodesicState(tuple(path.positions[0]), tuple(path.velocities[0])))
    if u0 is None:
        u0 = math.inf if j0 == 0 else j0p / j0
    Z, w = _flow.initial_state(sys, X, P, j0=j0, j0p=j0p, u0=u0)
    return _flow.propagate(sys, Z, w, path.total_length, path.step, stride=1)


def integrate_jacobi(m: Manifold, path: GeodesicPath, j0: float = 0.0, j0p: float = 1.0) -> JacobiTrace:
    """Solve the Jacobi equation along ``path`` with ``j(0)=j0``, ``j'(0)=j0p``."""
    if j0 == 0 and j0p == 0:
        raise InvalidInput("(j0, j0p) must not both vanish")
    fl = _run(m, path, j0, j0p)
    if fl.wronskian_drift[0] > WRONSKIAN_TOL:
        raise StepTooCoarse(f"Wronskian drift {fl.wronskian_drift[0]:.3g} at step {path.step}")
    keep = ~np.isnan(fl.sample_t[0])
    S = fl.samples[0, keep]
    c_j, c_jp = fl.col("j"), fl.col("jp")
    conj = float(fl.conj_t[0]) if not np.isnan(fl.conj_t[0]) else math.inf
    foc = float(fl.focal_t[0]) if not np.isnan(fl.focal_t[0]) else math.inf
    return JacobiTrace(fl.sample_t[0, keep].copy(), S[:, c_j].copy(), S[:, c_jp].copy(), conj, foc,
                       float(path.total_length), float(fl.wronskian_drift[0]), bool(fl.tangency[0]))


def first_conjugate_time(m: Manifold, path: GeodesicPath) -> float:
    """First zero of ``j`` (with ``j(0)=0, j'(0)=1``) along ``path``; inf if none."""
    return integrate_jacobi(m, path).first_conjugate_time


def first_focal_time(m: Manifold, path: GeodesicPath) -> float:
    """First zero of ``j'`` before the first conjugate point; inf if none."""
    return integrate_jacobi(m, path).first_focal_time


def riccati_certify(m: Manifold, path: GeodesicPath, u0: float = math.inf) -> RiccatiCertificate:
    """Check that ``u = j'/j`` stays finite along ``path``.

    ``u0 = inf`` stands for ``j(0) = 0``.  The margin is ``pi - max psi`` for
    the angle ``psi = arccot(u)``, which reaches ``pi`` exactly at a blow-down.
    """
    if math.isinf(u0) and u0 < 0:
        raise InvalidInput("u0 = -inf is not a valid start")
    j0, j0p = (0.0, 1.0) if math.isinf(u0) else (1.0, float(u0))
    fl = _run(m, path, j0, j0p, u0=u0)
    blow = fl.blow_t[0]
    if not np.isnan(blow):
        return RiccatiCertificate(False, 0.0, float(blow), float(blow))
    keep = ~np.isnan(fl.sample_t[0])
    psi = _flow._psi(fl.samples[0, keep, fl.col("q")], fl.sample_wmode[0, keep])
    k = int(np.argmax(psi))
    return RiccatiCertificate(True, float(math.pi - psi[k]), float(fl.sample_t[0, keep][k]))
