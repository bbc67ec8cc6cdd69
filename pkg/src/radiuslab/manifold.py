"""Supported surfaces, their metrics, and radial warp profiles.

Every surface is two-dimensional.  Rotationally symmetric families
(``Sphere``, ``HyperbolicPlane``, ``WarpedSurface``) use geodesic polar
coordinates ``(r, theta)`` about a pole, with metric ``dr^2 + f(r)^2 dtheta^2``
and Gaussian curvature ``K = -f''/f``.  ``FlatTorus`` uses Cartesian
coordinates on the fundamental domain ``[0, l1) x [0, l2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidInput, PointOutsideDomain, PoleSingularity, ProfileCollapse

__all__ = [
    "ClosedFormProfile",
    "CurvatureSpec",
    "TabulatedProfile",
    "build_profile_from_curvature",
    "Manifold",
    "Sphere",
    "HyperbolicPlane",
    "FlatTorus",
    "WarpedSurface",
    "MetricSample",
    "metric_at",
    "descriptor_from_dict",
    "descriptor_to_dict",
]

DEFAULT_PROFILE_STEP = 1e-4


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class ClosedFormProfile:
    """Warp function given in closed form.

    ``kind='sin'``      f = a sin(r/a),   K = 1/a^2
    ``kind='sinh'``     f = a sinh(r/a),  K = -1/a^2
    ``kind='identity'`` f = r,            K = 0
    """

    kind: str
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sin", "sinh", "identity"):
            raise InvalidInput(f"unknown closed-form profile {self.kind!r}")
        if not self.scale > 0:
            raise InvalidInput("profile scale must be positive")

    @property
    def first_zero(self) -> float:
        return math.pi * self.scale if self.kind == "sin" else math.inf

    @property
    def pole_curvature(self) -> float:
        return self.curvature(0.0)

    def evaluate(self, r):
        """Return ``(f, f', K)`` at ``r`` (scalar or array)."""
        r = np.asarray(r, dtype=float)
        a = self.scale
        if self.kind == "sin":
            f = a * np.sin(r / a)
            fp = np.cos(r / a)
            K = np.full_like(r, 1.0 / a**2)
        elif self.kind == "sinh":
            f = a * np.sinh(r / a)
            fp = np.cosh(r / a)
            K = np.full_like(r, -1.0 / a**2)
        else:
            f = r.copy()
            fp = np.ones_like(r)
            K = np.zeros_like(r)
        return f, fp, K

    def f(self, r):
        return self.evaluate(r)[0]

    def fp(self, r):
        return self.evaluate(r)[1]

    def fpp(self, r):
        f, _, K = self.evaluate(r)
        return -K * f

    def curvature(self, r):
        K = self.evaluate(r)[2]
        return float(K) if np.ndim(K) == 0 else K

    def to_dict(self):
        return {"profile": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class CurvatureSpec:
    """Piecewise curvature ``K(r)`` through knots, monotone cubic in between.

    Outside the knot range the end values are held constant.
    """

    knots: tuple

    def __post_init__(self):
        knots = tuple((float(r), float(k)) for r, k in self.knots)
        if len(knots) < 1:
            raise InvalidInput("curvature spec needs at least one knot")
        rs = [r for r, _ in knots]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise InvalidInput("curvature knots must have strictly increasing r")
        if rs[0] < 0:
            raise InvalidInput("curvature knots must start at r >= 0")
        if not all(math.isfinite(k) for _, k in knots):
            raise InvalidInput("curvature values must be finite")
        object.__setattr__(self, "knots", knots)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        rs = np.array([k[0] for k in self.knots])
        ks = np.array([k[1] for k in self.knots])
        if len(rs) == 1:
            return np.full_like(r, ks[0])
        out = PchipInterpolator(rs, ks, extrapolate=False)(np.clip(r, rs[0], rs[-1]))
        return np.where(r <= rs[0], ks[0], np.where(r >= rs[-1], ks[-1], out))

    @property
    def k_min(self) -> float:
        return min(k for _, k in self.knots)

    @property
    def k_max(self) -> float:
        return max(k for _, k in self.knots)


class TabulatedProfile:
    """Warp function tabulated on a uniform grid by integrating f'' = -K f.

    Values between nodes use cubic Hermite interpolation of ``(f, f')``;
    curvature is interpolated linearly between node values.
    """

    kind = "tabulated"

    def __init__(self, spec: CurvatureSpec, step: float, r: np.ndarray, f: np.ndarray,
                 fp: np.ndarray, K: np.ndarray):
        self.spec = spec
        self.step = float(step)
        for arr in (r, f, fp, K):
            arr.setflags(write=False)
        self.r, self._f, self._fp, self._K = r, f, fp, K
        self.r_end = float(r[-1])

    first_zero = math.inf

    @property
    def pole_curvature(self) -> float:
        return float(self._K[0])

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        h = self.step
        n = len(self.r)
        x = r / h
        # NaN radii (finished rows in a batch) map to cell 0 and stay NaN through s
        i = np.clip(np.floor(np.nan_to_num(x)).astype(np.int64), 0, n - 2)
        s = x - i
        f0, f1 = self._f[i], self._f[i + 1]
        d0, d1 = self._fp[i] * h, self._fp[i + 1] * h
        s2 = s * s
        s3 = s2 * s
        f = (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0 + (3 * s2 - 2 * s3) * f1 + (s3 - s2) * d1
        fp = ((6 * s2 - 6 * s) * (f0 - f1) + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1) / h
        K = self._K[i] + s * (self._K[i + 1] - self._K[i])
        return f, fp, K

    def f(self, r):
        return self.evaluate(r)[0]

    def fp(self, r):
        return self.evaluate(r)[1]

    def fpp(self, r):
        f, _, K = self.evaluate(r)
        return -K * f

    def curvature(self, r):
        K = self.evaluate(r)[2]
        return float(K) if np.ndim(K) == 0 else K

    def to_dict(self):
        return {"curvature_knots": [list(k) for k in self.spec.knots], "step": self.step}

    def __repr__(self):
        return f"TabulatedProfile(knots={self.spec.knots!r}, step={self.step}, r_end={self.r_end})"


def build_profile_from_curvature(spec, r_max: float, step: float = DEFAULT_PROFILE_STEP,
                                 allow_truncate: bool = False) -> TabulatedProfile:
    """Solve ``f'' = -K(r) f`` with ``f(0)=0, f'(0)=1`` by RK4 on a uniform grid.

    Raises ProfileCollapse when f returns to zero before ``r_max``; with
    ``allow_truncate`` the table is cut at the last positive node instead.
    """
    if not isinstance(spec, CurvatureSpec):
        spec = CurvatureSpec(tuple(spec))
    if not step > 0:
        raise InvalidInput("step must be positive")
    if not (r_max > 0 and math.isfinite(r_max)):
        raise InvalidInput("r_max must be positive and finite")
    n = int(math.ceil(r_max / step)) + 1
    grid = np.arange(n + 1) * step
    K_nodes = spec(grid)
    K_half = spec(grid[:-1] + 0.5 * step)
    f = np.empty(n + 1)
    fp = np.empty(n + 1)
    y, yp = 0.0, 1.0
    f[0], fp[0] = y, yp
    h = step
    last = n
    Kn = K_nodes.tolist()
    Kh = K_half.tolist()
    for i in range(n):
        k0, km, k1 = Kn[i], Kh[i], Kn[i + 1]
        a1, b1 = yp, -k0 * y
        a2, b2 = yp + 0.5 * h * b1, -km * (y + 0.5 * h * a1)
        a3, b3 = yp + 0.5 * h * b2, -km * (y + 0.5 * h * a2)
        a4, b4 = yp + h * b3, -k1 * (y + h * a3)
        y_new = y + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        yp = yp + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if y_new <= 0.0:
            r_star = grid[i] + h * y / (y - y_new)
            if r_star < r_max and not allow_truncate:
                raise ProfileCollapse(r_star)
            last = i
            break
        y = y_new
        f[i + 1], fp[i + 1] = y, yp
    sl = slice(0, last + 1)
    return TabulatedProfile(spec, step, grid[sl].copy(), f[sl].copy(), fp[sl].copy(), K_nodes[sl].copy())


# ---------------------------------------------------------------------------
# manifold descriptors


class Manifold:
    dimension = 2
    kind = "abstract"
    rotational = False
    homogeneous = False

    @property
    def diameter(self) -> float:
        return math.inf

    def default_horizon(self) -> float:
        d = self.diameter
        return 4.0 * d if math.isfinite(d) else 20.0


@dataclass(frozen=True)
class Sphere(Manifold):
    radius: float = 1.0
    kind = "sphere"
    rotational = True
    homogeneous = True

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInput("sphere radius must be positive")

    @property
    def profile(self):
        return ClosedFormProfile("sin", self.radius)

    @property
    def r_max(self):
        return math.pi * self.radius

    @property
    def diameter(self):
        return math.pi * self.radius

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius}


@dataclass(frozen=True)
class HyperbolicPlane(Manifold):
    curvature: float = -1.0
    kind = "hyperbolic"
    rotational = True
    homogeneous = True

    def __post_init__(self):
        if not self.curvature < 0:
            raise InvalidInput("hyperbolic curvature must be negative")

    @property
    def scale(self):
        return 1.0 / math.sqrt(-self.curvature)

    @property
    def profile(self):
        return ClosedFormProfile("sinh", self.scale)

    r_max = math.inf

    def to_dict(self):
        return {"kind": self.kind, "curvature": self.curvature}


@dataclass(frozen=True)
class FlatTorus(Manifold):
    l1: float = 1.0
    l2: float = 1.0
    kind = "torus"
    homogeneous = True

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise InvalidInput("torus side lengths must be positive")

    @property
    def diameter(self):
        return 0.5 * math.hypot(self.l1, self.l2)

    def wrap(self, point):
        x, y = point
        return (x % self.l1, y % self.l2)

    def to_dict(self):
        return {"kind": self.kind, "l1": self.l1, "l2": self.l2}


@dataclass(frozen=True)
class WarpedSurface(Manifold):
    """``dr^2 + f(r)^2 dtheta^2`` on the disc ``r < r_max``."""

    profile: object
    r_max: float
    kind = "warped"
    rotational = True

    def __post_init__(self):
        if not self.r_max > 0:
            raise InvalidInput("r_max must be positive")
        if self.r_max > self.profile.first_zero:
            raise ProfileCollapse(self.profile.first_zero)
        if isinstance(self.profile, TabulatedProfile) and self.r_max > self.profile.r_end + 1e-12:
            raise ProfileCollapse(self.profile.r_end)

    def to_dict(self):
        d = {"kind": self.kind, "r_max": self.r_max}
        d.update(self.profile.to_dict())
        return d


# ---------------------------------------------------------------------------
# metric data


@dataclass
class MetricSample:
    point: tuple
    metric: np.ndarray
    christoffels: np.ndarray  # christoffels[k, i, j] = Gamma^k_ij
    gauss_curvature: float
    extra: dict = field(default_factory=dict)


def metric_at(m: Manifold, point: Sequence[float]) -> MetricSample:
    """Metric tensor, Christoffel symbols and Gaussian curvature at ``point``."""
    a, b = float(point[0]), float(point[1])
    if isinstance(m, FlatTorus):
        return MetricSample(m.wrap((a, b)), np.eye(2), np.zeros((2, 2, 2)), 0.0)
    r = a
    if r < 0:
        raise PointOutsideDomain(f"radius {r} is negative")
    if isinstance(m, Sphere):
        if r > m.r_max:
            raise PointOutsideDomain(f"colatitude arclength {r} exceeds pi*R")
        at_pole = r == 0.0 or r == m.r_max
    else:
        if r >= m.r_max:
            raise PointOutsideDomain(f"r = {r} is outside the chart r < {m.r_max}")
        at_pole = r == 0.0
    f, fp, K = (float(v) for v in m.profile.evaluate(r))
    if at_pole:
        raise PoleSingularity("theta-dependent metric data is undefined at the pole",
                              gauss_curvature=K)
    g = np.diag([1.0, f * f])
    gam = np.zeros((2, 2, 2))
    gam[0, 1, 1] = -f * fp
    gam[1, 0, 1] = gam[1, 1, 0] = fp / f
    return MetricSample((r, b % (2 * math.pi)), g, gam, K)


# ---------------------------------------------------------------------------
# JSON descriptors


def descriptor_to_dict(m: Manifold) -> dict:
    return m.to_dict()


def _require(d, key, path):
    if key not in d:
        raise InvalidInput(f"missing field {path}{key}")
    try:
        return float(d[key])
    except (TypeError, ValueError):
        raise InvalidInput(f"field {path}{key} must be a number") from None


def descriptor_from_dict(d: dict, path: str = "") -> Manifold:
    """Inverse of ``descriptor_to_dict``; raises InvalidInput naming the bad field."""
    if not isinstance(d, dict):
        raise InvalidInput(f"{path or 'descriptor'} must be an object")
    kind = d.get("kind")
    if kind == "sphere":
        return Sphere(_require(d, "radius", path))
    if kind == "hyperbolic":
        return HyperbolicPlane(_require(d, "curvature", path))
    if kind == "torus":
        return FlatTorus(_require(d, "l1", path), _require(d, "l2", path))
    if kind == "warped":
        r_max = _require(d, "r_max", path)
        if "curvature_knots" in d:
            knots = d["curvature_knots"]
            if not isinstance(knots, list) or not all(
                    isinstance(k, (list, tuple)) and len(k) == 2 for k in knots):
                raise InvalidInput(f"field {path}curvature_knots must be a list of [r, K] pairs")
            step = float(d.get("step", DEFAULT_PROFILE_STEP))
            prof = build_profile_from_curvature(CurvatureSpec(tuple(map(tuple, knots))), r_max, step)
            return WarpedSurface(prof, r_max)
        if "profile" not in d:
            raise InvalidInput(f"missing field {path}profile (or {path}curvature_knots)")
        prof = ClosedFormProfile(str(d["profile"]), float(d.get("scale", 1.0)))
        return WarpedSurface(prof, r_max)
    raise InvalidInput(f"unknown manifold kind {kind!r} at {path}kind")
