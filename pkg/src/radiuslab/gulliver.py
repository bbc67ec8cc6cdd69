"""Spherical cap glued to a hyperbolic annulus: focal points without conjugate points.

The curvature is ``+1`` on ``[0, r_cap]``, decreases monotonically to ``-1``
at ``R`` and stays ``-1`` out to the end of the chart.  ``certify`` sweeps
geodesics to check that no Jacobi field vanishing at its start vanishes
again, while some geodesic inside the ball ``B(pole, R)`` carries a focal
point.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import _flow
from .errors import InvalidInput, NotConverged, ProfileCollapse, SweepIncomplete, UnsupportedFamily
from .geodesic import _shoot
from .manifold import (CurvatureSpec, HyperbolicPlane, Sphere, WarpedSurface,
                       build_profile_from_curvature)

__all__ = [
    "GulliverConfig",
    "CertificationReport",
    "RatioBound",
    "build_gulliver",
    "gulliver_surface",
    "certify",
    "ratio_bound",
    "radial_screen",
    "profile_csv",
    "default_baselines",
    "search_config",
    "default_config",
    "worker_count",
]

_TWO_PI = 2.0 * math.pi


def worker_count() -> int:
    """Worker cap from ``RADIUS_LAB_THREADS`` (sweeps here are vectorized, so 1 suffices)."""
    try:
        return max(1, int(os.environ.get("RADIUS_LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GulliverConfig:
    r_cap: float
    R: float = 1.7
    r_max: float = 4.7
    transition: tuple = ()
    n_geodesics: int = 1000
    horizon: float = 20.0
    step: float = 1e-3
    profile_step: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "transition", tuple((float(r), float(k)) for r, k in self.transition))
        if not (0 <= self.r_cap < self.R < self.r_max):
            raise InvalidInput("need 0 <= r_cap < R < r_max")
        prev_r, prev_k = self.r_cap, 1.0
        for r, k in self.transition:
            if not (prev_r < r < self.R):
                raise InvalidInput("transition knots must lie strictly inside (r_cap, R), increasing")
            if not (-1.0 <= k <= prev_k):
                raise InvalidInput("transition curvature must decrease within [-1, 1]")
            prev_r, prev_k = r, k
        if self.n_geodesics < 1 or not self.horizon > 0 or not self.step > 0 or not self.profile_step > 0:
            raise InvalidInput("n_geodesics, horizon, step and profile_step must be positive")

    @property
    def R_ball(self) -> float:
        return self.R

    @property
    def knots(self):
        head = [(0.0, 1.0)] if self.r_cap == 0 else [(0.0, 1.0), (self.r_cap, 1.0)]
        return tuple(head + list(self.transition) + [(self.R, -1.0)])

    def to_dict(self):
        d = asdict(self)
        d["transition"] = [list(k) for k in self.transition]
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in ("r_cap", "R", "r_max", "transition", "n_geodesics", "horizon",
                                   "step", "profile_step") if k in d}
        if "r_cap" not in known:
            raise InvalidInput("missing field r_cap")
        return cls(**known)


def build_gulliver(config: GulliverConfig):
    """Tabulated warp profile for the cap-to-hyperbolic curvature of ``config``."""
    spec = CurvatureSpec(config.knots)
    return build_profile_from_curvature(spec, config.r_max, config.profile_step)


def gulliver_surface(config: GulliverConfig) -> WarpedSurface:
    return WarpedSurface(build_gulliver(config), config.r_max)


def profile_csv(profile, path, r_max: float, n: int = 2001) -> None:
    """Write ``r, f, fprime, K`` samples of a profile for plotting."""
    r = np.linspace(0.0, r_max, n)
    f, fp, K = profile.evaluate(r)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "f", "fprime", "K"])
        for row in zip(r, f, fp, K):
            w.writerow([f"{x:.12g}" for x in row])


def radial_screen(config: GulliverConfig, h: float = 1e-3) -> float:
    """Cheap screen along the line through the pole.

    Integrates the Riccati angle ``psi' = cos^2 psi + K sin^2 psi`` from the
    far hyperbolic end (where it settles at pi/4) across the cap and returns
    ``3 pi/4 - max psi``.  A negative value means this line already acquires
    a conjugate point: once ``psi`` passes ``3 pi/4`` in curvature ``-1`` it
    runs on to ``pi``.
    """
    spec = CurvatureSpec(config.knots)
    L = config.R + 1.0
    s = np.arange(-L, L + h / 2, h)
    K = spec(np.abs(s))
    Kh = spec(np.abs(s[:-1] + 0.5 * h))
    psi = math.pi / 4
    best = psi

    def g(p, k):
        c, sn = math.cos(p), math.sin(p)
        return c * c + k * sn * sn

    for i in range(len(s) - 1):
        k0, km, k1 = K[i], Kh[i], K[i + 1]
        a = g(psi, k0)
        b = g(psi + 0.5 * h * a, km)
        c = g(psi + 0.5 * h * b, km)
        d = g(psi + h * c, k1)
        psi += h / 6 * (a + 2 * b + 2 * c + d)
        best = max(best, psi)
    return 0.75 * math.pi - best


# ---------------------------------------------------------------------------
# certification


@dataclass
class CertificationReport:
    config: GulliverConfig
    no_conjugate: bool
    riccati_margin: float
    n_geodesics: int
    n_conjugate: int
    focal_found: bool
    best_focal: dict | None
    r_f_ball: float
    diameter: float
    diameter_raw: float
    diameter_angle: float
    stability: dict = field(default_factory=dict)
    curvature_bound: float = math.nan
    unresolved_exits: int = 0
    wronskian_drift: float = 0.0

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("no_conjugate", "riccati_margin", "n_geodesics", "n_conjugate",
                                           "focal_found", "best_focal", "r_f_ball", "diameter",
                                           "diameter_raw", "diameter_angle", "stability",
                                           "curvature_bound", "unresolved_exits", "wronskian_drift")}
        d["config"] = self.config.to_dict()
        return d


def _grid(config, r_lim, n=None):
    """Start radius x start angle grid covering the chart (angles in [0, pi] by reflection)."""
    n = n or config.n_geodesics
    n_a = max(8, int(round(math.sqrt(n * 0.6))))
    n_r = int(math.ceil(n / n_a))
    rho = np.linspace(0.0, r_lim - 0.05, n_r)
    alpha = np.linspace(0.0, math.pi, n_a)
    R, A = np.meshgrid(rho, alpha, indexing="ij")
    return R.ravel(), A.ravel()


def _sweep(m, rho, alpha, T, h):
    sys = _flow.system_for(m)
    pts = np.stack([rho, np.zeros_like(rho)], axis=1)
    X0, P0 = sys.from_angle(pts, alpha)
    Z0, w = _flow.initial_state(sys, X0, P0)
    fl = _flow.propagate(sys, Z0, w, T, h)
    conj, focal, blow, psi, unres = _flow.continue_tail(sys, fl, T)
    return fl, conj, focal, blow, psi, unres


def _focal_in_ball(m, rho, alpha, tf, R, h):
    """Focal time where the whole segment up to the focal point stays in the closed R-ball."""
    out = np.full(len(rho), np.inf)
    ok = np.isfinite(tf) & (rho <= R)
    if not ok.any():
        return out
    sys = _flow.system_for(m)
    idx = np.nonzero(ok)[0]
    X0, P0 = sys.from_angle(np.stack([rho[idx], np.zeros(len(idx))], axis=1), alpha[idx])
    Z0, w = _flow.initial_state(sys, X0, P0)
    fl = _flow.propagate(sys, Z0, w, tf[idx], h, stride=1, events=False)
    S = fl.samples
    d = sys.dim
    r = sys.radius(S[:, :, :d].reshape(-1, d)).reshape(S.shape[:2])
    rmax = np.nanmax(np.maximum(r, sys.radius(fl.Z[:, :d])[:, None]), axis=1)
    inside = (rmax <= R + 1e-9) & np.isnan(fl.exit_t)
    out[idx[inside]] = tf[idx][inside]
    return out


def _focal_objective(m, rho, alpha, R, T, h):
    _, _, focal, _, _, _ = _sweep(m, rho, alpha, T, h)
    return _focal_in_ball(m, rho, alpha, np.where(np.isnan(focal), np.inf, focal), R, h)


def _refine_focal(m, rho0, a0, best, R, h, levels=6, n=7):
    """Zoom a (start radius, angle) grid around the best in-ball focal geodesic."""
    wr, wa = 0.1, 0.1
    for _ in range(levels):
        rr = np.clip(rho0 + np.linspace(-wr, wr, n), 0.0, R)
        aa = np.clip(a0 + np.linspace(-wa, wa, n), 0.0, math.pi)
        Rg, Ag = np.meshgrid(rr, aa, indexing="ij")
        v = _focal_objective(m, Rg.ravel(), Ag.ravel(), R, min(best + 0.2, 2 * R + 1), h)
        k = int(np.argmin(v))
        if v[k] < best:
            best, rho0, a0 = float(v[k]), float(Rg.ravel()[k]), float(Ag.ravel()[k])
        wr /= 3
        wa /= 3
    return best, rho0, a0


def _diameter(m, R, h, n_phi=48):
    """Largest distance between boundary points of the R-ball (by symmetry x = (R, 0))."""
    phi = np.linspace(0.0, math.pi, n_phi + 1)[1:]
    x = (R, 0.0)

    def dist(ph):
        Y = np.stack([np.full(len(ph), R), ph], axis=1)
        res = _shoot(m, x, Y, max_len=2 * R + 0.1, n_starts=128, step=h)
        return np.array([min(L for _, L, _ in r) if r else np.nan for r in res])

    d = dist(phi)
    if np.any(np.isnan(d)):
        raise NotConverged("no certified geodesic between some boundary points")
    k = int(np.argmax(d))
    best, best_phi = float(d[k]), float(phi[k])
    if k < len(phi) - 1:
        # golden-section on the angle for an interior maximum
        a, b = phi[max(k - 1, 0)], phi[k + 1]
        g = 0.5 * (math.sqrt(5) - 1)
        for _ in range(20):
            c, e = b - g * (b - a), a + g * (b - a)
            dc, de = dist(np.array([c, e]))
            if dc > de:
                b = e
            else:
                a = c
        mid = 0.5 * (a + b)
        dm = float(dist(np.array([mid]))[0])
        if dm > best:
            best, best_phi = dm, mid
    return best, best_phi


def _chart_end(m, config):
    return min(config.r_max, float(m.r_max))


def _core(m, config, h, n):
    rho, alpha = _grid(config, _chart_end(m, config), n)
    fl, conj, focal, blow, psi, unres = _sweep(m, rho, alpha, config.horizon, h)
    focal = np.where(np.isnan(focal), np.inf, focal)
    n_conj = int(np.sum(~np.isnan(conj) | ~np.isnan(blow)))
    margin = float(math.pi - np.max(psi))
    inball = _focal_in_ball(m, rho, alpha, focal, config.R, h)
    best = None
    rf = math.inf
    if np.isfinite(inball).any():
        k = int(np.argmin(inball))
        rf, r0, a0 = _refine_focal(m, rho[k], alpha[k], float(inball[k]), config.R, h)
        best = {"time": rf, "start_radius": r0, "angle": a0}
    return dict(rho=rho, alpha=alpha, n_conj=n_conj, margin=margin, rf=rf, best=best,
                unres=int(unres.sum()), wronskian=float(fl.wronskian_drift.max()))


def certify(m: WarpedSurface, config: GulliverConfig, stability: bool = True,
            diameter: bool = True) -> CertificationReport:
    """Sweep geodesics of the glued surface and certify its focal/conjugate behaviour."""
    if not isinstance(m, (Sphere, HyperbolicPlane, WarpedSurface)):
        raise UnsupportedFamily("certification needs a rotationally symmetric surface")
    r_lim = _chart_end(m, config)
    if r_lim < config.R + 0.5:
        raise InvalidInput("chart must extend at least 0.5 beyond R")
    h = config.step
    base = _core(m, config, h, config.n_geodesics)
    if base["unres"] and base["n_conj"] == 0:
        # an exit without a conjugate point leaves the verdict open
        raise SweepIncomplete(f"{base['unres']} geodesics left the chart unresolved",
                              counts={"unresolved": base["unres"]})
    best = base["best"]
    if best is not None:
        sys = _flow.system_for(m)
        X0, P0 = sys.from_angle([[best["start_radius"], 0.0]], [best["angle"]])
        Z0, w = _flow.initial_state(sys, X0, P0)
        Zf, _ = _flow.advance(sys, Z0, best["time"], h)
        d = sys.dim
        pt = sys.to_public(Zf[:, :d], Zf[:, d:2 * d])[0][0]
        best["focal_point"] = [float(pt[0]), float(pt[1])]
        best["base_point"] = [best["start_radius"], 0.0]
    Kabs = float(np.max(np.abs(m.profile.curvature(np.linspace(0.0, r_lim, 20001)))))
    D_raw, D_phi = (math.nan, math.nan)
    if diameter:
        D_raw, D_phi = _diameter(m, config.R, h)
    D = min(D_raw, 2 * config.R) if diameter else math.nan
    stab = {}
    if stability:
        half = _core(m, config, h / 2, config.n_geodesics)
        stab["step"] = h
        stab["r_f_ball_half_step"] = half["rf"]
        stab["r_f_ball_rel_change"] = _rel(base["rf"], half["rf"])
        stab["no_conjugate_half_step"] = half["n_conj"] == 0
        dbl = _core(m, config, h, 2 * config.n_geodesics)
        stab["r_f_ball_double_n"] = dbl["rf"]
        stab["r_f_ball_double_n_rel_change"] = _rel(base["rf"], dbl["rf"])
        stab["no_conjugate_double_n"] = dbl["n_conj"] == 0
        if diameter:
            Dh, _ = _diameter(m, config.R, h / 2)
            Dh = min(Dh, 2 * config.R)
            stab["diameter_half_step"] = Dh
            stab["diameter_rel_change"] = _rel(D, Dh)
    return CertificationReport(config, base["n_conj"] == 0, base["margin"], len(base["rho"]),
                               base["n_conj"], best is not None, best, base["rf"], D, D_raw, D_phi,
                               stab, Kabs, base["unres"], base["wronskian"])


def _rel(a, b):
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b) / max(abs(a), 1e-300)


# ---------------------------------------------------------------------------
# parameter search and the pinned default


def _candidates(R):
    for r_cap in np.round(np.arange(0.78, 0.39, -0.02), 2):
        for delta in (0.02, 0.05, 0.1):
            for k_mid in (-0.95, -0.9, -0.8):
                yield float(r_cap), ((float(round(r_cap + delta, 4)), k_mid),)


def search_config(R: float = 1.7, r_max: float = 4.7, screen_margin: float = 0.05,
                  riccati_margin: float = 0.05, log=None, cache: str | None = None) -> GulliverConfig:
    """First configuration (largest cap first) that certifies with margin.

    A configuration is accepted when the radial screen leaves
    ``screen_margin`` below ``3 pi/4``, the full sweep finds no conjugate
    point with Riccati margin at least ``riccati_margin``, and an in-ball
    focal time no longer than ``2R`` exists.
    """
    tried = {}
    if cache and os.path.exists(cache):
        with open(cache) as fh:
            tried = json.load(fh)
    for r_cap, trans in _candidates(R):
        cfg = GulliverConfig(r_cap=r_cap, R=R, r_max=r_max, transition=trans)
        key = json.dumps(cfg.to_dict(), sort_keys=True)
        if key in tried and not tried[key]:
            continue
        ok = False
        try:
            scr = radial_screen(cfg)
            if scr >= screen_margin:
                m = gulliver_surface(cfg)
                rep = certify(m, cfg, stability=False, diameter=False)
                ok = (rep.no_conjugate and rep.riccati_margin >= riccati_margin and rep.focal_found
                      and rep.r_f_ball <= 2 * R)
                if log:
                    log(f"r_cap={r_cap} trans={trans} screen={scr:.4f} conj={rep.n_conjugate} "
                        f"margin={rep.riccati_margin:.4f} r_f_ball={rep.r_f_ball:.6g}")
            elif log:
                log(f"r_cap={r_cap} trans={trans} screen={scr:.4f} (rejected)")
        except ProfileCollapse:
            ok = False
        tried[key] = ok
        if cache:
            with open(cache, "w") as fh:
                json.dump(tried, fh, indent=1, sort_keys=True)
        if ok:
            return cfg
    raise NotConverged("no configuration in the search grid certified")


def default_config() -> GulliverConfig:
    """The pinned configuration shipped with the package."""
    data = json.loads(resources.files("radiuslab").joinpath("data/gulliver_default.json").read_text())
    return GulliverConfig.from_dict(data["config"])


def default_baselines() -> dict:
    data = json.loads(resources.files("radiuslab").joinpath("data/gulliver_default.json").read_text())
    return data.get("baselines", {})


# ---------------------------------------------------------------------------
# ratio arithmetic


@dataclass(frozen=True)
class RatioBound:
    R: float
    D: float
    inj_g: float
    epsilon: float
    systole_g: float
    required_inj_g: float
    inj_h_lower: float
    ratio_upper: float
    clears: bool

    def to_dict(self):
        return asdict(self)


def ratio_bound(R: float, D: float, inj_g: float, epsilon: float) -> RatioBound:
    """Upper bound on convexity over injectivity radius after the ball surgery.

    ``inj_g`` must exceed ``max{2R, D/epsilon + R}`` for the bound to fall
    below ``epsilon``; ``clears`` records whether it does.
    """
    for name, v in (("R", R), ("D", D), ("epsilon", epsilon)):
        if not v > 0:
            raise InvalidInput(f"{name} must be positive")
    if not inj_g > R:
        raise InvalidInput("inj_g must exceed R")
    required = max(2 * R, D / epsilon + R)
    lower = inj_g - R
    ratio = D / lower
    return RatioBound(R, D, inj_g, epsilon, 2 * inj_g, required, lower, ratio, inj_g > required)
