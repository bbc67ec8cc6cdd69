"""Geodesics: integration, exponential map, distances and two-point problems.

Public coordinates are ``(r, theta)`` with velocity ``(vr, vtheta)`` on the
rotationally symmetric families and ``(x, y)`` / ``(vx, vy)`` on the torus.
A state sitting exactly on a pole means "leave along meridian ``theta``".
Directions are given by an angle ``alpha`` measured from ``d/dr`` in the
orthonormal frame ``(d/dr, d/dtheta / f)``; at a pole ``alpha`` is added to
``theta``.  On the torus ``alpha`` is measured from the x axis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import _flow
from .errors import InvalidInput, LeftDomain, NotConverged, PointOutsideDomain, StepTooCoarse
from .manifold import FlatTorus, HyperbolicPlane, Manifold, Sphere, WarpedSurface

__all__ = [
    "GeodesicState",
    "GeodesicPath",
    "ConnectResult",
    "ClosedGeodesic",
    "unit_state",
    "state_speed",
    "integrate_geodesic",
    "exp_map",
    "distance",
    "connect",
    "loop_length_at",
    "shortest_closed_geodesic",
    "DEFAULT_STEP",
]

DEFAULT_STEP = 1e-3
SPEED_TOL = 1e-6
TIE_TOLERANCE = 1e-4
ANGLE_TOLERANCE = 1e-3
N_STARTS = 256
RESIDUAL_TOL = 1e-6
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeodesicState:
    position: tuple
    velocity: tuple


def _check_point(m, point):
    a, b = float(point[0]), float(point[1])
    if m.rotational:
        if a < 0:
            raise PointOutsideDomain(f"negative radius {a}")
        if isinstance(m, Sphere):
            if a > m.r_max + 1e-12:
                raise PointOutsideDomain(f"colatitude arclength {a} exceeds pi*R")
        elif a >= m.r_max:
            raise PointOutsideDomain(f"r = {a} is outside the chart r < {m.r_max}")
    return a, b


def unit_state(m: Manifold, point, angle: float) -> GeodesicState:
    """Unit-speed state at ``point`` heading in direction ``angle``."""
    sys = _flow.system_for(m)
    p = _check_point(m, point)
    X, P = sys.from_angle([p], [angle])
    pts, vel = sys.to_public(X, P)
    if m.rotational and p[0] == 0.0:
        return GeodesicState((0.0, float(pts[0, 1])), (1.0, 0.0))
    if isinstance(m, Sphere) and p[0] >= m.r_max - 1e-14:
        return GeodesicState((m.r_max, float(pts[0, 1])), (-1.0, 0.0))
    return GeodesicState((p[0], p[1] % _TWO_PI if m.rotational else p[1]),
                         (float(vel[0, 0]), float(vel[0, 1])))


def state_speed(m: Manifold, state: GeodesicState) -> float:
    vr, vt = state.velocity
    if m.rotational:
        r = state.position[0]
        if r == 0.0 or (isinstance(m, Sphere) and r >= m.r_max):
            return abs(vr)
        f = float(m.profile.f(r))
        return math.sqrt(vr * vr + (f * vt) ** 2)
    return math.hypot(vr, vt)


def _internal(m, sys, state):
    _check_point(m, state.position)
    return sys.from_public([state.position], [state.velocity])


@dataclass
class GeodesicPath:
    manifold: Manifold
    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    step: float
    total_length: float
    exit_time: float | None = None
    speed_drift: float = 0.0
    clairaut_drift: float = 0.0
    _states: np.ndarray | None = field(default=None, repr=False)

    @property
    def start(self) -> GeodesicState:
        return GeodesicState(tuple(self.positions[0]), tuple(self.velocities[0]))

    @property
    def end(self) -> GeodesicState:
        return GeodesicState(tuple(self.positions[-1]), tuple(self.velocities[-1]))

    @property
    def samples(self):
        return [(float(t), GeodesicState(tuple(p), tuple(v)))
                for t, p, v in zip(self.t, self.positions, self.velocities)]

    def clairaut(self) -> np.ndarray:
        """``f(r)^2 * dtheta/dt`` at every sample (rotational families only)."""
        r = self.positions[:, 0]
        if isinstance(self.manifold, Sphere):
            f = self.manifold.radius * np.sin(r / self.manifold.radius)
        else:
            f = self.manifold.profile.f(r)
        return f * f * self.velocities[:, 1]

    def to_csv(self, path) -> None:
        cols = ("t", "r", "theta", "vr", "vtheta") if self.manifold.rotational else ("t", "x", "y", "vx", "vy")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for t, p, v in zip(self.t, self.positions, self.velocities):
                w.writerow([f"{t:.12g}", f"{p[0]:.12g}", f"{p[1]:.12g}", f"{v[0]:.12g}", f"{v[1]:.12g}"])


def integrate_geodesic(m: Manifold, init: GeodesicState, length: float, step: float = DEFAULT_STEP,
                       on_exit: str = "raise", max_halvings: int = 4) -> GeodesicPath:
    """Integrate the unit-speed geodesic from ``init`` for arclength ``length``.

    The step is halved until the speed drift stays below 1e-6.  If the
    geodesic leaves a bounded chart, ``on_exit='raise'`` raises LeftDomain
    (with the truncated path attached) and ``'truncate'`` returns it.
    """
    if not length > 0:
        raise InvalidInput("length must be positive")
    if not step > 0:
        raise InvalidInput("step must be positive")
    if abs(state_speed(m, init) - 1.0) > 1e-9:
        raise InvalidInput("initial state is not unit speed")
    sys = _flow.system_for(m)
    X, P = _internal(m, sys, init)
    h = step
    for _ in range(max_halvings + 1):
        Z, w = _flow.initial_state(sys, X, P)
        fl = _flow.propagate(sys, Z, w, length, h, stride=1)
        if fl.speed_drift[0] <= SPEED_TOL:
            break
        h *= 0.5
    else:
        raise StepTooCoarse(f"speed drift {fl.speed_drift[0]:.3g} exceeds {SPEED_TOL} at step {h * 2}")
    keep = ~np.isnan(fl.sample_t[0])
    S = fl.samples[0, keep]
    t = fl.sample_t[0, keep]
    d = sys.dim
    pts, vel = sys.to_public(S[:, :d], S[:, d:2 * d])
    exit_t = None if np.isnan(fl.exit_t[0]) else float(t[-1])
    path = GeodesicPath(m, t, pts, vel, float(fl.h[0]), float(t[-1]), exit_t,
                        float(fl.speed_drift[0]), float(fl.clairaut_drift[0]), S)
    if exit_t is not None and on_exit == "raise":
        raise LeftDomain(exit_t, path)
    return path


def _tangent_norm(m, point, v):
    vr, vt = float(v[0]), float(v[1])
    if m.rotational:
        r = point[0]
        if r == 0.0 or (isinstance(m, Sphere) and r >= m.r_max):
            return abs(vr)
        f = float(m.profile.f(r))
        return math.hypot(vr, f * vt)
    return math.hypot(vr, vt)


def exp_map(m: Manifold, p, v, step: float = DEFAULT_STEP):
    """Endpoint of the geodesic with initial point ``p`` and velocity ``v``."""
    p = _check_point(m, p)
    nv = _tangent_norm(m, p, v)
    if nv == 0.0:
        return p
    init = GeodesicState(p, (v[0] / nv, v[1] / nv))
    sys = _flow.system_for(m)
    X, P = _internal(m, sys, init)
    Z, w = _flow.initial_state(sys, X, P)
    fl = _flow.propagate(sys, Z, w, nv, step, events=False)
    if not np.isnan(fl.exit_t[0]):
        raise LeftDomain(float(fl.exit_t[0]))
    pts, _ = sys.to_public(fl.Z[:, :sys.dim], fl.Z[:, sys.dim:2 * sys.dim])
    return (float(pts[0, 0]), float(pts[0, 1]))


# ---------------------------------------------------------------------------
# closed-form models


def _sphere_vec(m, pts):
    pts = np.atleast_2d(np.asarray(pts, float))
    phi = pts[:, 0] / m.radius
    th = pts[:, 1]
    return np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=-1)


def _hyperboloid(m, pts):
    pts = np.atleast_2d(np.asarray(pts, float))
    rho = pts[:, 0] / m.scale
    th = pts[:, 1]
    return np.stack([np.cosh(rho), np.sinh(rho) * np.cos(th), np.sinh(rho) * np.sin(th)], axis=-1)


def _mink(a, b):
    return -a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _torus_translates(m, span):
    k1 = int(math.ceil(span / m.l1)) + 1
    k2 = int(math.ceil(span / m.l2)) + 1
    i, j = np.meshgrid(np.arange(-k1, k1 + 1), np.arange(-k2, k2 + 1), indexing="ij")
    return np.stack([i.ravel() * m.l1, j.ravel() * m.l2], axis=1)


def _closed_distance(m, X, Y):
    """Vectorized closed-form distance for the homogeneous families."""
    if isinstance(m, Sphere):
        a, b = _sphere_vec(m, X), _sphere_vec(m, Y)
        cr = np.linalg.norm(np.cross(a, b), axis=-1)
        return m.radius * np.arctan2(cr, np.sum(a * b, axis=-1))
    if isinstance(m, HyperbolicPlane):
        a, b = _hyperboloid(m, X), _hyperboloid(m, Y)
        dd = a - b
        q = np.maximum(_mink(dd, dd), 0.0)
        return m.scale * 2.0 * np.arcsinh(0.5 * np.sqrt(q))
    if isinstance(m, FlatTorus):
        X = np.atleast_2d(np.asarray(X, float))
        Y = np.atleast_2d(np.asarray(Y, float))
        d = Y - X
        d = d - np.array([m.l1, m.l2]) * np.round(d / np.array([m.l1, m.l2]))
        # the nine nearest translates suffice once the difference is reduced;
        # elongated tori need the extended ring
        span = max(m.l1, m.l2) if max(m.l1, m.l2) > 3 * min(m.l1, m.l2) else 0.0
        tr = _torus_translates(m, span) if span else np.array(
            [[i * m.l1, j * m.l2] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
        return np.min(np.linalg.norm(d[:, None, :] + tr[None, :, :], axis=-1), axis=1)
    raise TypeError("no closed-form distance for this family")


def _has_closed_form(m):
    return isinstance(m, (Sphere, HyperbolicPlane, FlatTorus))


def distance(m: Manifold, x, y, n_starts: int = N_STARTS, step: float = DEFAULT_STEP) -> float:
    """Riemannian distance between two points.

    Closed forms for the homogeneous families; on a warped surface the exact
    value ``r`` when either point is the pole, and multistart shooting
    otherwise (NotConverged if no shot certifies below 1e-6).
    """
    x = _check_point(m, x)
    y = _check_point(m, y)
    if _has_closed_form(m):
        return float(_closed_distance(m, [x], [y])[0])
    if x[0] == 0.0:
        return y[0]
    if y[0] == 0.0:
        return x[0]
    res = _shoot(m, x, np.array([y]), max_len=None, n_starts=n_starts, step=step)[0]
    if not res:
        raise NotConverged(f"no certified geodesic from {x} to {y}")
    return min(T for _, T, _ in res)


# ---------------------------------------------------------------------------
# multistart shooting


def _upper_len(m, x, y):
    """Length bound for the shooting fan: any broken path through the pole."""
    return x[0] + y[0]


def _angle_of(sys, X, P):
    pts, vel = sys.to_public(X, P)
    if isinstance(sys, _flow.FlatSystem):
        return np.arctan2(vel[:, 1], vel[:, 0])
    r = pts[:, 0]
    if isinstance(sys, _flow.SphereSystem):
        f = sys.R * np.sin(r / sys.R)
    else:
        f = sys.profile.evaluate(r)[0]
    return np.arctan2(f * vel[:, 1], vel[:, 0])


def _newton(m, sys, X0pts, Ya, alpha, T, step, loops, iters=30, tol=1e-12):
    """Batched Gauss-Newton on (alpha, T) for exp_x(T u(alpha)) = y, one row per shot."""
    alpha = np.array(alpha, float)
    T = np.array(T, float)
    n = len(alpha)
    res = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    d = sys.dim
    tmin = 10 * step
    for _ in range(iters):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        X0, P0 = sys.from_angle(X0pts[idx], alpha[idx])
        Z0, w = _flow.initial_state(sys, X0, P0)
        fl = _flow.propagate(sys, Z0, w, T[idx], step, events=False)
        Xe, Pe = fl.Z[:, :d], fl.Z[:, d:2 * d]
        je = fl.Z[:, 2 * d]
        r = sys.ambient_diff(sys.ambient(Xe), Ya[idx])
        dead = ~np.isnan(fl.exit_t)
        nr = np.linalg.norm(r, axis=1)
        nr[dead] = np.inf
        res[idx] = nr
        done = nr < tol
        V = sys.velocity(Xe, Pe)
        E = sys.normal(Xe, V)
        J = np.stack([je[:, None] * sys.ambient_tangent(Xe, E), sys.ambient_tangent(Xe, V)], axis=2)
        delta = -np.einsum("nij,nj->ni", np.linalg.pinv(J, rcond=1e-10), r)
        da = np.clip(delta[:, 0], -0.3, 0.3)
        dT = np.clip(delta[:, 1], -0.5 * T[idx], 0.5 * T[idx] + 0.5)
        upd = ~done & ~dead
        alpha[idx[upd]] += da[upd]
        T[idx[upd]] += dT[upd]
        T[idx] = np.maximum(T[idx], tmin if loops else 1e-12)
        active[idx[done | dead]] = False
    return alpha % _TWO_PI, T, res


@dataclass
class _Fan:
    """Sampled multistart fan: ambient positions, |j| and times per ray."""
    alphas: np.ndarray
    amb: np.ndarray
    js: np.ndarray
    ts: np.ndarray
    ds: float


SAMPLE_SPACING = 0.01


def _fans(sys, bases, n_starts, max_len, step):
    bases = np.atleast_2d(np.asarray(bases, float))
    nb = len(bases)
    stride = max(1, int(round(SAMPLE_SPACING / step)))
    alphas = np.arange(n_starts) * (_TWO_PI / n_starts)
    pts = np.repeat(bases, n_starts, axis=0)
    X0, P0 = sys.from_angle(pts, np.tile(alphas, nb))
    Z0, w = _flow.initial_state(sys, X0, P0)
    fl = _flow.propagate(sys, Z0, w, max_len, step, stride=stride, events=False)
    d = sys.dim
    S = fl.samples
    ns = S.shape[1]
    amb = sys.ambient(S[:, :, :d].reshape(-1, d)).reshape(nb, n_starts, ns, -1)
    js = np.abs(S[:, :, 2 * d]).reshape(nb, n_starts, ns)
    ts = fl.sample_t.reshape(nb, n_starts, ns)
    return [_Fan(alphas, amb[i], js[i], ts[i], float(fl.h[0]) * stride) for i in range(nb)]


def _candidates(sys, fan, y, loops, tmin, max_cand, max_len=np.inf):
    """Fan rays passing close to ``y``: (alpha, t) at local minima of the gap."""
    dist = np.linalg.norm(sys.ambient_diff(fan.amb, y[None, None, :]), axis=-1)
    dist = np.where(np.isnan(dist), np.inf, dist)
    ts = fan.ts
    if loops:
        dist = np.where(ts < tmin, np.inf, dist)
    else:
        dist[:, 0] = np.inf
    inf_col = np.full((dist.shape[0], 1), np.inf)
    left = np.concatenate([inf_col, dist[:, :-1]], axis=1)
    right = np.concatenate([dist[:, 1:], inf_col], axis=1)
    thresh = 1.5 * (fan.js * (_TWO_PI / len(fan.alphas)) + fan.ds) + 1e-9
    ok = (dist <= left) & (dist < right) & (dist < thresh) & (ts <= max_len + fan.ds)
    ii, kk = np.nonzero(ok)
    score = dist[ii, kk] / thresh[ii, kk]
    # neighbouring rays meeting y at about the same time find the same geodesic
    n = len(fan.alphas)
    order = np.argsort(score)
    kept = []
    for o in order:
        i, t = ii[o], ts[ii[o], kk[o]]
        if any(min(abs(i - j), n - abs(i - j)) <= 2 and abs(t - u) < 0.05 for j, u in kept):
            continue
        kept.append((i, t))
        if len(kept) == max_cand:
            break
    if not kept:
        return fan.alphas[:0], ts[:0, 0]
    ki = np.array([k[0] for k in kept])
    return fan.alphas[ki], np.array([k[1] for k in kept])


def _dedupe(items, angle_tol=ANGLE_TOLERANCE, tie_tol=TIE_TOLERANCE):
    items = sorted(items, key=lambda it: it[1])
    kept = []
    for a, T, res in items:
        same = False
        for b, S, _ in kept:
            da = abs((a - b + math.pi) % _TWO_PI - math.pi)
            if da <= angle_tol and abs(T - S) <= tie_tol:
                same = True
                break
        if not same:
            kept.append((a, T, res))
    return kept


def _solve(m, sys, base_rows, Ya, cand, max_len, step, loops):
    """Refine candidate lists ``cand[i] = (alphas, times)`` for target ``i``."""
    n = len(cand)
    results = [[] for _ in range(n)]
    owner = np.concatenate([np.full(len(c[0]), i) for i, c in enumerate(cand)]).astype(np.int64)
    if len(owner) == 0:
        return results
    A = np.concatenate([c[0] for c in cand])
    T = np.concatenate([c[1] for c in cand])
    a, L, res = _newton(m, sys, base_rows[owner], Ya[owner], A, T, step, loops)
    tmin = LOOP_TMIN
    for ai, Li, ri, oi in zip(a, L, res, owner):
        if ri < RESIDUAL_TOL and Li <= max_len[oi] + 1e-9 and (not loops or Li > tmin):
            results[oi].append((float(ai), float(Li), float(ri)))
    return [_dedupe(r) for r in results]


LOOP_TMIN = 0.05
_FAN_BUDGET = 4_000_000


def _targets_ambient(sys, Y):
    Xy, _ = sys.from_public(Y, np.zeros_like(Y))
    return sys.ambient(Xy)


def _shoot(m, x, Y, max_len=None, n_starts=N_STARTS, step=DEFAULT_STEP, loops=False, max_cand=16):
    """All certified geodesics from one base ``x`` to each row of ``Y``.

    Returns, per target, a list of ``(alpha, length, residual)`` sorted by length.
    """
    sys = _flow.system_for(m)
    Y = np.atleast_2d(np.asarray(Y, float))
    if max_len is None:
        max_len = 1.05 * max(_upper_len(m, x, y) for y in Y) + 0.1
    fan = _fans(sys, [x], n_starts, max_len, step)[0]
    Ya = _targets_ambient(sys, Y)
    cand = [_candidates(sys, fan, y, loops, LOOP_TMIN, max_cand, max_len) for y in Ya]
    base = np.repeat(np.atleast_2d(np.asarray(x, float)), len(Y), axis=0)
    return _solve(m, sys, base, Ya, cand, np.full(len(Y), float(max_len)), step, loops)


def _shoot_pairs(m, X, Y, max_len, n_starts=64, step=DEFAULT_STEP, loops=False, max_cand=8):
    """Certified geodesics for each pair ``(X[i], Y[i])``, fans batched over pairs."""
    sys = _flow.system_for(m)
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    n = len(X)
    max_len = np.broadcast_to(np.asarray(max_len, float), (n,))
    Ya = _targets_ambient(sys, Y)
    L = float(max_len.max())
    ns = int(L / SAMPLE_SPACING) + 2
    chunk = max(1, _FAN_BUDGET // (n_starts * ns * 4))
    out = []
    for s0 in range(0, n, chunk):
        sl = slice(s0, min(n, s0 + chunk))
        fans = _fans(sys, X[sl], n_starts, L, step)
        cand = [_candidates(sys, f, y, loops, LOOP_TMIN, max_cand, ml)
                for f, y, ml in zip(fans, Ya[sl], max_len[sl])]
        out.extend(_solve(m, sys, X[sl], Ya[sl], cand, max_len[sl], step, loops))
    return out


class _FanLocator:
    """Dense fan from one base point indexed by a KD-tree.

    ``lengths`` answers "shortest certified geodesic from the base to each
    target, if one of length <= max_len exists" for many targets at once.
    """

    def __init__(self, m, p, max_len, n_rays=N_STARTS, step=DEFAULT_STEP):
        self.m = m
        self.sys = sys = _flow.system_for(m)
        self.p = np.asarray(p, float)
        self.step = step
        fan = _fans(sys, [p], n_rays, max_len, step)[0]
        self.fan = fan
        n, ns, da = fan.amb.shape
        pts = fan.amb.reshape(-1, da)
        ok = np.all(np.isfinite(pts), axis=1)
        self._ray = np.repeat(np.arange(n), ns)[ok]
        self._k = np.tile(np.arange(ns), n)[ok]
        self._t = fan.ts.reshape(-1)[ok]
        self._box = None
        if isinstance(sys, _flow.FlatSystem):
            self._box = sys.l.copy()
            pts = self._query_pts(pts)
        self._tree = cKDTree(pts[ok], boxsize=self._box)

    def _query_pts(self, Ya):
        if self._box is None:
            return Ya
        Y = np.mod(Ya, self._box)
        return np.where(Y >= self._box, 0.0, Y)

    def approx(self, targets):
        """Distance estimate: nearest fan sample, corrected to first order in (t, alpha)."""
        Ya = _targets_ambient(self.sys, np.atleast_2d(targets))
        _, ii = self._tree.query(self._query_pts(Ya))
        t = self._t[ii]
        if self._box is not None:
            return t
        amb, ts = self.fan.amb, self.fan.ts.reshape(self.fan.amb.shape[:2])
        n, ns, _ = amb.shape
        r, k = self._ray[ii], self._k[ii]
        k2 = np.where(k + 1 < ns, k + 1, k - 1)
        x = amb[r, k]
        dt = ts[r, k2] - ts[r, k]
        et = (amb[r, k2] - x) / dt[:, None]
        ea = amb[(r + 1) % n, k] - x
        # least squares for y - x = a et + b ea, batched 2x2 normal equations
        d = Ya - x
        g11, g12, g22 = (et * et).sum(1), (et * ea).sum(1), (ea * ea).sum(1)
        b1, b2 = (et * d).sum(1), (ea * d).sum(1)
        det = g11 * g22 - g12 * g12
        with np.errstate(invalid="ignore", divide="ignore"):
            a = (g22 * b1 - g12 * b2) / det
        good = np.isfinite(a) & (np.abs(a) < 4 * np.abs(dt))
        return np.where(good, t + np.where(good, a, 0.0), t)

    def lengths(self, targets, max_len, k=8):
        targets = np.atleast_2d(np.asarray(targets, float))
        nt = len(targets)
        max_len = np.broadcast_to(np.asarray(max_len, float), (nt,))
        Ya = _targets_ambient(self.sys, targets)
        kk = min(k, len(self._t))
        _, ii = self._tree.query(self._query_pts(Ya), k=kk)
        ii = ii.reshape(nt, kk)
        rows, A, T = [], [], []
        ds = self.fan.ds
        for i in range(nt):
            seen = set()
            for idx in ii[i]:
                ray, t = int(self._ray[idx]), float(self._t[idx])
                if ray in seen or t > max_len[i] + 2 * ds or t <= 0.0:
                    continue
                seen.add(ray)
                rows.append(i)
                A.append(self.fan.alphas[ray])
                T.append(t)
        out = np.full(nt, np.inf)
        if not rows:
            return out
        rows = np.asarray(rows)
        base = np.repeat(self.p[None, :], len(rows), axis=0)
        a, L, res = _newton(self.m, self.sys, base, Ya[rows], np.asarray(A), np.asarray(T),
                            self.step, False)
        good = (res < RESIDUAL_TOL) & (L <= max_len[rows] + 1e-9)
        np.minimum.at(out, rows[good], L[good])
        return out


# ---------------------------------------------------------------------------
# two-point problems


@dataclass
class ConnectResult:
    geodesics: list
    lengths: list
    angles: list
    residuals: list
    minimal_length: float
    multiplicity: int
    method: str
    incomplete: bool = False
    family: bool = False


def _closed_connect(m, x, y, max_len, family_size=8):
    """(alpha, length) of every geodesic from x to y of length <= max_len."""
    sys = _flow.system_for(m)
    out = []
    family = False
    if isinstance(m, FlatTorus):
        d = np.array(y) - np.array(x)
        for tr in _torus_translates(m, max_len):
            v = d + tr
            L = float(np.hypot(*v))
            if 1e-12 < L <= max_len + 1e-12:
                out.append((math.atan2(v[1], v[0]) % _TWO_PI, L))
        return out, family
    if isinstance(m, Sphere):
        R = m.radius
        a, b = _sphere_vec(m, [x])[0], _sphere_vec(m, [y])[0]
        dd = float(_closed_distance(m, [x], [y])[0])
        circ = _TWO_PI * R
        X, _ = sys.from_public([x], [[0.0, 0.0]])
        if dd < 1e-12 or abs(dd - math.pi * R) < 1e-12:
            family = True
            alphas = np.arange(family_size) * (_TWO_PI / family_size)
            base = dd
            k = 0
            while base + k * math.pi * R * (2 if dd < 1e-12 else 1) <= max_len + 1e-12:
                L = base + k * (circ if dd < 1e-12 else math.pi * R)
                if L > 1e-12:
                    out.extend((float(al), L) for al in alphas)
                k += 1
            return out, family
        t = b - np.dot(a, b) * a
        t /= np.linalg.norm(t)
        al = float(_angle_of(sys, X, t[None, :])[0])
        k = 0
        while dd + k * circ <= max_len + 1e-12 or circ - dd + k * circ <= max_len + 1e-12:
            if dd + k * circ <= max_len + 1e-12:
                out.append((al % _TWO_PI, dd + k * circ))
            if circ - dd + k * circ <= max_len + 1e-12:
                out.append(((al + math.pi) % _TWO_PI, circ - dd + k * circ))
            k += 1
        return out, family
    if isinstance(m, HyperbolicPlane):
        a, b = _hyperboloid(m, [x])[0], _hyperboloid(m, [y])[0]
        dd = float(_closed_distance(m, [x], [y])[0])
        if dd < 1e-12 or dd > max_len + 1e-12:
            return out, family
        # components of b along the orthonormal tangent frame at a
        rho = x[0] / m.scale
        if x[0] == 0.0:
            al = math.atan2(b[2], b[1]) - x[1]
        else:
            e_r = np.array([math.sinh(rho), math.cosh(rho) * math.cos(x[1]), math.cosh(rho) * math.sin(x[1])])
            e_t = np.array([0.0, -math.sin(x[1]), math.cos(x[1])])
            al = math.atan2(_mink(b, e_t), _mink(b, e_r))
        out.append((al % _TWO_PI, dd))
        return out, family
    raise TypeError("no closed-form connect for this family")


def connect(m: Manifold, x, y, max_len: float, budget: int = N_STARTS, method: str = "auto",
            step: float = DEFAULT_STEP, tie_tolerance: float = TIE_TOLERANCE,
            build_paths: bool = True) -> ConnectResult:
    """All distinct geodesics from ``x`` to ``y`` no longer than ``max_len``."""
    x = _check_point(m, x)
    y = _check_point(m, y)
    use_closed = method == "closed-form" or (method == "auto" and _has_closed_form(m))
    family = False
    if use_closed:
        found, family = _closed_connect(m, x, y, max_len)
        found = [(a, L, 0.0) for a, L in found]
        tag = "closed-form"
    else:
        loops = math.dist(x, y) == 0.0
        found = _shoot(m, x, np.array([y]), max_len=max_len, n_starts=budget, step=step, loops=loops)[0]
        tag = "shooting"
    found.sort(key=lambda it: it[1])
    if not found:
        raise NotConverged(f"no geodesic from {x} to {y} within length {max_len}")
    Lmin = found[0][1]
    mult = sum(1 for _, L, _ in found if L <= Lmin + tie_tolerance)
    paths = []
    if build_paths:
        for a, L, _ in found:
            paths.append(integrate_geodesic(m, unit_state(m, x, a), L, step, on_exit="truncate"))
    return ConnectResult(paths, [L for _, L, _ in found], [a for a, _, _ in found],
                         [r for _, _, r in found], Lmin, mult, tag, family=family)


def loop_length_at(m: Manifold, p, horizon: float, n_dirs: int = 64, step: float = DEFAULT_STEP,
                   method: str = "shooting") -> float:
    """Length of the shortest non-trivial geodesic loop at ``p`` (inf past ``horizon``)."""
    p = _check_point(m, p)
    if method == "closed-form":
        if isinstance(m, Sphere):
            return _TWO_PI * m.radius
        if isinstance(m, FlatTorus):
            return min(m.l1, m.l2)
        if isinstance(m, HyperbolicPlane):
            return math.inf
        raise TypeError("no closed-form loop length for this family")
    res = _shoot(m, p, np.array([p]), max_len=horizon, n_starts=n_dirs, step=step, loops=True)[0]
    if not res:
        return math.inf
    return min(L for _, L, _ in res)


class ClosedGeodesic(NamedTuple):
    length: float
    provenance: str


def shortest_closed_geodesic(m: Manifold) -> ClosedGeodesic:
    """Shortest closed geodesic among the candidates each family admits.

    Warped surfaces only consider the parallels at critical points of the
    warp function (equators); the value is a candidate upper bound there.
    """
    if isinstance(m, Sphere):
        return ClosedGeodesic(_TWO_PI * m.radius, "sphere: great circle")
    if isinstance(m, FlatTorus):
        return ClosedGeodesic(float(min(m.l1, m.l2)), "torus: shortest lattice vector")
    if isinstance(m, HyperbolicPlane):
        return ClosedGeodesic(math.inf, "hyperbolic plane: no closed geodesics (non-compact)")
    if isinstance(m, WarpedSurface):
        prof = m.profile
        if getattr(prof, "kind", None) == "sin":
            r_eq = 0.5 * math.pi * prof.scale
            if r_eq < m.r_max:
                return ClosedGeodesic(_TWO_PI * prof.scale, "warped: equator candidates only")
            return ClosedGeodesic(math.inf, "warped: equator candidates only (none)")
        if getattr(prof, "kind", None) in ("sinh", "identity"):
            return ClosedGeodesic(math.inf, "warped: equator candidates only (none)")
        r = prof.r[prof.r < m.r_max]
        fp = prof._fp[: len(r)]
        best = math.inf
        sgn = np.sign(fp)
        for i in np.nonzero(sgn[1:] * sgn[:-1] < 0)[0]:
            # refine f'(r*) = 0 inside the cell by bisection on the interpolant
            lo, hi = float(r[i]), float(r[i + 1])
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if np.sign(prof.fp(mid)) == sgn[i]:
                    lo = mid
                else:
                    hi = mid
            best = min(best, _TWO_PI * float(prof.f(0.5 * (lo + hi))))
        return ClosedGeodesic(best, "warped: equator candidates only" + ("" if best < math.inf else " (none)"))
    raise TypeError(f"unsupported manifold {m!r}")
