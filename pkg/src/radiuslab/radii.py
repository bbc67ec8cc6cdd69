"""Conjugate, focal, injectivity and convexity radii with brute-force oracles.

Every "infinite" value means "not reached before the horizon"; reports carry
the horizon alongside the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _flow
from .errors import BudgetExhausted, InvalidInput, RadiusLabError
from .geodesic import (
    TIE_TOLERANCE,
    _check_point,
    _closed_connect,
    _closed_distance,
    _FanLocator,
    _has_closed_form,
    _shoot_pairs,
    distance,
    loop_length_at,
    shortest_closed_geodesic,
)
from .manifold import FlatTorus, HyperbolicPlane, Manifold, Sphere, WarpedSurface

__all__ = [
    "DirectionScan",
    "InjectivityEstimate",
    "ConvexityWitness",
    "ConvexityVerdict",
    "ConvexityRadius",
    "HessianCheck",
    "PointRadii",
    "RadiusReport",
    "ReportConfig",
    "scan_point",
    "conjugate_radius_at",
    "focal_radius_at",
    "injectivity_radius_at",
    "is_strongly_convex",
    "convexity_radius",
    "hessian_check",
    "report_points",
    "assemble_report",
]

CUT_TOL = 1e-4
LOOP_TOL = 1e-4
SAMPLE_SPACING = 0.01
ORACLE_STEP = 5e-3
CONTAINMENT_TOL = 1e-6
SHORT_CHORD = 0.3  # angular separation of the short boundary chords
_TWO_PI = 2.0 * math.pi
_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _inf(x):
    x = np.asarray(x, float)
    return np.where(np.isnan(x), np.inf, x)


def _horizon(m, horizon):
    H = m.default_horizon() if horizon is None else float(horizon)
    if not H > 0:
        raise InvalidInput("horizon must be positive")
    return H


def _is_pole(m, p):
    return m.rotational and not isinstance(m, Sphere) and p[0] == 0.0


class _Dist:
    """``d(p, .)`` for many points; closed form, exact at a pole, else shooting."""

    def __init__(self, m, p, reach, step=ORACLE_STEP, n_rays=256):
        self.m, self.p = m, np.asarray(p, float)
        self.kind = "closed" if _has_closed_form(m) else ("pole" if _is_pole(m, p) else "shoot")
        self._loc = None
        self._reach, self._step, self._n = reach, step, n_rays

    @property
    def exact(self):
        return self.kind != "shoot"

    def _locator(self):
        if self._loc is None:
            self._loc = _FanLocator(self.m, self.p, self._reach, n_rays=self._n, step=self._step)
        return self._loc

    def __call__(self, pts, limit=None):
        """Distances; with shooting, ``inf`` where no geodesic of length <= limit exists."""
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.kind == "closed":
            return _closed_distance(self.m, np.repeat(self.p[None, :], len(pts), axis=0), pts)
        if self.kind == "pole":
            return pts[:, 0].copy()
        lim = self._reach if limit is None else limit
        return self._locator().lengths(pts, lim)

    def approx(self, pts):
        if self.exact:
            return self(pts)
        return self._locator().approx(pts)


# ---------------------------------------------------------------------------
# direction scans


@dataclass
class DirectionScan:
    point: tuple
    angles: np.ndarray
    conjugate: np.ndarray
    focal: np.ndarray
    cut: np.ndarray
    loop: np.ndarray
    exit: np.ndarray
    horizon: float
    unresolved_exits: int = 0
    wronskian_drift: float = 0.0
    tangency: int = 0

    def rows(self):
        return list(zip(self.angles.tolist(), self.conjugate.tolist(), self.focal.tolist(),
                        self.cut.tolist(), self.loop.tolist()))


def _public(sys, Z):
    d = sys.dim
    return sys.to_public(Z[:, :d], Z[:, d:2 * d])[0]


def _advance(sys, Z, tau, step):
    """States advanced by ``tau >= 0`` (per row); rows with tau = 0 are returned as is."""
    tau = np.asarray(tau, float)
    out = Z.copy()
    move = tau > 0
    if move.any():
        Zn, _ = _flow.advance(sys, Z[move], tau[move], step)
        out[move] = Zn
    return out


def _cut_times(m, sys, p, fl, H, step, dist):
    """First t with t - d(p, gamma(t)) > CUT_TOL on each ray (inf if none)."""
    S, ts = fl.samples, fl.sample_t
    n, ns = ts.shape
    valid = ~np.isnan(ts)
    last = valid.sum(axis=1) - 1

    def is_cut(rows, Z, t):
        lim = t - CUT_TOL
        d = dist(_public(sys, Z), np.maximum(lim, 0.0))
        return (t - d) > CUT_TOL

    out = np.full(n, np.inf)
    # t - d(p, gamma(t)) is nondecreasing, so a binary search over samples is valid
    rows = np.arange(n)
    hi = last.copy()
    cut_hi = is_cut(rows, S[rows, hi], ts[rows, hi])
    rows = rows[cut_hi]
    if len(rows) == 0:
        return out
    lo = np.zeros(len(rows), dtype=np.int64)
    hi = hi[rows]
    while np.any(hi - lo > 1):
        mid = (lo + hi) // 2
        act = hi - lo > 1
        c = np.zeros(len(rows), dtype=bool)
        c[act] = is_cut(rows[act], S[rows[act], mid[act]], ts[rows[act], mid[act]])
        hi = np.where(act & c, mid, hi)
        lo = np.where(act & ~c, mid, lo)
    Z0 = S[rows, lo]
    a = np.zeros(len(rows))
    b = ts[rows, hi] - ts[rows, lo]
    for _ in range(30):
        c = 0.5 * (a + b)
        Zc = _advance(sys, Z0, c, step)
        cc = is_cut(rows, Zc, ts[rows, lo] + c)
        b = np.where(cc, c, b)
        a = np.where(cc, a, c)
    # t - d crosses CUT_TOL at t_b; step back along its tangent line to the
    # zero crossing (never past it while the gap is convex)
    tb = ts[rows, lo] + b
    eta = 1e-3
    Zb = _advance(sys, Z0, b, step)
    Ze = _advance(sys, Z0, b + eta, step)
    gb = tb - dist(_public(sys, Zb), np.maximum(tb, 0.0))
    ge = tb + eta - dist(_public(sys, Ze), tb + eta)
    slope = (ge - gb) / eta
    back = np.where(np.isfinite(slope) & (slope > 0), gb / np.where(slope > 0, slope, 1.0), 0.0)
    out[rows] = tb - np.clip(back, 0.0, b)
    return out


def _golden(fun, a, b, iters=50):
    """Vectorized golden-section minimization on per-row brackets."""
    a, b = np.array(a, float), np.array(b, float)
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - _GOLD * (b - a), d)
        nd = np.where(left, c, a + _GOLD * (b - a))
        fnew = fun(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    x = 0.5 * (a + b)
    return x, fun(x)


def _loop_times(m, sys, p, fl, step):
    """First return of each ray to ``p`` within LOOP_TOL (inf if none)."""
    S, ts = fl.samples, fl.sample_t
    n, ns = ts.shape
    d = sys.dim
    Xp, _ = sys.from_angle([p], [0.0])
    pa = sys.ambient(Xp)[0]
    amb = sys.ambient(S[:, :, :d].reshape(-1, d)).reshape(n, ns, -1)
    gap = np.linalg.norm(sys.ambient_diff(amb, pa[None, None, :]), axis=-1)
    gap = np.where(np.isnan(gap), np.inf, gap)
    dt = np.nanmax(np.diff(ts, axis=1)) if ns > 1 else 0.0
    left = np.concatenate([np.full((n, 1), np.inf), gap[:, :-1]], axis=1)
    right = np.concatenate([gap[:, 1:], np.full((n, 1), np.inf)], axis=1)
    cand = (gap <= left) & (gap <= right) & (gap < 1.5 * dt + LOOP_TOL) & (ts > 0.05)
    out = np.full(n, np.inf)
    ii, kk = np.nonzero(cand)
    if len(ii) == 0:
        return out
    k0 = np.maximum(kk - 1, 0)
    Z0 = S[ii, k0]
    t0 = ts[ii, k0]
    span = np.nan_to_num(ts[ii, np.minimum(kk + 1, ns - 1)], nan=ts[ii, kk]) - t0

    def g(tau):
        Z = _advance(sys, Z0, tau, step)
        return np.linalg.norm(sys.ambient_diff(sys.ambient(Z[:, :d]), pa[None, :]), axis=-1)

    x, gv = _golden(g, np.zeros(len(ii)), span)
    good = gv <= LOOP_TOL
    for i, t in zip(ii[good], (t0 + x)[good]):
        out[i] = min(out[i], t)
    return out


def _rays(m, p, alphas, H, step, cut=True, loops=True, dist=None):
    sys = _flow.system_for(m)
    X0, P0 = sys.from_angle([p], alphas)
    Z0, w = _flow.initial_state(sys, X0, P0)
    stride = max(1, int(round(SAMPLE_SPACING / step)))
    fl = _flow.propagate(sys, Z0, w, H, step, stride=stride)
    conj, focal, _, _, unres = _flow.continue_tail(sys, fl, H)
    out = {
        "conjugate": _inf(conj),
        "focal": _inf(focal),
        "exit": _inf(fl.exit_t),
        "unresolved": int(unres.sum()),
        "wronskian": float(fl.wronskian_drift.max()),
        "tangency": int(fl.tangency.sum()),
    }
    if cut:
        dist = dist or _Dist(m, p, H)
        out["cut"] = _cut_times(m, sys, p, fl, H, step, dist)
    else:
        out["cut"] = np.full(len(alphas), np.nan)
    out["loop"] = _loop_times(m, sys, p, fl, step) if loops else np.full(len(alphas), np.nan)
    return out


def scan_point(m: Manifold, p, n_dirs: int = 64, horizon: float | None = None, step: float = 1e-3,
               cut: bool = True, loops: bool = True) -> DirectionScan:
    """Conjugate, focal, cut and loop times along ``n_dirs`` evenly spaced directions."""
    if n_dirs < 8:
        raise InvalidInput("n_dirs must be at least 8")
    p = _check_point(m, p)
    H = _horizon(m, horizon)
    alphas = np.arange(n_dirs) * (_TWO_PI / n_dirs)
    r = _rays(m, p, alphas, H, step, cut=cut, loops=loops)
    return DirectionScan(p, alphas, r["conjugate"], r["focal"], r["cut"], r["loop"], r["exit"], H,
                         r["unresolved"], r["wronskian"], r["tangency"])


def _zoom(m, p, alphas, values, key, H, step, levels=4, width=4):
    """Refine the minimum of a per-direction time on successively finer angle grids."""
    k = int(np.argmin(values))
    best = float(values[k])
    if not math.isfinite(best):
        return best, float(alphas[k])
    a0 = float(alphas[k])
    w = _TWO_PI / len(alphas)
    dist = _Dist(m, p, H) if key == "cut" else None
    for _ in range(levels):
        grid = a0 + np.linspace(-w, w, 2 * width + 1)
        T = min(H, best + 0.1)
        r = _rays(m, p, grid, T, step, cut=key == "cut", loops=False, dist=dist)
        v = r[key]
        j = int(np.argmin(v))
        if v[j] < best:
            best, a0 = float(v[j]), float(grid[j])
        w /= width
    return best, a0 % _TWO_PI


def conjugate_radius_at(m: Manifold, p, n_dirs: int = 64, horizon: float | None = None,
                        step: float = 1e-3, scan: DirectionScan | None = None) -> float:
    """Shortest first-conjugate time over directions at ``p`` (inf past the horizon)."""
    scan = scan or scan_point(m, p, n_dirs, horizon, step, cut=False, loops=False)
    return _zoom(m, scan.point, scan.angles, scan.conjugate, "conjugate", scan.horizon, step)[0]


def focal_radius_at(m: Manifold, p, n_dirs: int = 64, horizon: float | None = None,
                    step: float = 1e-3, scan: DirectionScan | None = None) -> float:
    """Shortest first-focal time over directions at ``p`` (inf past the horizon)."""
    scan = scan or scan_point(m, p, n_dirs, horizon, step, cut=False, loops=False)
    return _zoom(m, scan.point, scan.angles, scan.focal, "focal", scan.horizon, step)[0]


@dataclass
class InjectivityEstimate:
    formula: float
    oracle: float
    conjugate_radius: float
    loop_length: float
    horizon: float


def injectivity_radius_at(m: Manifold, p, n_dirs: int = 64, horizon: float | None = None,
                          step: float = 1e-3, scan: DirectionScan | None = None) -> InjectivityEstimate:
    """``min{r_c(p), l(p)/2}`` next to the smallest detected cut time."""
    scan = scan or scan_point(m, p, n_dirs, horizon, step, loops=False)
    H = scan.horizon
    rc = conjugate_radius_at(m, p, step=step, scan=scan)
    loop = loop_length_at(m, scan.point, H, n_dirs=n_dirs, step=step)
    formula = min(rc, 0.5 * loop)
    cut = scan.cut
    if np.all(np.isnan(cut)):
        scan = scan_point(m, p, len(scan.angles), H, step, loops=False)
        cut = scan.cut
    oracle = _zoom(m, scan.point, scan.angles, cut, "cut", H, step)[0]
    return InjectivityEstimate(formula, oracle, rc, loop, H)


# ---------------------------------------------------------------------------
# strong convexity oracle


@dataclass
class ConvexityWitness:
    center: tuple
    radius: float
    pair: tuple
    mode: str
    geodesics: list
    lengths: list
    max_distance: float | None = None
    seed: int | None = None

    def to_dict(self):
        return {
            "center": list(self.center), "radius": self.radius,
            "pair": [list(self.pair[0]), list(self.pair[1])], "mode": self.mode,
            "lengths": list(self.lengths), "max_distance": self.max_distance, "seed": self.seed,
            "geodesics": [np.asarray(g).tolist() for g in self.geodesics],
        }


@dataclass
class ConvexityVerdict:
    convex: bool
    witness: ConvexityWitness | None
    center: tuple
    radius: float
    seed: int
    n_pairs: int
    incomplete: bool = False

    def __bool__(self):
        return self.convex


def _polar_points(m, p, rho, phi, step):
    """exp_p(rho u(phi)) for arrays of geodesic polar coordinates."""
    sys = _flow.system_for(m)
    X0, P0 = sys.from_angle([p], phi)
    Z0, w = _flow.initial_state(sys, X0, P0)
    rho = np.asarray(rho, float)
    Z = np.array(Z0)
    move = rho > 0
    if move.any():
        fl = _flow.propagate(sys, Z0[move], w[move], rho[move], step, events=False)
        if np.any(~np.isnan(fl.exit_t)):
            raise InvalidInput("ball leaves the chart")
        Z[move] = fl.Z
    pts = _public(sys, Z)
    if m.rotational and not isinstance(m, Sphere):
        pts[~move] = np.asarray(p, float)
    if not move.all():
        pts[~move] = np.asarray(p, float)
    return pts


def _sample_pairs(n_pairs, s, seed):
    """Seeded geodesic polar coordinates (rho, phi) for x and y."""
    rng = np.random.default_rng(seed)
    n_uni = int(round(0.35 * n_pairs))
    n_shell = int(round(0.25 * n_pairs))
    n_anti = int(round(0.15 * n_pairs))
    n_ring = n_pairs - n_uni - n_shell - n_anti
    rx = np.concatenate([s * rng.uniform(0, 1, n_uni), s * rng.uniform(0.9, 1.0, n_shell),
                         np.full(n_anti + n_ring, s)])
    ry = np.concatenate([s * rng.uniform(0, 1, n_uni), s * rng.uniform(0.9, 1.0, n_shell),
                         np.full(n_anti + n_ring, s)])
    px = rng.uniform(0, _TWO_PI, n_uni + n_shell + n_anti)
    py = np.concatenate([rng.uniform(0, _TWO_PI, n_uni + n_shell),
                         px[n_uni + n_shell:] + math.pi + rng.normal(0.0, 0.2, n_anti)])
    # deterministic rings on the boundary circle: short chords see local concavity
    # of the sphere, long ones see wrapping and cut points
    n_short = n_ring // 2
    n_long = n_ring - n_short
    short_c = np.arange(n_short) * (_TWO_PI / max(n_short, 1))
    seps = np.array([1, 2, 3, 4, 5, 6]) * (math.pi / 6)
    k = np.arange(n_long)
    long_x = k * (_TWO_PI / max(n_long, 1)) + 0.5 * (_TWO_PI / max(n_long, 1))
    px = np.concatenate([px, short_c - SHORT_CHORD / 2, long_x])
    py = np.concatenate([py, short_c + SHORT_CHORD / 2, long_x + seps[k % len(seps)]])
    return rx, px % _TWO_PI, ry, py % _TWO_PI


def _connect_pairs(m, X, Y, max_len, step):
    """Per pair: list of (alpha, length) of geodesics with length <= max_len."""
    if _has_closed_form(m):
        return [sorted(_closed_connect(m, tuple(x), tuple(y), max_len)[0], key=lambda it: it[1])
                for x, y in zip(X, Y)]
    res = _shoot_pairs(m, X, Y, max_len, step=step)
    return [[(a, L) for a, L, _ in r] for r in res]


def _trace(m, X, alpha, L, step):
    """Sampled geodesics from X[i] in direction alpha[i] for length L[i]."""
    sys = _flow.system_for(m)
    X0, P0 = sys.from_angle(X, alpha)
    Z0, w = _flow.initial_state(sys, X0, P0)
    stride = max(1, int(round(SAMPLE_SPACING / step)))
    fl = _flow.propagate(sys, Z0, w, L, step, stride=stride, events=False)
    S = fl.samples
    n, ns, _ = S.shape
    d = sys.dim
    pts = sys.to_public(S[:, :, :d].reshape(-1, d), S[:, :, d:2 * d].reshape(-1, d))[0].reshape(n, ns, 2)
    pts[np.isnan(fl.sample_t)] = np.nan
    end = _public(sys, fl.Z)
    return pts, end, ~np.isnan(fl.exit_t)


def is_strongly_convex(m: Manifold, p, s: float, n_pairs: int = 200, seed: int = 42,
                       budget: int | None = None, step: float = ORACLE_STEP,
                       containment_tol: float = CONTAINMENT_TOL, margin: float = 0.1) -> ConvexityVerdict:
    """Search seeded pairs in ``B(p, s)`` for a failure of strong convexity.

    A witness is a pair joined by more than one minimal geodesic (within the
    length tie tolerance), a pair whose minimal geodesic leaves the ball, or
    a pair for which no connecting geodesic was found.
    """
    if not s > 0:
        raise InvalidInput("s must be positive")
    if n_pairs < 100:
        raise InvalidInput("n_pairs must be at least 100")
    p = _check_point(m, p)
    rx, px, ry, py = _sample_pairs(n_pairs, s, seed)
    incomplete = False
    if budget is not None and not _has_closed_form(m) and n_pairs > budget:
        rx, px, ry, py = rx[:budget], px[:budget], ry[:budget], py[:budget]
        incomplete = True
    if m.rotational and not isinstance(m, (Sphere, HyperbolicPlane)) and p[0] + s >= m.r_max:
        raise InvalidInput(f"ball B(p, {s}) reaches the chart boundary r = {m.r_max}")
    X = _polar_points(m, p, rx, px, step)
    Y = _polar_points(m, p, ry, py, step)
    max_len = 2.0 * s + margin
    found = _connect_pairs(m, X, Y, max_len, step)
    dist = _Dist(m, p, s + margin, step=step)

    fails = {}
    single = []
    for i, geos in enumerate(found):
        if float(np.hypot(*(X[i] - Y[i]))) == 0.0 and (not geos or geos[0][1] > 1e-9):
            continue
        if not geos:
            fails[i] = ("NoGeodesicFound", [])
            continue
        Lmin = geos[0][1]
        minimal = [g for g in geos if g[1] <= Lmin + TIE_TOLERANCE]
        if len(minimal) > 1:
            fails[i] = ("NonUnique", minimal)
        else:
            single.append(i)
    maxd = {}
    if single:
        idx = np.array(single)
        al = np.array([found[i][0][0] for i in single])
        L = np.array([found[i][0][1] for i in single])
        pts, _, _ = _trace(m, X[idx], al, L, step)
        n, ns, _ = pts.shape
        flat = pts.reshape(-1, 2)
        ok = ~np.isnan(flat[:, 0])
        approx = np.full(len(flat), -np.inf)
        approx[ok] = dist.approx(flat[ok])
        approx = approx.reshape(n, ns)
        if dist.exact:
            for row, i in enumerate(single):
                maxd[i] = float(np.max(approx[row]))
        else:
            # verify the three farthest-looking samples of each geodesic
            top = np.argsort(-approx, axis=1)[:, :3]
            cand = pts[np.arange(n)[:, None], top].reshape(-1, 2)
            keep = ~np.isnan(cand[:, 0])
            within = np.full(len(cand), np.inf)
            within[keep] = dist(cand[keep], s + containment_tol)
            within = within.reshape(n, 3)
            for row, i in enumerate(single):
                maxd[i] = float(np.max(within[row]))
    for i in sorted(maxd):
        if maxd[i] > s + containment_tol:
            fails[i] = ("LeavesBall", [found[i][0]])
    # report the first failing pair; shooting-based LeavesBall verdicts are confirmed first
    for i in sorted(fails):
        mode = fails[i][0]
        if mode != "LeavesBall" or dist.exact:
            break
        far = pts[single.index(i)]
        far = far[~np.isnan(far[:, 0])]
        z = far[int(np.argmax(dist.approx(far)))]
        dm = distance(m, tuple(p), tuple(z), step=step)
        if dm > s + containment_tol:
            maxd[i] = dm
            break
        del fails[i]
    if not fails:
        return ConvexityVerdict(True, None, p, s, seed, len(X), incomplete)
    i = min(fails)
    mode, geos = fails[i]
    polys = []
    if geos:
        pts, _, _ = _trace(m, np.repeat(X[i:i + 1], len(geos), axis=0), np.array([g[0] for g in geos]),
                           np.array([g[1] for g in geos]), step)
        polys = [pp[~np.isnan(pp[:, 0])] for pp in pts]
    w = ConvexityWitness(p, s, (tuple(X[i]), tuple(Y[i])), mode, polys, [g[1] for g in geos],
                         maxd.get(i), seed)
    verdict = ConvexityVerdict(False, w, p, s, seed, len(X), incomplete)
    if incomplete:
        raise BudgetExhausted("pair budget exhausted", partial=verdict)
    return verdict


@dataclass
class ConvexityRadius:
    formula: float
    oracle: float
    bracket: tuple
    point: tuple
    focal_radius: float
    closed_geodesic: float
    tests: int
    seed: int


def convexity_radius(m: Manifold, n_pairs: int = 200, seed: int = 42, depth: int = 12,
                     horizon: float | None = None, n_dirs: int = 64, step: float = 1e-3,
                     points=None, oracle: bool = True, scans=None) -> ConvexityRadius:
    """``min{r_f(M), l_c/4}`` and a bisection on the convexity oracle at the worst point."""
    H = _horizon(m, horizon)
    points = points if points is not None else report_points(m, H)
    rf, done = [], []
    for i, q in enumerate(points):
        scan = scans[i] if scans is not None else scan_point(m, q, n_dirs, H, step, cut=False, loops=False)
        done.append(scan)
        rf.append(focal_radius_at(m, q, step=step, scan=scan))
    k = int(np.argmin(rf))
    p = tuple(points[k])
    lc = shortest_closed_geodesic(m).length
    formula = min(rf[k], lc / 4.0)
    if not oracle:
        return ConvexityRadius(formula, math.nan, (math.nan, math.nan), p, rf[k], lc, 0, seed)
    # the bracket only needs the formula value of inj(p), not its cut oracle
    rc = conjugate_radius_at(m, p, step=step, scan=done[k])
    hi = min(rc, 0.5 * loop_length_at(m, p, H, n_dirs=n_dirs, step=step), H)
    if m.rotational and not isinstance(m, (Sphere, HyperbolicPlane)):
        hi = min(hi, 0.98 * (m.r_max - p[0]))
    lo = 0.0
    tests = 0
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        tests += 1
        if is_strongly_convex(m, p, mid, n_pairs, seed, step=ORACLE_STEP):
            lo = mid
        else:
            hi = mid
    return ConvexityRadius(formula, lo, (lo, hi), p, rf[k], lc, tests, seed)


# ---------------------------------------------------------------------------
# Hessian of the squared distance


@dataclass
class HessianCheck:
    minimum: float
    values: np.ndarray
    center: tuple
    radius: float
    spacing: float
    seed: int


def hessian_check(m: Manifold, p, R: float, n_geodesics: int = 1000, seed: int = 42,
                  spacing: float = 1e-3, step: float = 1e-3) -> HessianCheck:
    """Second differences of ``t -> d(p, sigma(t))^2`` along random geodesics in ``B(p, R)``."""
    if not R > 0:
        raise InvalidInput("R must be positive")
    p = _check_point(m, p)
    rng = np.random.default_rng(seed)
    rho = R * rng.uniform(0, 1, n_geodesics)
    phi = rng.uniform(0, _TWO_PI, n_geodesics)
    beta = rng.uniform(0, _TWO_PI, n_geodesics)
    q = _polar_points(m, p, rho, phi, step)
    sys = _flow.system_for(m)
    pts = np.concatenate([q, q])
    X0, P0 = sys.from_angle(pts, np.concatenate([beta, beta + math.pi]))
    Z0, w = _flow.initial_state(sys, X0, P0)
    fl = _flow.propagate(sys, Z0, w, spacing, spacing, events=False)
    ends = _public(sys, fl.Z)
    dist = _Dist(m, p, R + 0.1)
    d0 = dist(q)
    d1 = dist(ends)
    dp, dm = d1[:n_geodesics], d1[n_geodesics:]
    vals = (dp * dp - 2.0 * d0 * d0 + dm * dm) / (spacing * spacing)
    return HessianCheck(float(np.min(vals)), vals, p, R, spacing, seed)


# ---------------------------------------------------------------------------
# reports


def report_points(m: Manifold, horizon: float | None = None, stations: int = 16):
    """Points over which manifold-wide infima are taken."""
    if isinstance(m, FlatTorus):
        return [(0.0, 0.0)]
    if isinstance(m, (Sphere, HyperbolicPlane)):
        return [(0.0, 0.0)]
    H = _horizon(m, horizon)
    span = min(m.r_max, H)
    # cell midpoints of [0, span]
    return [(0.0, 0.0)] + [((k - 0.5) * span / stations, 0.0) for k in range(1, stations + 1)]


@dataclass
class ReportConfig:
    n_dirs: int = 64
    horizon: float | None = None
    step: float = 1e-3
    n_pairs: int = 200
    seed: int = 42
    stations: int = 16
    depth: int = 12
    oracle: bool = True
    hessian_geodesics: int = 200


@dataclass
class PointRadii:
    point: tuple
    conjugate: float
    focal: float
    loop: float
    inj_formula: float
    inj_oracle: float | None


@dataclass
class RadiusReport:
    manifold: Manifold
    horizon: float
    points: list
    conjugate: float = math.nan
    focal: float = math.nan
    loop: float = math.nan
    closed_geodesic: float = math.nan
    closed_geodesic_provenance: str = ""
    inj_formula: float = math.nan
    inj_oracle: float | None = None
    r_formula: float = math.nan
    r_oracle: float | None = None
    r_oracle_bracket: tuple | None = None
    worst_point: tuple | None = None
    hessian_minimum: float | None = None
    checks: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    config: ReportConfig | None = None

    @property
    def ok(self):
        return not self.errors and all(c["ok"] for c in self.checks.values())


def _gap(upper, lower):
    """Smallest ``upper - lower`` with inf - inf read as inf."""
    both = np.isinf(upper) & np.isinf(lower)
    with np.errstate(invalid="ignore"):
        g = np.where(both, np.inf, np.asarray(upper) - np.asarray(lower))
    return float(np.min(g))


def _check(report, name, ok, margin):
    report.checks[name] = {"ok": bool(ok), "margin": float(margin)}


def assemble_report(m: Manifold, config: ReportConfig | None = None) -> RadiusReport:
    """Compute every radius, formula and oracle value and check the relations between them."""
    cfg = config or ReportConfig()
    H = _horizon(m, cfg.horizon)
    rep = RadiusReport(m, H, [], config=cfg)
    pts = report_points(m, H, cfg.stations)
    scans = []
    for q in pts:
        try:
            sc = scan_point(m, q, cfg.n_dirs, H, cfg.step, cut=_is_pole(m, q) or m.homogeneous, loops=False)
            rc = conjugate_radius_at(m, q, step=cfg.step, scan=sc)
            rf = focal_radius_at(m, q, step=cfg.step, scan=sc)
            loop = loop_length_at(m, q, H, n_dirs=cfg.n_dirs, step=cfg.step)
            inj_o = None
            if not np.all(np.isnan(sc.cut)):
                inj_o = _zoom(m, sc.point, sc.angles, sc.cut, "cut", H, cfg.step)[0]
            rep.points.append(PointRadii(tuple(q), rc, rf, loop, min(rc, 0.5 * loop), inj_o))
            scans.append(sc)
            _check(rep, f"focal<=conjugate@{q[0]:.4g}",
                   bool(np.all(sc.focal <= sc.conjugate)), _gap(sc.conjugate, sc.focal))
            _check(rep, f"wronskian@{q[0]:.4g}", sc.wronskian_drift <= 1e-6, 1e-6 - sc.wronskian_drift)
            if inj_o is not None:
                _check(rep, f"cut<=conjugate@{q[0]:.4g}", bool(np.all(sc.cut <= sc.conjugate + 1e-6)),
                       _gap(sc.conjugate, sc.cut))
        except RadiusLabError as exc:
            rep.errors[f"point {q}"] = f"{type(exc).__name__}: {exc}"
    if not rep.points:
        return rep
    rep.conjugate = min(pr.conjugate for pr in rep.points)
    rep.focal = min(pr.focal for pr in rep.points)
    rep.loop = min(pr.loop for pr in rep.points)
    cg = shortest_closed_geodesic(m)
    rep.closed_geodesic, rep.closed_geodesic_provenance = cg.length, cg.provenance
    rep.inj_formula = min(rep.conjugate, 0.5 * cg.length)
    orc = [pr.inj_oracle for pr in rep.points if pr.inj_oracle is not None]
    rep.inj_oracle = min(orc) if orc else None
    rep.r_formula = min(rep.focal, 0.25 * cg.length)
    if rep.inj_oracle is not None:
        a, b = rep.inj_formula, rep.inj_oracle
        rel = 0.0 if (math.isinf(a) and math.isinf(b)) else abs(a - b) / max(abs(a), 1e-12)
        _check(rep, "inj_formula~inj_oracle", rel <= 0.02, 0.02 - rel)
    if math.isfinite(rep.conjugate):
        _check(rep, "r_f<=r_c/2", rep.focal <= 0.5 * rep.conjugate + 1e-3,
               0.5 * rep.conjugate + 1e-3 - rep.focal)
    try:
        cr = convexity_radius(m, cfg.n_pairs, cfg.seed, cfg.depth, H, cfg.n_dirs, cfg.step, points=pts,
                              oracle=cfg.oracle, scans=scans if len(scans) == len(pts) else None)
        rep.worst_point = cr.point
        if cfg.oracle:
            rep.r_oracle, rep.r_oracle_bracket = cr.oracle, cr.bracket
            rf_worst = cr.focal_radius
            _check(rep, "r_oracle<=r_f+0.02", cr.oracle <= rf_worst + 0.02, rf_worst + 0.02 - cr.oracle)
    except RadiusLabError as exc:
        rep.errors["convexity"] = f"{type(exc).__name__}: {exc}"
    try:
        p0 = rep.worst_point or tuple(pts[0])
        pr = next(x for x in rep.points if x.point == tuple(p0))
        Rh = 0.95 * min(pr.focal, pr.inj_formula, H)
        if m.rotational and not isinstance(m, (Sphere, HyperbolicPlane)):
            Rh = min(Rh, 0.95 * (m.r_max - p0[0]))
        hc = hessian_check(m, p0, Rh, cfg.hessian_geodesics, cfg.seed)
        rep.hessian_minimum = hc.minimum
        _check(rep, "hessian>0", hc.minimum > 0, hc.minimum)
    except (RadiusLabError, StopIteration) as exc:
        rep.errors["hessian"] = f"{type(exc).__name__}: {exc}"
    return rep
