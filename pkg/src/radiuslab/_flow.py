"""Batched RK4 flow for geodesics with co-integrated Jacobi and Riccati data.

Internal coordinates per family:

* rotational surfaces: Cartesian normal coordinates ``x = r cos(theta)``,
  ``y = r sin(theta)`` about the pole, Hamiltonian form
  ``H = |p|^2/2 + A(r) L^2/2`` with ``A = 1/f^2 - 1/r^2`` and
  ``L = x p_y - y p_x``.  ``A`` and ``A'/r`` are smooth at the pole.
* sphere: embedded in R^3, ``x'' = -|x'|^2 x / R^2``, projected every step.
* flat torus: straight lines in the universal cover.

The state row is ``[X, P, j, j', j2, j2', q]``.  ``j`` is the scalar normal
Jacobi field, ``j2`` a second solution used for the Wronskian, and ``q`` the
Riccati variable: ``u = j'/j`` in u-mode or ``w = 1/u`` in w-mode, switched
whenever ``|q| > 1`` so the variable stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifold import FlatTorus, HyperbolicPlane, Sphere, WarpedSurface

R_SERIES = 1e-2
_TWO_PI = 2.0 * math.pi


class RotationalSystem:
    dim = 2

    def __init__(self, profile, r_max):
        self.profile = profile
        self.r_max = float(r_max)
        self.K0 = float(profile.pole_curvature)

    def tail(self):
        """``(r0, K)`` with ``K <= 0`` constant and ``f' > 0`` on ``r >= r0``, else None."""
        prof = self.profile
        kind = getattr(prof, "kind", None)
        if kind in ("sinh", "identity"):
            return 0.0, float(prof.curvature(1.0))
        if kind == "tabulated":
            r0, K = prof.spec.knots[-1]
            if K <= 0.0 and r0 < self.r_max and float(prof.fp(r0)) > 0.0:
                return float(r0), float(K)
        return None

    def terms(self, r):
        f, fp, K = self.profile.evaluate(r)
        small = r < R_SERIES
        rs = np.where(small, 1.0, r)
        fs = np.where(small, 1.0, f)
        inv_f2 = 1.0 / (fs * fs)
        inv_r2 = 1.0 / (rs * rs)
        A = inv_f2 - inv_r2
        B = 2.0 * (inv_r2 * inv_r2 - fp * inv_f2 / (rs * fs))
        if small.any():
            K0 = self.K0
            r2 = r * r
            A = np.where(small, K0 / 3.0 + K0 * K0 * r2 / 15.0, A)
            B = np.where(small, 2.0 * K0 * K0 / 15.0, B)
        return K, A, B

    def rhs(self, X, P):
        x, y = X[:, 0], X[:, 1]
        px, py = P[:, 0], P[:, 1]
        r = np.hypot(x, y)
        K, A, B = self.terms(r)
        L = x * py - y * px
        AL = A * L
        hb = 0.5 * L * L * B
        dX = np.empty_like(X)
        dP = np.empty_like(P)
        dX[:, 0] = px - AL * y
        dX[:, 1] = py + AL * x
        dP[:, 0] = -AL * py - hb * x
        dP[:, 1] = AL * px - hb * y
        return dX, dP, K

    def project(self, Z):
        return Z

    def speed(self, X, P):
        r = np.hypot(X[:, 0], X[:, 1])
        _, A, _ = self.terms(r)
        L = X[:, 0] * P[:, 1] - X[:, 1] * P[:, 0]
        return np.sqrt(np.maximum(P[:, 0] ** 2 + P[:, 1] ** 2 + A * L * L, 0.0))

    def curvature(self, X):
        return self.profile.evaluate(np.hypot(X[:, 0], X[:, 1]))[2]

    def velocity(self, X, P):
        return self.rhs(X, P)[0]

    def inside(self, X):
        return np.hypot(X[:, 0], X[:, 1]) < self.r_max

    def radius(self, X):
        return np.hypot(X[:, 0], X[:, 1])

    def _rho(self, r):
        f = self.profile.evaluate(np.maximum(r, 1e-300))[0]
        small = r < R_SERIES
        return np.where(small, 1.0 + self.K0 * r * r / 6.0, r / np.where(small, 1.0, f))

    def normal(self, X, V):
        """Unit normal rotating the unit velocity by +90 degrees."""
        r = np.hypot(X[:, 0], X[:, 1])
        tiny = r < 1e-12
        rs = np.where(tiny, 1.0, r)
        n = np.stack([X[:, 0] / rs, X[:, 1] / rs], axis=1)
        nperp = np.stack([-n[:, 1], n[:, 0]], axis=1)
        rho = self._rho(r)
        a = np.sum(V * n, axis=1)
        c = np.sum(V * nperp, axis=1)
        E = (-c / rho)[:, None] * n + (a * rho)[:, None] * nperp
        rot = np.stack([-V[:, 1], V[:, 0]], axis=1)
        return np.where(tiny[:, None], rot, E)

    amb_dim = 2

    def ambient(self, X):
        return X

    def ambient_diff(self, A, B):
        return A - B

    def ambient_tangent(self, X, W):
        return W

    # public coordinates: (r, theta), (vr, vtheta)
    def from_public(self, pts, vel):
        pts = np.atleast_2d(np.asarray(pts, float))
        vel = np.atleast_2d(np.asarray(vel, float))
        r, th = pts[:, 0], pts[:, 1]
        vr, vth = vel[:, 0], vel[:, 1]
        f = self.profile.evaluate(r)[0]
        pole = r == 0.0
        # at the pole the state means "leave along meridian theta at rate vr"
        c, s = np.cos(th), np.sin(th)
        X = np.stack([r * c, r * s], axis=1)
        rs = np.where(pole, 1.0, r)
        tang = np.where(pole, 0.0, f * f / rs * vth)
        P = np.stack([vr * c - tang * s, vr * s + tang * c], axis=1)
        return X, P

    def from_angle(self, pts, alpha):
        pts, alpha = _bcast(pts, alpha)
        r, th = pts[:, 0], pts[:, 1]
        f = self.profile.evaluate(r)[0]
        pole = r == 0.0
        vr = np.where(pole, 1.0, np.cos(alpha))
        vth = np.where(pole, 0.0, np.sin(alpha) / np.where(pole, 1.0, f))
        th_eff = np.where(pole, th + alpha, th)
        return self.from_public(np.stack([r, th_eff], axis=1), np.stack([vr, vth], axis=1))

    def to_public(self, X, P):
        x, y = X[:, 0], X[:, 1]
        r = np.hypot(x, y)
        pole = r < 1e-300
        th = np.where(pole, np.arctan2(P[:, 1], P[:, 0]), np.arctan2(y, x)) % _TWO_PI
        rs = np.where(pole, 1.0, r)
        vr = np.where(pole, np.hypot(P[:, 0], P[:, 1]), (x * P[:, 0] + y * P[:, 1]) / rs)
        f = self.profile.evaluate(r)[0]
        L = x * P[:, 1] - y * P[:, 0]
        vth = np.where(pole, 0.0, L / np.where(pole, 1.0, f * f))
        return np.stack([r, th], axis=1), np.stack([vr, vth], axis=1)

    def clairaut(self, X, P):
        return X[:, 0] * P[:, 1] - X[:, 1] * P[:, 0]


class SphereSystem:
    dim = 3
    amb_dim = 3

    def __init__(self, radius):
        self.R = float(radius)
        self.K = 1.0 / self.R**2

    def rhs(self, X, V):
        v2 = np.einsum("ij,ij->i", V, V)
        return V, -(v2 * self.K)[:, None] * X, np.full(len(X), self.K)

    def project(self, Z):
        X = Z[:, 0:3]
        V = Z[:, 3:6]
        nrm = np.linalg.norm(X, axis=1)
        X *= (self.R / nrm)[:, None]
        V -= (np.einsum("ij,ij->i", V, X) / self.R**2)[:, None] * X
        return Z

    def speed(self, X, V):
        return np.linalg.norm(V, axis=1)

    def curvature(self, X):
        return np.full(len(X), self.K)

    def velocity(self, X, V):
        return V

    def inside(self, X):
        return np.ones(len(X), dtype=bool)

    def radius(self, X):
        return self.R * np.arccos(np.clip(X[:, 2] / self.R, -1.0, 1.0))

    def normal(self, X, V):
        return np.cross(X / self.R, V)

    def ambient(self, X):
        return X

    def ambient_diff(self, A, B):
        return A - B

    def ambient_tangent(self, X, W):
        return W

    def from_public(self, pts, vel):
        pts = np.atleast_2d(np.asarray(pts, float))
        vel = np.atleast_2d(np.asarray(vel, float))
        R = self.R
        phi = pts[:, 0] / R
        th = pts[:, 1]
        sp, cp, st, ct = np.sin(phi), np.cos(phi), np.sin(th), np.cos(th)
        X = R * np.stack([sp * ct, sp * st, cp], axis=1)
        e_r = np.stack([cp * ct, cp * st, -sp], axis=1)
        e_t = R * sp[:, None] * np.stack([-st, ct, np.zeros_like(st)], axis=1)
        V = vel[:, 0:1] * e_r + vel[:, 1:2] * e_t
        return X, V

    def from_angle(self, pts, alpha):
        pts, alpha = _bcast(pts, alpha)
        R = self.R
        phi = pts[:, 0] / R
        f = R * np.sin(phi)
        pole = np.abs(f) < 1e-14
        vr = np.where(pole, np.where(phi > 1.0, -1.0, 1.0), np.cos(alpha))
        vth = np.where(pole, 0.0, np.sin(alpha) / np.where(pole, 1.0, f))
        th = np.where(pole, pts[:, 1] + alpha, pts[:, 1])
        return self.from_public(np.stack([pts[:, 0], th], axis=1), np.stack([vr, vth], axis=1))

    def to_public(self, X, V):
        R = self.R
        phi = np.arccos(np.clip(X[:, 2] / R, -1.0, 1.0))
        sp = np.sin(phi)
        pole = sp < 1e-14
        th = np.where(pole, np.arctan2(V[:, 1], V[:, 0]), np.arctan2(X[:, 1], X[:, 0])) % _TWO_PI
        st, ct, cp = np.sin(th), np.cos(th), np.cos(phi)
        e_r = np.stack([cp * ct, cp * st, -sp], axis=1)
        vr = np.einsum("ij,ij->i", V, e_r)
        vth = np.where(pole, 0.0, (-V[:, 0] * st + V[:, 1] * ct) / (R * np.where(pole, 1.0, sp)))
        return np.stack([R * phi, th], axis=1), np.stack([vr, vth], axis=1)

    def clairaut(self, X, V):
        return X[:, 0] * V[:, 1] - X[:, 1] * V[:, 0]


class FlatSystem:
    dim = 2
    amb_dim = 2

    def __init__(self, l1, l2):
        self.l = np.array([l1, l2], dtype=float)

    def rhs(self, X, P):
        return P, np.zeros_like(P), np.zeros(len(X))

    def project(self, Z):
        return Z

    def speed(self, X, P):
        return np.hypot(P[:, 0], P[:, 1])

    def curvature(self, X):
        return np.zeros(len(X))

    def velocity(self, X, P):
        return P

    def inside(self, X):
        return np.ones(len(X), dtype=bool)

    def normal(self, X, V):
        return np.stack([-V[:, 1], V[:, 0]], axis=1)

    def ambient(self, X):
        return X

    def ambient_diff(self, A, B):
        d = A - B
        return d - self.l * np.round(d / self.l)

    def ambient_tangent(self, X, W):
        return W

    def from_public(self, pts, vel):
        return np.atleast_2d(np.asarray(pts, float)).copy(), np.atleast_2d(np.asarray(vel, float)).copy()

    def from_angle(self, pts, alpha):
        X, alpha = _bcast(pts, alpha)
        return X, np.stack([np.cos(alpha), np.sin(alpha)], axis=1)

    def to_public(self, X, P):
        return X % self.l, P.copy()

    def clairaut(self, X, P):
        return np.zeros(len(X))


def _bcast(pts, alpha):
    pts = np.atleast_2d(np.asarray(pts, float))
    alpha = np.atleast_1d(np.asarray(alpha, float))
    n = max(len(pts), len(alpha))
    return np.broadcast_to(pts, (n, 2)).copy(), np.broadcast_to(alpha, (n,)).copy()


def system_for(m):
    if isinstance(m, Sphere):
        return SphereSystem(m.radius)
    if isinstance(m, FlatTorus):
        return FlatSystem(m.l1, m.l2)
    if isinstance(m, (HyperbolicPlane, WarpedSurface)):
        return RotationalSystem(m.profile, m.r_max)
    raise TypeError(f"unsupported manifold {m!r}")


# ---------------------------------------------------------------------------
# RK4 on the joint state


def _rhs(sys, Z, wmode):
    d = sys.dim
    X = Z[:, :d]
    P = Z[:, d:2 * d]
    dX, dP, K = sys.rhs(X, P)
    out = np.empty_like(Z)
    out[:, :d] = dX
    out[:, d:2 * d] = dP
    j, jp, j2, j2p, q = (Z[:, 2 * d + i] for i in range(5))
    out[:, 2 * d] = jp
    out[:, 2 * d + 1] = -K * j
    out[:, 2 * d + 2] = j2p
    out[:, 2 * d + 3] = -K * j2
    qq = q * q
    out[:, 2 * d + 4] = np.where(wmode, 1.0 + K * qq, -K - qq)
    return out


def rk4_step(sys, Z, h, wmode):
    hc = h[:, None]
    k1 = _rhs(sys, Z, wmode)
    k2 = _rhs(sys, Z + 0.5 * hc * k1, wmode)
    k3 = _rhs(sys, Z + 0.5 * hc * k2, wmode)
    k4 = _rhs(sys, Z + hc * k3, wmode)
    return sys.project(Z + hc / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def _psi(q, wmode):
    """Angle with cot(psi) = u, taken in [0, pi]."""
    return np.where(wmode, np.where(q >= 0, np.arctan(q), math.pi + np.arctan(q)),
                    0.5 * math.pi - np.arctan(q))


@dataclass
class Flow:
    t: np.ndarray
    Z: np.ndarray
    h: np.ndarray
    n_steps: np.ndarray
    exit_t: np.ndarray
    conj_t: np.ndarray
    focal_t: np.ndarray
    blow_t: np.ndarray
    psi_max: np.ndarray
    wmode: np.ndarray
    wronskian_drift: np.ndarray
    speed_drift: np.ndarray
    clairaut_drift: np.ndarray
    tangency: np.ndarray
    samples: np.ndarray | None
    sample_t: np.ndarray | None
    sample_wmode: np.ndarray | None
    dim: int

    def col(self, name):
        d = self.dim
        return {"j": 2 * d, "jp": 2 * d + 1, "j2": 2 * d + 2, "j2p": 2 * d + 3, "q": 2 * d + 4}[name]


def initial_state(sys, X, P, j0=0.0, j0p=1.0, u0=math.inf):
    n = len(X)
    d = sys.dim
    Z = np.zeros((n, 2 * d + 5))
    Z[:, :d] = X
    Z[:, d:2 * d] = P
    Z[:, 2 * d] = j0
    Z[:, 2 * d + 1] = j0p
    Z[:, 2 * d + 2] = 1.0
    Z[:, 2 * d + 3] = 0.0
    u0 = np.broadcast_to(np.asarray(u0, float), (n,))
    wmode = ~(np.abs(u0) <= 1.0)
    with np.errstate(divide="ignore"):
        Z[:, 2 * d + 4] = np.where(wmode, np.where(np.isinf(u0), 0.0, 1.0 / np.where(u0 == 0, 1.0, u0)), u0)
    return Z, wmode


def propagate(sys, Z0, wmode0, T, h, stride=None, events=True):
    """Integrate every row of ``Z0`` for arclength ``T`` (per row) with step <= h.

    Rows that leave the chart are frozen at the last interior state and
    their exit time recorded.  With ``stride``, every ``stride``-th state
    (and the initial one) is kept in ``samples``.
    """
    Z = np.array(Z0, dtype=float)
    n = len(Z)
    d = sys.dim
    T = np.broadcast_to(np.asarray(T, float), (n,)).copy()
    nst = np.maximum(np.ceil(T / h - 1e-9).astype(np.int64), 1)
    hs = T / nst
    wmode = np.array(wmode0, dtype=bool)
    ij, ijp, ij2, ij2p, iq = 2 * d, 2 * d + 1, 2 * d + 2, 2 * d + 3, 2 * d + 4
    t = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    exit_t = np.full(n, np.nan)
    nan = np.full(n, np.nan)
    conj_t, focal_t, blow_t = nan.copy(), nan.copy(), nan.copy()
    conj_Z = np.zeros_like(Z)
    focal_Z = np.zeros_like(Z)
    conj_t0 = np.zeros(n)
    focal_t0 = np.zeros(n)
    psi_max = _psi(Z[:, iq], wmode)
    W0 = Z[:, ij] * Z[:, ij2p] - Z[:, ij2] * Z[:, ijp]
    wr = np.zeros(n)
    s0 = sys.speed(Z[:, :d], Z[:, d:2 * d])
    sp = np.zeros(n)
    c0 = sys.clairaut(Z[:, :d], Z[:, d:2 * d])
    cl = np.zeros(n)
    tang = np.zeros(n, dtype=bool)
    nmax = int(nst.max())
    samples = sample_t = sample_w = None
    if stride:
        ns = nmax // stride + 1
        samples = np.full((n, ns, Z.shape[1]), np.nan)
        sample_t = np.full((n, ns), np.nan)
        sample_w = np.zeros((n, ns), dtype=bool)
        samples[:, 0] = Z
        sample_t[:, 0] = 0.0
        sample_w[:, 0] = wmode
    for k in range(nmax):
        active = alive & (k < nst)
        if not active.any():
            break
        hk = np.where(active, hs, 0.0)
        Zn = rk4_step(sys, Z, hk, wmode)
        out = active & ~sys.inside(Zn[:, :d])
        if out.any():
            exit_t[out] = t[out] + hs[out]
            alive &= ~out
            active &= ~out
            Zn[out] = Z[out]
            hk = np.where(out, 0.0, hk)
        if events:
            jo, jn = Z[:, ij], Zn[:, ij]
            hit = active & (jo != 0.0) & (np.sign(jo) != np.sign(jn)) & np.isnan(conj_t)
            if hit.any():
                conj_t[hit] = -1.0
                conj_Z[hit] = Z[hit]
                conj_t0[hit] = t[hit]
            po, pn = Z[:, ijp], Zn[:, ijp]
            fhit = active & (po != 0.0) & (np.sign(po) != np.sign(pn)) & np.isnan(focal_t) & \
                ((conj_t != conj_t) | hit)
            if fhit.any():
                focal_t[fhit] = -1.0
                focal_Z[fhit] = Z[fhit]
                focal_t0[fhit] = t[fhit]
            qo, qn = Z[:, iq], Zn[:, iq]
            bl = active & wmode & (qo < 0.0) & (qn >= 0.0) & np.isnan(blow_t)
            if bl.any():
                blow_t[bl] = t[bl] + hs[bl] * (-qo[bl]) / (qn[bl] - qo[bl])
            a1, a2 = Zn[:, ij] * Zn[:, ij2p], Zn[:, ij2] * Zn[:, ijp]
            # drift relative to the size of the products (absolute while they are O(1))
            wscale = np.maximum(np.maximum(np.abs(a1), np.abs(a2)), 1.0)
            np.maximum(wr, np.where(active, np.abs(a1 - a2 - W0) / wscale, 0.0), out=wr)
            tang |= active & (np.abs(jn) < 1e-10) & (np.abs(Zn[:, ijp]) < 1e-8)
        # switch Riccati representation to keep q bounded
        big = np.abs(Zn[:, iq]) > 1.0
        if big.any():
            Zn[big, iq] = 1.0 / Zn[big, iq]
            wmode = np.where(big, ~wmode, wmode)
        if events:
            ps = np.where(np.isnan(blow_t), _psi(Zn[:, iq], wmode), math.pi)
            np.maximum(psi_max, np.where(active, ps, psi_max), out=psi_max)
            X, P = Zn[:, :d], Zn[:, d:2 * d]
            np.maximum(sp, np.where(active, np.abs(sys.speed(X, P) - s0), 0.0), out=sp)
            np.maximum(cl, np.where(active, np.abs(sys.clairaut(X, P) - c0), 0.0), out=cl)
        Z = Zn
        t = t + hk
        if stride and (k + 1) % stride == 0:
            i = (k + 1) // stride
            keep = alive & ((k + 1) <= nst)
            samples[keep, i] = Z[keep]
            sample_t[keep, i] = t[keep]
            sample_w[keep, i] = wmode[keep]
    if events:
        m = conj_t == -1.0
        if m.any():
            conj_t[m] = conj_t0[m] + refine_root(sys, conj_Z[m], hs[m], ij)
        m = focal_t == -1.0
        if m.any():
            focal_t[m] = focal_t0[m] + refine_root(sys, focal_Z[m], hs[m], ijp)
        # a focal crossing recorded in the conjugate step only counts if it comes first
        late = ~np.isnan(focal_t) & ~np.isnan(conj_t) & (focal_t >= conj_t)
        focal_t[late] = np.nan
    return Flow(t=t, Z=Z, h=hs, n_steps=nst, exit_t=exit_t, conj_t=conj_t, focal_t=focal_t,
                blow_t=blow_t, psi_max=psi_max, wmode=wmode, wronskian_drift=wr,
                speed_drift=sp, clairaut_drift=cl, tangency=tang, samples=samples,
                sample_t=sample_t, sample_wmode=sample_w, dim=d)


def refine_root(sys, Z0, hmax, col, iters=60, tol=1e-14):
    """Illinois-safeguarded secant on the sub-step length bracketing a sign change."""
    n = len(Z0)
    wm = np.ones(n, dtype=bool)
    a = np.zeros(n)
    b = np.array(hmax, dtype=float)
    fa = Z0[:, col].copy()
    fb = rk4_step(sys, Z0, b, wm)[:, col]
    side = np.zeros(n)
    c = 0.5 * (a + b)
    for _ in range(iters):
        denom = fb - fa
        c = np.where(denom != 0.0, b - fb * (b - a) / np.where(denom != 0.0, denom, 1.0), 0.5 * (a + b))
        c = np.clip(c, np.minimum(a, b), np.maximum(a, b))
        fc = rk4_step(sys, Z0, c, wm)[:, col]
        left = np.sign(fc) == np.sign(fa)
        # replace the endpoint that shares the sign of fc; halve the stale one
        a_new = np.where(left, c, a)
        fa_new = np.where(left, fc, np.where(side == -1, fa * 0.5, fa))
        b_new = np.where(left, b, c)
        fb_new = np.where(left, np.where(side == 1, fb * 0.5, fb), fc)
        side = np.where(left, 1, -1)
        done = np.abs(b_new - a_new) < tol
        a, b, fa, fb = a_new, b_new, fa_new, fb_new
        if done.all():
            break
        hit0 = fc == 0.0
        if hit0.any():
            a = np.where(hit0, c, a)
            b = np.where(hit0, c, b)
    return c


def advance(sys, Z, T, h):
    """Plain geodesic+Jacobi advance by arclength T (per row), no event logic."""
    fl = propagate(sys, Z, np.ones(len(Z), dtype=bool), T, h, events=False)
    return fl.Z, fl.exit_t


def continue_tail(sys, fl, horizon):
    """Extend Jacobi events past a chart exit into a constant-curvature tail.

    A geodesic leaving outward where ``K = -k^2 <= 0`` is constant and
    ``f' > 0`` keeps moving outward in that region, so ``j`` is known in
    closed form from its exit data.  Returns updated ``(conj_t, focal_t,
    blow_t, psi_max)`` and a mask of exits that could not be resolved.
    """
    conj, focal, blow, psi = fl.conj_t.copy(), fl.focal_t.copy(), fl.blow_t.copy(), fl.psi_max.copy()
    exited = ~np.isnan(fl.exit_t)
    unresolved = exited.copy()
    tail = sys.tail() if hasattr(sys, "tail") else None
    if tail is None or not exited.any():
        return conj, focal, blow, psi, unresolved
    r0, K = tail
    k = math.sqrt(-K)
    d = sys.dim
    X, P = fl.Z[:, :d], fl.Z[:, d:2 * d]
    r = np.hypot(X[:, 0], X[:, 1])
    vr = np.sum(X * P, axis=1) / np.maximum(r, 1e-300)
    ok = exited & (r >= r0) & (vr > 0)
    unresolved = exited & ~ok
    j, jp = fl.Z[:, fl.col("j")], fl.Z[:, fl.col("jp")]
    for i in np.nonzero(ok & np.isnan(conj))[0]:
        t0, a, b = fl.t[i], j[i], jp[i]
        # j(t0 + s) = a cosh(ks) + b sinh(ks)/k, with the k -> 0 limit a + b s
        u = b / a
        if k > 0:
            tc = math.atanh(-k / u) / k if u < -k else math.inf
            tf = math.atanh(-u / k) / k if -k < u < 0 else math.inf
            u_lim = k
        else:
            tc = -1.0 / u if u < 0 else math.inf
            tf = math.inf
            u_lim = 0.0
        if t0 + tc <= horizon:
            conj[i] = t0 + tc
            blow[i] = t0 + tc
            psi[i] = math.pi
        elif u > u_lim:
            psi[i] = max(psi[i], 0.5 * math.pi - math.atan(u_lim))
        if np.isnan(focal[i]) and t0 + tf <= min(horizon, t0 + tc):
            focal[i] = t0 + tf
    return conj, focal, blow, psi, unresolved
