"""Prescribed mean curvature Dirichlet problems on hyperbolic geodesic balls.

The unknown is the log-radial height u on a ball of the hyperbolic plane,
discretized on a geodesic polar grid. The equation is the divergence form

    div_h(w Du) = m (e^u Hbar(u; q) - w),    w = (1 - |Du|_h^2)^(-1/2),

with Dirichlet data on the boundary circle. The scheme is a finite volume
balance with tilt factors evaluated on cell faces, solved by damped Newton
with an analytic sparse Jacobian. A radial shooting integrator provides an
independent oracle for rotationally symmetric data, and a residual check in
the conformal disk chart cross-validates converged solutions against a
different form of the same operator.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .errors import BracketError, NotSpacelikeError, UsageError
from .fields import PolarGrid, ScalarField

_M = 2  # PDE grids are two dimensional; the radial oracle accepts any m


# ---------------------------------------------------------------------------
# curvature data


@dataclass(frozen=True)
class PrescribedCurvature:
    """Mean curvature data on the future cone, in log-radial coordinates.

    hbar(t, s, theta) evaluates the prescribed curvature at the point with
    Lorentzian distance e^t over the hyperbolic-plane point (s, theta); all
    three arguments broadcast. dtheta_dt, when given, is the analytic
    derivative d/dt [e^t hbar(t, s, theta)]; a centered difference is used
    otherwise. The validity box [t_min, t_max] bounds the heights at which
    the data is trusted (and sampled by the hypothesis checks).
    """

    name: str
    hbar: object
    dtheta_dt: object = None
    t_min: float = math.log(0.2)
    t_max: float = math.log(5.0)
    radial: bool = True

    def theta(self, t, s, th=0.0):
        """Theta(t, q) = e^t Hbar(q e^t)."""
        return np.exp(t) * self.hbar(t, s, th)

    def dtheta(self, t, s, th=0.0):
        if self.dtheta_dt is not None:
            return self.dtheta_dt(t, s, th)
        dt = 1e-6
        up = np.exp(t + dt) * self.hbar(t + dt, s, th)
        dn = np.exp(t - dt) * self.hbar(t - dt, s, th)
        return (up - dn) / (2 * dt)


def constant_curvature(c):
    c = float(c)
    if not c > 0:
        raise UsageError("constant curvature must be positive")

    def hbar(t, s, th=0.0):
        return np.broadcast_arrays(np.asarray(t, dtype=float) * 0.0 + c, s)[0]

    def dth(t, s, th=0.0):
        return np.broadcast_arrays(c * np.exp(np.asarray(t, dtype=float)), s)[0]

    return PrescribedCurvature("const:%g" % c, hbar, dth)


def rational_curvature(eps=0.0):
    """2 l / (1 + l^2) profile with an optional sech(s) enhancement.

    At eps = 0 the unit hyperboloid solves the equation exactly. For
    eps > 0 the data stays admissible with barrier radii (0.8, 1.25) as
    long as eps < 0.28125: the tight side is 2 l^2 (1 + eps) / (1 + l^2) < 1
    at l = 0.8 and s = 0.
    """
    eps = float(eps)
    if eps < 0 or eps >= 1:
        raise UsageError("sech amplitude must lie in [0, 1)")

    def hbar(t, s, th=0.0):
        ell = np.exp(np.asarray(t, dtype=float))
        return 2 * ell / (1 + ell**2) * (1 + eps / np.cosh(s))

    def dth(t, s, th=0.0):
        e2 = np.exp(2 * np.asarray(t, dtype=float))
        return 4 * e2 / (1 + e2) ** 2 * (1 + eps / np.cosh(s))

    return PrescribedCurvature("rational:%g" % eps, hbar, dth)


def dilation_curvature():
    """Hbar = 1/l. Scale invariant: e^t hbar is constant in t."""

    def hbar(t, s, th=0.0):
        return np.broadcast_arrays(np.exp(-np.asarray(t, dtype=float)), s)[0]

    def dth(t, s, th=0.0):
        return np.broadcast_arrays(np.zeros_like(np.asarray(t, dtype=float)), s)[0]

    return PrescribedCurvature("dilation", hbar, dth)


def table_curvature(path):
    """Bicubic interpolant of a sampled (t, s) table.

    CSV layout: first row is a label cell followed by the s grid, each later
    row is a t value followed by Hbar samples. Queries are clamped to the
    table box. Positivity is checked on the samples.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line.split(","))
    if len(rows) < 5 or len(rows[0]) < 5:
        raise UsageError("curvature table needs at least a 4x4 value grid")
    try:
        s_grid = np.array([float(v) for v in rows[0][1:]])
        t_grid = np.array([float(r[0]) for r in rows[1:]])
        vals = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise UsageError("malformed curvature table: %s" % exc) from exc
    if vals.shape != (len(t_grid), len(s_grid)):
        raise UsageError("ragged curvature table")
    if np.any(np.diff(t_grid) <= 0) or np.any(np.diff(s_grid) <= 0):
        raise UsageError("table grids must be strictly increasing")
    if vals.min() <= 0:
        raise UsageError("curvature table contains non-positive values")
    spl = RectBivariateSpline(t_grid, s_grid, vals, kx=3, ky=3, s=0)
    t_lo, t_hi = float(t_grid[0]), float(t_grid[-1])
    s_lo, s_hi = float(s_grid[0]), float(s_grid[-1])

    def _ev(t, s, dx=0):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        tq = np.clip(t, t_lo, t_hi).ravel()
        sq = np.clip(s, s_lo, s_hi).ravel()
        return spl.ev(tq, sq, dx=dx).reshape(t.shape)

    def hbar(t, s, th=0.0):
        return _ev(t, s)

    def dth(t, s, th=0.0):
        return np.exp(t) * (_ev(t, s) + _ev(t, s, dx=1))

    return PrescribedCurvature("table:%s" % path, hbar, dth, t_min=t_lo, t_max=t_hi)


def parse_curvature(spec):
    """Builtin curvature data from a spec string.

    const:<c>, rational[:<eps>], dilation, table:<csv path>.
    """
    head, _, arg = str(spec).partition(":")
    if head == "const":
        if not arg:
            raise UsageError("const curvature needs a value, e.g. const:1")
        try:
            return constant_curvature(float(arg))
        except ValueError as exc:
            raise UsageError("bad constant: %r" % arg) from exc
    if head == "rational":
        try:
            return rational_curvature(float(arg) if arg else 0.0)
        except ValueError as exc:
            raise UsageError("bad amplitude: %r" % arg) from exc
    if head == "dilation":
        return dilation_curvature()
    if head == "table":
        if not arg:
            raise UsageError("table curvature needs a file path")
        return table_curvature(arg)
    raise UsageError("unknown curvature spec %r" % spec)


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass
class HypothesisReport:
    name: str
    h1_min: float
    h2_Lambda: float
    h3_l: float | None
    h3_L: float | None
    hbar_min: float
    passes: dict
    sampling: dict
    requested: tuple | None = None
    requested_ok: bool | None = None

    def as_dict(self):
        out = {
            "name": self.name,
            "h1_min": self.h1_min,
            "h2_Lambda": self.h2_Lambda,
            "h3_l": self.h3_l,
            "h3_L": self.h3_L,
            "hbar_min": self.hbar_min,
            "passes": dict(self.passes),
            "sampling": dict(self.sampling),
        }
        if self.requested is not None:
            out["requested"] = list(self.requested)
            out["requested_ok"] = self.requested_ok
        return out


def check_hypotheses(H, n_t=41, n_s=41, s_span=8.0, requested_radii=None, c_floor=1e-8):
    """Sampled verification of the admissibility conditions on Hbar.

    Checks, on a (t, s) sample grid over the validity box and a hyperbolic
    ball of radius s_span: monotonicity of Theta = e^t Hbar in t (weak and
    strict versions), a C^1-size estimate Lambda from values and difference
    quotients, and the existence of barrier radii l <= 1 <= L with
    l Hbar(q l) < 1 and L Hbar(q L) > 1 everywhere. These are sampled
    certificates, not proofs; the sampling spec travels with the report.
    """
    if not (H.t_min < 0.0 < H.t_max):
        raise UsageError("validity box must contain t = 0 (the unit hyperboloid)")
    t = np.linspace(H.t_min, H.t_max, int(n_t))
    s = np.linspace(0.0, float(s_span), int(n_s))
    th_samples = [0.0] if H.radial else list(np.linspace(0.0, 2 * np.pi, 9)[:-1])

    T, S = np.meshgrid(t, s, indexing="ij")
    h1_min = np.inf
    hbar_min = np.inf
    lam = 0.0
    for th in th_samples:
        vals = np.asarray(H.hbar(T, S, th), dtype=float)
        dth = np.asarray(H.dtheta(T, S, th), dtype=float)
        h1_min = min(h1_min, float(dth.min()))
        hbar_min = min(hbar_min, float(vals.min()))
        dv_t = np.gradient(vals, t, axis=0)
        dv_s = np.gradient(vals, s, axis=1)
        lam = max(lam, float(np.abs(vals).max()), float(np.abs(dv_t).max()), float(np.abs(dv_s).max()))

    def _theta_range(ell):
        lo, hi = np.inf, -np.inf
        for th in th_samples:
            v = np.log(ell) * np.ones_like(s)
            q = np.exp(v) * np.asarray(H.hbar(v, s, th), dtype=float)
            lo = min(lo, float(q.min()))
            hi = max(hi, float(q.max()))
        return lo, hi

    strict = 1e-12
    h3_l = None
    h3_L = None
    for ell in np.exp(np.linspace(H.t_min, H.t_max, 81)):
        if ell <= 1.0:
            if _theta_range(ell)[1] < 1.0 - strict and (h3_l is None or ell > h3_l):
                h3_l = float(ell)
        if ell >= 1.0:
            if _theta_range(ell)[0] > 1.0 + strict and (h3_L is None or ell < h3_L):
                h3_L = float(ell)

    requested_ok = None
    if requested_radii is not None:
        l_req, L_req = float(requested_radii[0]), float(requested_radii[1])
        if not (0 < l_req <= 1.0 <= L_req):
            raise UsageError("requested radii must satisfy 0 < l <= 1 <= L")
        requested_ok = bool(
            _theta_range(l_req)[1] < 1.0 - strict and _theta_range(L_req)[0] > 1.0 + strict
        )

    passes = {
        "H1": bool(h1_min >= -1e-12),
        "H1p": bool(h1_min >= c_floor),
        "H2": bool(np.isfinite(lam)),
        "H3": bool(h3_l is not None and h3_L is not None),
        "positive": bool(hbar_min > 0),
    }
    sampling = {
        "n_t": int(n_t),
        "n_s": int(n_s),
        "s_span": float(s_span),
        "t_range": [float(H.t_min), float(H.t_max)],
        "n_theta": len(th_samples),
    }
    return HypothesisReport(
        H.name, h1_min, lam, h3_l, h3_L, hbar_min, passes, sampling,
        requested_radii if requested_radii is None else (float(requested_radii[0]), float(requested_radii[1])),
        requested_ok,
    )


# ---------------------------------------------------------------------------
# finite volume discretization


def _as_boundary(boundary, grid):
    th = grid.theta_nodes
    if callable(boundary):
        g = np.broadcast_to(np.asarray(boundary(th), dtype=float), (grid.n_theta,))
        return g.astype(float).copy()
    g = np.asarray(boundary, dtype=float)
    if g.ndim == 0:
        return np.full(grid.n_theta, float(g))
    if g.shape != (grid.n_theta,):
        raise UsageError("boundary data must be scalar, callable, or one value per angle")
    return g.copy()


class DiscreteProblem:
    """Finite volume residual and Jacobian on a geodesic polar grid.

    Unknowns are the pole value followed by the interior rings (row major,
    angle fastest). The boundary ring carries Dirichlet data. Fluxes through
    cell faces use face-centered tilt factors; around the pole the balance
    runs over a geodesic disk of radius ds/2.
    """

    def __init__(self, grid, H, boundary=0.0):
        if grid.n_s < 3:
            raise UsageError("need at least two interior rings")
        self.grid = grid
        self.H = H
        self.g = _as_boundary(boundary, grid)
        ns, nth = grid.n_s, grid.n_theta
        self.n_unknowns = 1 + (ns - 1) * nth
        ds, dth = grid.ds, grid.dtheta
        s = grid.s_nodes
        self.s_face = np.sinh(s[:-1] + ds / 2)[:, None]
        self.s_node = np.sinh(s[1:ns])[:, None]
        area = np.empty(ns + 1)
        area[0] = 2 * np.pi * (np.cosh(ds / 2) - 1.0)
        area[1:ns] = 2 * np.sinh(s[1:ns]) * np.sinh(ds / 2) * dth
        area[ns] = 1.0  # boundary cells never assembled
        self.area = area
        self.cos_th = np.cos(grid.theta_nodes)
        self.sin_th = np.sin(grid.theta_nodes)
        self._s_col = s[1:ns][:, None]
        self._th_row = grid.theta_nodes[None, :]
        idx = np.full((ns + 1, nth), -1, dtype=int)
        idx[0] = 0
        idx[1:ns] = np.arange(1, self.n_unknowns).reshape(ns - 1, nth)
        self.idx = idx

    def expand(self, x):
        """Full node matrix from the unknown vector (boundary row appended)."""
        ns, nth = self.grid.n_s, self.grid.n_theta
        M = np.empty((ns + 1, nth))
        M[0] = x[0]
        M[1:ns] = x[1:].reshape(ns - 1, nth)
        M[ns] = self.g
        return M

    def restrict(self, M):
        return np.concatenate([[M[0].mean()], M[1 : self.grid.n_s].ravel()])

    def _pole_gradient(self, M):
        ds = self.grid.ds
        nth = self.grid.n_theta
        a = 2.0 * (M[1] @ self.cos_th) / (nth * ds)
        b = 2.0 * (M[1] @ self.sin_th) / (nth * ds)
        return a, b

    def _face_slopes(self, M):
        ns = self.grid.n_s
        ds, dth = self.grid.ds, self.grid.dtheta
        d = (M[1:] - M[:-1]) / ds
        dth_full = (np.roll(M, -1, axis=1) - np.roll(M, 1, axis=1)) / (2 * dth)
        v = 0.5 * (dth_full[:-1] + dth_full[1:])
        gam_r = d**2 + (v / self.s_face) ** 2
        c = (np.roll(M[1:ns], -1, axis=1) - M[1:ns]) / dth
        dc = (M[2:] - M[:-2]) / (2 * ds)
        a = 0.5 * (dc + np.roll(dc, -1, axis=1))
        gam_a = a**2 + (c / self.s_node) ** 2
        gam_n = dc**2 + (dth_full[1:ns] / self.s_node) ** 2
        pa, pb = self._pole_gradient(M)
        return d, v, gam_r, c, a, gam_a, dc, dth_full, gam_n, pa, pb

    def slope_sq(self, x):
        """Max |Du|^2 over faces, interior nodes and the pole."""
        M = self.expand(x)
        _, _, gam_r, _, _, gam_a, _, _, gam_n, pa, pb = self._face_slopes(M)
        return max(float(gam_r.max()), float(gam_a.max()), float(gam_n.max()), pa**2 + pb**2)

    def _hbar_interior(self, M):
        return np.asarray(self.H.hbar(M[1 : self.grid.n_s], self._s_col, self._th_row), dtype=float)

    def residual(self, x):
        ns, nth = self.grid.n_s, self.grid.n_theta
        ds, dth = self.grid.ds, self.grid.dtheta
        M = self.expand(x)
        d, v, gam_r, c, a, gam_a, dc, dth_full, gam_n, pa, pb = self._face_slopes(M)
        worst = max(float(gam_r.max()), float(gam_a.max()), float(gam_n.max()), pa**2 + pb**2)
        if worst >= 1.0:
            raise NotSpacelikeError("grid slope reaches the light cone")
        w_r = 1.0 / np.sqrt(1.0 - gam_r)
        w_a = 1.0 / np.sqrt(1.0 - gam_a)
        w_n = 1.0 / np.sqrt(1.0 - gam_n)
        w_p = 1.0 / math.sqrt(1.0 - (pa**2 + pb**2))
        flux_r = self.s_face * w_r * d
        flux_a = w_a * c / self.s_node
        R = np.empty(self.n_unknowns)
        net = dth * (flux_r[1:] - flux_r[:-1]) + ds * (flux_a - np.roll(flux_a, 1, axis=1))
        hv = self._hbar_interior(M)
        src = _M * (np.exp(M[1:ns]) * hv - w_n)
        R[1:] = (net / self.area[1:ns, None] - src).ravel()
        h0 = float(self.H.hbar(M[0, 0], 0.0, 0.0))
        R[0] = dth * flux_r[0].sum() / self.area[0] - _M * (math.exp(M[0, 0]) * h0 - w_p)
        return R

    def jacobian(self, x):
        """Analytic linearization of residual(), as a CSR matrix."""
        ns, nth = self.grid.n_s, self.grid.n_theta
        ds, dth = self.grid.ds, self.grid.dtheta
        M = self.expand(x)
        d, v, gam_r, c, a, gam_a, dc, dth_full, gam_n, pa, pb = self._face_slopes(M)
        w_r = 1.0 / np.sqrt(1.0 - gam_r)
        w_a = 1.0 / np.sqrt(1.0 - gam_a)
        w_n = 1.0 / np.sqrt(1.0 - gam_n)
        w_p = 1.0 / math.sqrt(1.0 - (pa**2 + pb**2))
        idx = self.idx
        rows, cols, vals = [], [], []

        def put(r, cl, vl):
            keep = (r >= 0) & (cl >= 0)
            rows.append(r[keep])
            cols.append(cl[keep])
            vals.append(vl[keep])

        # radial faces between rings i and i+1, i = 0 .. ns-1
        alpha_r = self.s_face * (w_r + w_r**3 * d**2) / ds
        q_r = d * w_r**3 * v / self.s_face / (4 * dth)
        lo, hi = idx[:-1], idx[1:]
        pairs = [
            (lo, -alpha_r),
            (hi, alpha_r),
            (np.roll(lo, -1, axis=1), q_r),
            (np.roll(lo, 1, axis=1), -q_r),
            (np.roll(hi, -1, axis=1), q_r),
            (np.roll(hi, 1, axis=1), -q_r),
        ]
        coef_lo = dth / self.area[:ns, None]
        coef_hi = -dth / self.area[1:, None]
        for cl, dval in pairs:
            put(lo.ravel(), cl.ravel(), (coef_lo * dval).ravel())
            put(hi.ravel(), cl.ravel(), (coef_hi * dval).ravel())

        # angular faces between angles j and j+1 on rings 1 .. ns-1
        alpha_a = (w_a + w_a**3 * c**2 / self.s_node**2) / (self.s_node * dth)
        p_a = (c / self.s_node) * w_a**3 * a / (4 * ds)
        own = idx[1:ns]
        nxt = np.roll(own, -1, axis=1)
        up = idx[2:]
        dn = idx[: ns - 1]
        pairs = [
            (own, -alpha_a),
            (nxt, alpha_a),
            (up, p_a),
            (dn, -p_a),
            (np.roll(up, -1, axis=1), p_a),
            (np.roll(dn, -1, axis=1), -p_a),
        ]
        coef = ds / self.area[1:ns, None]
        for cl, dval in pairs:
            put(own.ravel(), cl.ravel(), (coef * dval).ravel())
            put(nxt.ravel(), cl.ravel(), (-coef * dval).ravel())

        # source terms at interior nodes
        dtheta_mid = np.asarray(self.H.dtheta(M[1:ns], self._s_col, self._th_row), dtype=float)
        put(own.ravel(), own.ravel(), (-_M * dtheta_mid).ravel())
        cth = dth_full[1:ns]
        put(own.ravel(), up.ravel(), (_M * w_n**3 * dc / (2 * ds)).ravel())
        put(own.ravel(), dn.ravel(), (-_M * w_n**3 * dc / (2 * ds)).ravel())
        put(own.ravel(), nxt.ravel(), (_M * w_n**3 * cth / self.s_node**2 / (2 * dth)).ravel())
        put(own.ravel(), np.roll(own, 1, axis=1).ravel(), (-_M * w_n**3 * cth / self.s_node**2 / (2 * dth)).ravel())

        # pole row: zeroth order term plus the tilt coupling to ring 1
        zero = np.zeros(1, dtype=int)
        put(zero, zero, np.array([-_M * float(self.H.dtheta(M[0, 0], 0.0, 0.0))]))
        dw_ring = _M * w_p**3 * (pa * self.cos_th + pb * self.sin_th) * 2.0 / (nth * ds)
        put(np.zeros(nth, dtype=int), idx[1], dw_ring)

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        n = self.n_unknowns
        return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble_residual(u, H, boundary=0.0):
    """Nodewise residual of the discrete equation, as a ScalarField.

    Interior rows hold the finite volume balance evaluated with the field's
    own boundary ring; the boundary ring of the output holds u - g. Raises
    NotSpacelikeError only when a slope reaches the light cone; merely
    violating the solver's safety margin still evaluates.
    """
    M = u.matrix()
    ns, nth = u.grid.n_s, u.grid.n_theta
    prob = DiscreteProblem(u.grid, H, M[ns])
    R = prob.residual(prob.restrict(M))
    g = _as_boundary(boundary, u.grid)
    out = np.empty((ns, nth))
    out[: ns - 1] = R[1:].reshape(ns - 1, nth)
    out[ns - 1] = M[ns] - g
    return ScalarField(u.grid, float(R[0]), out)


# ---------------------------------------------------------------------------
# damped Newton solver


@dataclass
class SolveReport:
    iterations: int
    residual_norm: float
    max_w: float
    min_u: float
    max_u: float
    converged: bool
    damping_events: int
    n_s: int
    n_theta: int
    s_max: float
    tol: float
    message: str = ""

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "max_w": self.max_w,
            "min_u": self.min_u,
            "max_u": self.max_u,
            "converged": self.converged,
            "damping_events": self.damping_events,
            "n_s": self.n_s,
            "n_theta": self.n_theta,
            "s_max": self.s_max,
            "tol": self.tol,
            "message": self.message,
        }


def bump_field(grid, amp=0.2, width=1.0):
    """Radial Gaussian bump vanishing at the boundary, handy as a guess."""
    s_max = grid.s_max

    def fn(s, th):
        return amp * np.exp(-((s / width) ** 2)) * (1 - (s / s_max) ** 2)

    return ScalarField.from_function(grid, fn)


def _initial_state(prob, u0):
    grid = prob.grid
    if u0 is None:
        x = np.full(prob.n_unknowns, float(prob.g.mean()))
    elif isinstance(u0, ScalarField):
        same = (
            u0.grid.n_s == grid.n_s
            and u0.grid.n_theta == grid.n_theta
            and abs(u0.grid.s_max - grid.s_max) < 1e-12 * max(1.0, grid.s_max)
        )
        if not same:
            raise UsageError("initial guess grid does not match")
        x = prob.restrict(u0.matrix())
    elif callable(u0):
        x = prob.restrict(ScalarField.from_function(grid, u0).matrix())
    else:
        # a bare constant would form a cliff at the boundary ring, so taper
        # the offset quadratically down to the Dirichlet data
        c = float(u0)
        gm = float(prob.g.mean())
        s = grid.s_nodes[:, None]
        M = gm + (c - gm) * (1.0 - (s / grid.s_max) ** 2) + np.zeros(grid.n_theta)
        x = prob.restrict(M)
    return x


def solve_dirichlet(
    H,
    s_max,
    n_s=64,
    n_theta=128,
    boundary=0.0,
    u0=None,
    tol=1e-10,
    max_iters=50,
    theta_min=1e-3,
    precheck=True,
):
    """Damped Newton solve of the Dirichlet problem on a geodesic ball.

    Returns (field, report). Iterates are kept inside the spacelike cone
    with margin theta_min by step scaling; steps also backtrack until the
    residual max-norm drops. Non-convergence is reported, not raised.
    """
    grid = PolarGrid(int(n_s), int(n_theta), float(s_max))
    prob = DiscreteProblem(grid, H, boundary)
    if precheck:
        try:
            hyp = check_hypotheses(H)
            if not hyp.passes["H3"]:
                warnings.warn(
                    "curvature data has no certified barrier radii; "
                    "height bounds are not guaranteed",
                    stacklevel=2,
                )
        except UsageError:
            pass
    guard = (1.0 - theta_min) ** 2
    x = _initial_state(prob, u0)
    if prob.slope_sq(x) > guard:
        raise UsageError("initial guess violates the spacelike margin")
    R = prob.residual(x)
    rn = float(np.abs(R).max())
    iterations = 0
    damping_events = 0
    converged = rn <= tol
    message = "converged at the initial state" if converged else ""
    while not converged and iterations < max_iters:
        J = prob.jacobian(x)
        step = spsolve(J.tocsc(), -R)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-8:
            xt = x + alpha * step
            if prob.slope_sq(xt) <= guard:
                Rt = prob.residual(xt)
                rt = float(np.abs(Rt).max())
                if rt <= (1.0 - 0.25 * alpha) * rn or rt <= tol:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            message = "line search stalled"
            break
        if alpha < 1.0:
            damping_events += 1
        x, R, rn = xt, Rt, rt
        iterations += 1
        if rn <= tol:
            converged = True
    if not converged and not message:
        message = "max iterations reached"
    M = prob.expand(x)
    _, _, gam_r, _, _, gam_a, _, _, gam_n, pa, pb = prob._face_slopes(M)
    gmax = max(float(gam_n.max()), pa**2 + pb**2)
    report = SolveReport(
        iterations=iterations,
        residual_norm=rn,
        max_w=1.0 / math.sqrt(1.0 - gmax),
        min_u=float(M.min()),
        max_u=float(M.max()),
        converged=bool(converged),
        damping_events=damping_events,
        n_s=grid.n_s,
        n_theta=grid.n_theta,
        s_max=grid.s_max,
        tol=tol,
        message=message,
    )
    return ScalarField.from_matrix(grid, M), report


# ---------------------------------------------------------------------------
# radial shooting oracle


@dataclass
class RadialProfile:
    s: np.ndarray
    u: np.ndarray
    du: np.ndarray
    u0: float
    step: float
    error_estimate: float

    def interp(self, s_query):
        return CubicSpline(self.s, self.u)(np.asarray(s_query, dtype=float))


class _ConeHit(Exception):
    def __init__(self, sign, s):
        self.sign = sign
        self.s = s


def _integrate_radial(H, u0, s_max, n, m, store=False):
    """Fixed-step RK4 on the radial profile equation.

    u'' = [m(e^u Hbar - w) - (m-1) w coth(s) u'] / w^3 with u'(0) = 0.
    The first node comes from the even Taylor expansion at the pole.
    """
    h = s_max / n
    kappa = math.exp(u0) * float(H.hbar(u0, 0.0, 0.0)) - 1.0

    def rhs(s, u, p):
        g = 1.0 - p * p
        if g <= 1e-12:
            raise _ConeHit(1.0 if p > 0 else -1.0, s)
        w = 1.0 / math.sqrt(g)
        hv = float(H.hbar(u, s, 0.0))
        return p, (m * (math.exp(u) * hv - w) - (m - 1) * w * p / math.tanh(s)) / w**3

    u = u0 + 0.5 * h * h * kappa
    p = h * kappa
    if store:
        us = np.empty(n + 1)
        ps = np.empty(n + 1)
        us[0], ps[0] = u0, 0.0
        us[1], ps[1] = u, p
    s = h
    for k in range(1, n):
        k1u, k1p = rhs(s, u, p)
        k2u, k2p = rhs(s + h / 2, u + h / 2 * k1u, p + h / 2 * k1p)
        k3u, k3p = rhs(s + h / 2, u + h / 2 * k2u, p + h / 2 * k2p)
        k4u, k4p = rhs(s + h, u + h * k3u, p + h * k3p)
        u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        s += h
        if store:
            us[k + 1], ps[k + 1] = u, p
    if store:
        return us, ps
    return u


def radial_ode_oracle(H, s_max, step=None, boundary=0.0, bracket=None, m=2):
    """Radial profile by shooting on the pole value.

    Independent of the PDE grid: adjusts u(0) by bracketed root finding so
    the RK4-integrated profile hits the boundary value at s_max. The error
    estimate is the max-norm change under step halving; the returned arrays
    are from the halved step.
    """
    if not H.radial:
        raise UsageError("the radial oracle needs rotationally symmetric data")
    s_max = float(s_max)
    if step is None:
        step = s_max / 4096
    n = max(16, int(round(s_max / step)))

    def shoot(u0):
        try:
            return _integrate_radial(H, u0, s_max, n, m) - boundary
        except _ConeHit as hit:
            return hit.sign * (1e6 + (s_max - hit.s))

    if bracket is None:
        lo, hi = boundary - 1.25, boundary + 1.25
    else:
        lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = shoot(lo), shoot(hi)
    widen = 0
    while flo * fhi > 0 and widen < 2:
        lo, hi = lo - (hi - lo) / 2, hi + (hi - lo) / 2
        flo, fhi = shoot(lo), shoot(hi)
        widen += 1
    if flo * fhi > 0:
        raise BracketError("no sign change for the shooting parameter in [%g, %g]" % (lo, hi))
    u0 = brentq(shoot, lo, hi, xtol=1e-13, rtol=8.9e-16)
    uc, _ = _integrate_radial(H, u0, s_max, n, m, store=True)
    uf, pf = _integrate_radial(H, u0, s_max, 2 * n, m, store=True)
    err = float(np.abs(uf[::2] - uc).max())
    s_nodes = np.linspace(0.0, s_max, 2 * n + 1)
    return RadialProfile(s_nodes, uf, pf, u0, s_max / (2 * n), err)


# ---------------------------------------------------------------------------
# conformal disk chart residual


def _chart_jets(u, i_lo, i_hi):
    """Euclidean disk-coordinate jets of a polar-grid field on rings i_lo..i_hi."""
    g = u.grid
    M = u.matrix()
    ds, dthv = g.ds, g.dtheta
    s = g.s_nodes
    sel = slice(i_lo, i_hi + 1)
    us = (M[i_lo + 1 : i_hi + 2] - M[i_lo - 1 : i_hi]) / (2 * ds)
    uss = (M[i_lo + 1 : i_hi + 2] - 2 * M[sel] + M[i_lo - 1 : i_hi]) / ds**2
    ut = (np.roll(M, -1, axis=1) - np.roll(M, 1, axis=1)) / (2 * dthv)
    utt = (np.roll(M, -1, axis=1) - 2 * M + np.roll(M, 1, axis=1)) / dthv**2
    ust = (ut[i_lo + 1 : i_hi + 2] - ut[i_lo - 1 : i_hi]) / (2 * ds)
    ut_m = ut[sel]
    utt_m = utt[sel]
    sc = s[sel][:, None]
    lam = 2 * np.cosh(sc / 2) ** 2
    lam_s = np.sinh(sc)
    rho = np.tanh(sc / 2)
    u_rho = lam * us
    u_rr = lam * (lam_s * us + lam * uss)
    u_rt = lam * ust
    z_r = u_rho
    z_t = ut_m / rho
    h_rr = u_rr
    h_rt = u_rt / rho - ut_m / rho**2
    h_tt = utt_m / rho**2 + u_rho / rho
    cth = np.cos(g.theta_nodes)[None, :]
    sth = np.sin(g.theta_nodes)[None, :]
    z1 = z_r * cth - z_t * sth
    z2 = z_r * sth + z_t * cth
    H11 = h_rr * cth**2 - 2 * h_rt * cth * sth + h_tt * sth**2
    H12 = (h_rr - h_tt) * cth * sth + h_rt * (cth**2 - sth**2)
    H22 = h_rr * sth**2 + 2 * h_rt * cth * sth + h_tt * cth**2
    x1 = rho * cth
    x2 = rho * sth
    return M[sel], lam, rho, (z1, z2), (H11, H12, H22), (x1, x2), sc


def poincare_residual(u, H, inner_fraction=0.5, form="nondiv", details=False):
    """Max-norm residual of the equation in the conformal disk chart.

    form="nondiv" evaluates the quasilinear second order operator with the
    disk-coordinate coefficient functions; form="divergence" re-derives the
    flux divergence numerically in the disk chart. Both vanish to second
    order on converged polar-grid solutions, in a chart none of the solver
    machinery touches. Nodes with 1 - |x|^2 below 1e-12 are excluded.
    """
    if isinstance(H, (int, float)):
        H = constant_curvature(H)
    g = u.grid
    i_hi = max(2, int(inner_fraction * g.n_s))
    i_hi = min(i_hi, g.n_s - 1)
    m = _M
    if form == "nondiv":
        Mv, lam, rho, (z1, z2), (H11, H12, H22), (x1, x2), sc = _chart_jets(u, 1, i_hi)
        zsq = z1**2 + z2**2
        q = 1.0 - zsq / lam**2
        keep = np.broadcast_to((1 - rho**2 > 1e-12) & (q > 1e-12), Mv.shape)
        if not keep.any():
            raise NotSpacelikeError("no usable chart nodes")
        th = np.broadcast_to(g.theta_nodes[None, :], Mv.shape)
        hv = np.asarray(H.hbar(Mv, sc, th), dtype=float)
        a11 = q + z1**2 / lam**2
        a22 = q + z2**2 / lam**2
        a12 = z1 * z2 / lam**2
        b1 = lam * ((m - 2) - (m - 1) * zsq / lam**2) * x1
        b2 = lam * ((m - 2) - (m - 1) * zsq / lam**2) * x2
        f = m * lam**2 * (q**1.5 * np.exp(Mv) * hv - q)
        res = a11 * H11 + 2 * a12 * H12 + a22 * H22 + b1 * z1 + b2 * z2 - f
        out = float(np.abs(res[keep]).max())
        if details:
            return {"residual": out, "excluded": int(keep.size - keep.sum()), "rings": i_hi}
        return out
    if form != "divergence":
        raise UsageError("form must be 'nondiv' or 'divergence'")
    # flux divergence assembled from the chart jets on a wider ring band
    i_hi = min(i_hi, g.n_s - 2)
    Mv, lam, rho, (z1, z2), _, (x1, x2), sc = _chart_jets(u, 1, i_hi + 1)
    zsq = z1**2 + z2**2
    q = 1.0 - zsq / lam**2
    if float(q.min()) <= 1e-12:
        raise NotSpacelikeError("chart slope reaches the light cone")
    w = 1.0 / np.sqrt(q)
    cth = np.cos(g.theta_nodes)[None, :]
    sth = np.sin(g.theta_nodes)[None, :]
    f_r = w * (z1 * cth + z2 * sth)
    f_t = w * (-z1 * sth + z2 * cth)
    P = np.zeros((i_hi + 2, g.n_theta))
    P[1:] = rho * f_r
    ds, dthv = g.ds, g.dtheta
    lam_in = lam[: i_hi]
    rho_in = rho[: i_hi]
    div = lam_in / rho_in * (P[2 : i_hi + 2] - P[: i_hi]) / (2 * ds) + (
        np.roll(f_t[: i_hi], -1, axis=1) - np.roll(f_t[: i_hi], 1, axis=1)
    ) / (2 * dthv) / rho_in
    Mv_in = Mv[: i_hi]
    th = np.broadcast_to(g.theta_nodes[None, :], Mv_in.shape)
    hv = np.asarray(H.hbar(Mv_in, sc[: i_hi], th), dtype=float)
    rhs = m * lam_in**2 * (np.exp(Mv_in) * hv - w[: i_hi]) - (m - 2) * lam_in * w[: i_hi] * (
        z1[: i_hi] * x1[: i_hi] + z2[: i_hi] * x2[: i_hi]
    )
    res = div - rhs
    out = float(np.abs(res[1:]).max())  # ring 1 needs the pole flux row, skip it
    if details:
        return {"residual": out, "excluded": 0, "rings": i_hi}
    return out


# ---------------------------------------------------------------------------
# exhaustion and uniqueness instrumentation


@dataclass
class ExhaustionReport:
    radii: list
    reports: list
    compact_deltas: list
    tilt_series: list
    psi_max: list
    s0: float
    failure_index: int | None = None
    fields: list | None = None

    @property
    def converged_all(self):
        return self.failure_index is None and all(r.converged for r in self.reports)

    def as_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "reports": [r.as_dict() for r in self.reports],
            "compact_deltas": [float(d) for d in self.compact_deltas],
            "tilt_series": [float(t) for t in self.tilt_series],
            "psi_max": self.psi_max,
            "s0": self.s0,
            "failure_index": self.failure_index,
            "converged_all": self.converged_all,
        }


def _node_tilt_field(fld):
    """Node tilt w on rings 1..n_s-1 plus the pole, from centered slopes."""
    prob = DiscreteProblem(fld.grid, constant_curvature(1.0), boundary=0.0)
    M = fld.matrix()
    _, _, _, _, _, _, dc, dth_full, gam_n, pa, pb = prob._face_slopes(M)
    w = 1.0 / np.sqrt(1.0 - gam_n)
    wp = 1.0 / math.sqrt(1.0 - (pa**2 + pb**2))
    return w, wp


def _psi_records(fld, lam):
    g = fld.grid
    M = fld.matrix()
    w, wp = _node_tilt_field(fld)
    out = {}
    for sign, tag in ((lam, "psi_plus"), (-lam, "psi_minus")):
        vals = w * np.exp(sign * M[1 : g.n_s])
        pole_val = wp * math.exp(sign * M[0, 0])
        k = int(np.argmax(vals))
        i, j = divmod(k, g.n_theta)
        best = float(vals.ravel()[k])
        loc = (float(g.s_nodes[i + 1]), float(g.theta_nodes[j]))
        if pole_val > best:
            best, loc = pole_val, (0.0, 0.0)
        out[tag] = {"value": best, "s": loc[0], "theta": loc[1]}
    return out


def exhaustion(
    H,
    radii,
    s0=1.0,
    ds=None,
    n_theta=96,
    tol=1e-10,
    lam=2.0,
    max_iters=50,
):
    """Solve the Dirichlet problem on a growing family of geodesic balls.

    All balls share the radial spacing, so consecutive solutions live on a
    common node set and the compact deltas max |u_{j+1} - u_j| over the ball
    of radius s0 compare nodes exactly. Solutions warm-start from the
    previous radius extended by the boundary value.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise UsageError("radii must be strictly increasing, at least two")
    if not 0 < s0 <= radii[0]:
        raise UsageError("the compact ball cannot exceed the smallest radius")
    if ds is None:
        ds = radii[0] / 24.0
    try:
        hyp = check_hypotheses(H)
        if not all(hyp.passes[k] for k in ("H1", "H2", "H3")):
            warnings.warn("curvature data fails a sampled hypothesis check", stacklevel=2)
    except UsageError:
        pass
    n_list = [int(round(r / ds)) for r in radii]
    if any(n < 3 for n in n_list):
        raise UsageError("radial spacing too coarse for the smallest ball")
    actual = [n * ds for n in n_list]
    i0 = min(int(round(s0 / ds)), n_list[0])
    fields = []
    reports = []
    psi = []
    failure = None
    prev = None
    for j, (r, n_s) in enumerate(zip(actual, n_list)):
        guess = None
        if prev is not None:
            grid = PolarGrid(n_s, n_theta, r)
            Mg = np.zeros((n_s + 1, n_theta))
            Mp = prev.matrix()
            rows = min(Mp.shape[0] - 1, n_s)  # drop the old boundary row
            Mg[:rows] = Mp[:rows]
            guess = ScalarField.from_matrix(grid, Mg)
        fld, rep = solve_dirichlet(
            H, r, n_s=n_s, n_theta=n_theta, u0=guess, tol=tol,
            max_iters=max_iters, precheck=False,
        )
        reports.append(rep)
        if not rep.converged:
            failure = j
            break
        fields.append(fld)
        psi.append(_psi_records(fld, lam))
        prev = fld
    deltas = []
    for fa, fb in zip(fields, fields[1:]):
        Ma, Mb = fa.matrix(), fb.matrix()
        deltas.append(float(np.abs(Mb[: i0 + 1] - Ma[: i0 + 1]).max()))
    return ExhaustionReport(
        radii=actual[: len(reports)],
        reports=reports,
        compact_deltas=deltas,
        tilt_series=[r.max_w for r in reports if r.converged],
        psi_max=psi,
        s0=i0 * ds,
        failure_index=failure,
        fields=fields,
    )


@dataclass
class UniquenessReport:
    max_pairwise: float
    converged: list
    reports: list

    def as_dict(self):
        return {
            "max_pairwise": self.max_pairwise,
            "converged": list(self.converged),
            "reports": [r.as_dict() for r in self.reports],
        }


def uniqueness_probe(H, s_max, guesses, n_s=48, n_theta=96, tol=1e-10, boundary=0.0):
    """Solve from several initial guesses and report the max pairwise gap.

    Non-convergent runs are excluded from the distance and flagged. Under
    strict monotonicity of e^t Hbar the converged solutions should agree to
    solver tolerance; without it the distance is purely informative.
    """
    if len(guesses) < 2:
        raise UsageError("need at least two initial guesses")
    solutions = []
    converged = []
    reports = []
    for g0 in guesses:
        fld, rep = solve_dirichlet(
            H, s_max, n_s=n_s, n_theta=n_theta, boundary=boundary,
            u0=g0, tol=tol, precheck=False,
        )
        reports.append(rep)
        converged.append(bool(rep.converged))
        if rep.converged:
            solutions.append(fld.matrix())
    dist = 0.0
    for i in range(len(solutions)):
        for k in range(i + 1, len(solutions)):
            dist = max(dist, float(np.abs(solutions[i] - solutions[k]).max()))
    return UniquenessReport(dist, converged, reports)
