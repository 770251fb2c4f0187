"""Curvature integrals of entire spacelike graphs.

Three verifiers live here. The total-curvature functional integrates
|H|^m phi^{-m-1} over the graph and compares it against the volume of
the unit m-ball, the sharp lower bound attained exactly by hyperboloids.
The local Gauss-map estimate compares the L^m norm of H on a geodesic
ball against the Jacobian measure of the Gauss image of the convexity
set. The growth series tracks L^p norms of H on expanding balls, which
cannot stay bounded for these surfaces when p <= m.

All quadrature is plain cell/trapezoid summation on the sampling grids
with the resolution error estimated by coarsening, never assumed.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .cartesian import (
    AnalyticSurface,
    field_jets,
    metric_cartesian,
    tilt_cartesian,
)
from .errors import DomainError, NotSpacelikeError, UsageError
from .fields import CartesianField
from .util import default_threads, parallel_map


def unit_ball_volume(m):
    """Lebesgue volume of the unit ball in R^m."""
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


def sphere_area(m_minus_1):
    """Surface measure of the unit sphere S^{m-1} in R^m."""
    m = m_minus_1 + 1
    return m * unit_ball_volume(m)


def sigma_plus_mask(hess_f):
    """Nodes where the shape operator is positive definite, strictly.

    The shape operator is g^{-1} II = phi g^{-1} hess f with g positive
    definite, so its eigenvalues are all positive exactly when hess f is
    positive definite; Sylvester's criterion on hess f decides that
    without an eigensolve. Strict positivity means finite-difference
    Hessians of flat graphs land on either side of zero by roundoff;
    exact jets classify them as not convex.
    """
    hess_f = np.asarray(hess_f, dtype=float)
    m = hess_f.shape[-1]
    if m == 1:
        return hess_f[..., 0, 0] > 0.0
    if m == 2:
        det = hess_f[..., 0, 0] * hess_f[..., 1, 1] - hess_f[..., 0, 1] ** 2
        return (hess_f[..., 0, 0] > 0.0) & (det > 0.0)
    if m == 3:
        m1 = hess_f[..., 0, 0]
        m2 = hess_f[..., 0, 0] * hess_f[..., 1, 1] - hess_f[..., 0, 1] ** 2
        m3 = np.linalg.det(hess_f)
        return (m1 > 0.0) & (m2 > 0.0) & (m3 > 0.0)
    raise UsageError("convexity masks are implemented for m <= 3")


def _jet_pointwise(grad, hess):
    """phi, H, K and the convexity mask from flat-chart jets."""
    m = grad.shape[-1]
    phi = np.asarray(tilt_cartesian(grad))
    _, ginv = metric_cartesian(grad)
    II = phi[..., None, None] * hess
    H = np.einsum("...ij,...ij->...", ginv, II) / m
    K = phi ** (m + 2) * np.linalg.det(hess)
    return phi, H, K, sigma_plus_mask(hess)


@dataclass
class WillmoreReport:
    """Truncated total-curvature functional against its sharp bound."""

    integral: float
    lower_bound: float
    tail_estimate: float
    sigma_plus_fraction: float
    quad_tolerance: float
    truncation: float
    spacing: float
    m: int

    def as_dict(self):
        return {
            "integral": self.integral,
            "lower_bound": self.lower_bound,
            "tail_estimate": self.tail_estimate,
            "sigma_plus_fraction": self.sigma_plus_fraction,
            "quad_tolerance": self.quad_tolerance,
            "truncation": self.truncation,
            "spacing": self.spacing,
            "m": self.m,
        }


def _slab_points(x0, axes_rest):
    mesh = list(np.meshgrid(*axes_rest, indexing="ij")) if axes_rest else []
    shape = mesh[0].shape if mesh else ()
    cols = [np.full(shape, x0)] + mesh
    return np.stack(cols, axis=-1)


def _willmore_pass(surf, axes, R, n_shell=12):
    """Cell sums of the functional over the ball |x| <= R, slab by slab.

    Returns per-slab partial sums so the caller can combine them in a
    fixed order regardless of how the slabs were scheduled.
    """
    h = axes[0][1] - axes[0][0]
    cell = h ** len(axes)
    m = len(axes)
    shell_edges = np.linspace(0.8 * R, R, n_shell + 1)

    def one_slab(i):
        pts = _slab_points(axes[0][i], axes[1:])
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        keep = r <= R
        if not np.any(keep):
            z = np.zeros(n_shell)
            return 0.0, 0.0, 0.0, z, z
        pts = pts[keep]
        r = r[keep]
        grad = surf.grad(pts)
        hess = surf.hess(pts)
        phi, H, K, plus = _jet_pointwise(grad, hess)
        integrand = np.abs(H) ** m * phi ** (-m - 2)
        dv = cell / phi
        total = float(np.sum(integrand * cell))
        vol = float(np.sum(dv))
        vol_plus = float(np.sum(dv[plus]))
        idx = np.searchsorted(shell_edges, r, side="right") - 1
        ok = (idx >= 0) & (idx < n_shell)
        s_int = np.bincount(idx[ok], weights=integrand[ok], minlength=n_shell)
        s_cnt = np.bincount(idx[ok], minlength=n_shell).astype(float)
        return total, vol, vol_plus, s_int, s_cnt

    return one_slab, shell_edges


def _run_pass(surf, axes, R, threads):
    one_slab, shell_edges = _willmore_pass(surf, axes, R)
    parts = parallel_map(one_slab, range(len(axes[0])), threads)
    total = float(np.sum([p[0] for p in parts]))
    vol = float(np.sum([p[1] for p in parts]))
    vol_plus = float(np.sum([p[2] for p in parts]))
    s_int = np.sum([p[3] for p in parts], axis=0)
    s_cnt = np.sum([p[4] for p in parts], axis=0)
    return total, vol, vol_plus, s_int, s_cnt, shell_edges


def _tail_power_fit(s_int, s_cnt, shell_edges, m, R):
    """Extrapolate the integrand's power-law tail past the truncation.

    Fits mean integrand ~ C r^{-q} on the outer shells and integrates
    C sigma_{m-1} r^{m-1-q} from R on out. A fit flatter than r^{-m}
    has no finite tail; the estimate is then infinite.
    """
    good = s_cnt > 0
    if good.sum() < 3:
        return float("nan")
    mid = 0.5 * (shell_edges[:-1] + shell_edges[1:])[good]
    mean = s_int[good] / s_cnt[good]
    if np.any(mean <= 0.0):
        return 0.0
    slope, level = np.polyfit(np.log(mid), np.log(mean), 1)
    q = -slope
    if q <= m + 1e-9:
        return float("inf")
    c = math.exp(level)
    return c * sphere_area(m - 1) * R ** (m - q) / (q - m)


def _as_surface(obj):
    if isinstance(obj, AnalyticSurface):
        return obj
    if isinstance(obj, CartesianField):
        return None
    raise UsageError("expected an analytic surface or a sampled field")


def willmore_integral(obj, truncation=50.0, spacing=None, threads=None):
    """Quadrature of |H|^m phi^{-m-1} dv over |x| <= truncation.

    Works from exact jets of an analytic surface or from second-order
    discrete jets of a sampled field (whose two outermost rings are
    excluded, so the ball must sit well inside the box). The reported
    quad_tolerance is a Richardson estimate from a half-resolution pass;
    tail_estimate extrapolates the integrand's decay past the ball.
    """
    threads = default_threads() if threads is None else threads
    R = float(truncation)
    surf = _as_surface(obj)
    if surf is not None:
        m = surf.m
        if m not in (2, 3):
            raise UsageError("integrals are desk scale only for m in {2, 3}")
        if spacing is None:
            spacing = 0.25 if m == 2 else 0.5
        k = max(8, int(round(R / spacing)))
        if k % 2:
            k += 1
        axes_fine = [np.linspace(-R, R, 2 * k + 1)] * m
        axes_coarse = [ax[::2] for ax in axes_fine]
        tot_f, vol_f, plus_f, s_int, s_cnt, edges = _run_pass(surf, axes_fine, R, threads)
        tot_c, _, _, _, _, _ = _run_pass(surf, axes_coarse, R, threads)
        h = axes_fine[0][1] - axes_fine[0][0]
        tail = _tail_power_fit(s_int, s_cnt, edges, m, R)
        return WillmoreReport(
            integral=tot_f,
            lower_bound=unit_ball_volume(m),
            tail_estimate=tail,
            sigma_plus_fraction=plus_f / vol_f if vol_f > 0 else 0.0,
            quad_tolerance=abs(tot_f - tot_c) / 3.0,
            truncation=R,
            spacing=h,
            m=m,
        )

    # sampled field: discrete jets on its own grid
    fld = obj
    m = fld.grid.m
    if m not in (2, 3):
        raise UsageError("integrals are desk scale only for m in {2, 3}")
    grad, hess, interior = field_jets(fld)
    mesh = np.meshgrid(*fld.grid.axes, indexing="ij")
    r = np.sqrt(sum(c * c for c in mesh))
    h = max(fld.grid.spacing)
    if R > min(fld.grid.extents) - 2 * h:
        raise UsageError("truncation ball must fit inside the sampled interior")
    keep = (r <= R) & interior
    phi, H, K, plus = _jet_pointwise(grad[keep], hess[keep])
    cell = float(np.prod(fld.grid.spacing))
    integrand = np.abs(H) ** m * phi ** (-m - 2)
    total = float(np.sum(integrand * cell))
    dv = cell / phi
    vol = float(np.sum(dv))
    vol_plus = float(np.sum(dv[plus]))
    # coarse pass on every second node for the tolerance estimate
    sub = tuple(slice(None, None, 2) for _ in range(m))
    keep_c = keep[sub]
    phi_c, H_c, _, _ = _jet_pointwise(grad[sub][keep_c], hess[sub][keep_c])
    tot_c = float(np.sum(np.abs(H_c) ** m * phi_c ** (-m - 2) * cell * 2**m))
    edges = np.linspace(0.8 * R, R, 13)
    rk = r[keep]
    idx = np.searchsorted(edges, rk, side="right") - 1
    ok = (idx >= 0) & (idx < 12)
    s_int = np.bincount(idx[ok], weights=integrand[ok], minlength=12)
    s_cnt = np.bincount(idx[ok], minlength=12).astype(float)
    return WillmoreReport(
        integral=total,
        lower_bound=unit_ball_volume(m),
        tail_estimate=_tail_power_fit(s_int, s_cnt, edges, m, R),
        sigma_plus_fraction=vol_plus / vol if vol > 0 else 0.0,
        quad_tolerance=abs(total - tot_c) / 3.0,
        truncation=R,
        spacing=h,
        m=m,
    )


# geodesic balls


def geodesic_distances(fld, center=None):
    """Shortest-path distances in the graph metric from a center node.

    Eight-neighbor grid graph with edge lengths sqrt(|dx|^2 - (df)^2),
    the induced length of the chart step. A chamfer approximation of the
    true geodesic distance, good enough for nested quadrature domains.
    """
    g = fld.grid
    if g.m != 2:
        raise UsageError("discrete geodesic balls are implemented for m = 2")
    n0, n1 = g.counts
    vals = fld.values
    idx = np.arange(n0 * n1).reshape(n0, n1)
    all_ = slice(None)
    hops = (
        ((slice(None, -1), all_), (slice(1, None), all_), (1, 0)),
        ((all_, slice(None, -1)), (all_, slice(1, None)), (0, 1)),
        ((slice(None, -1), slice(None, -1)), (slice(1, None), slice(1, None)), (1, 1)),
        ((slice(None, -1), slice(1, None)), (slice(1, None), slice(None, -1)), (1, -1)),
    )
    rows, cols, lens = [], [], []
    for sl_a, sl_b, (d0, d1) in hops:
        step_sq = (d0 * g.spacing[0]) ** 2 + (d1 * g.spacing[1]) ** 2
        df = vals[sl_b] - vals[sl_a]
        ds_sq = step_sq - df**2
        if np.any(ds_sq <= 0.0):
            raise NotSpacelikeError("a grid edge is not spacelike")
        rows.append(idx[sl_a].ravel())
        cols.append(idx[sl_b].ravel())
        lens.append(np.sqrt(ds_sq).ravel())
    graph = coo_matrix(
        (np.concatenate(lens), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n0 * n1, n0 * n1),
    ).tocsr()
    if center is None:
        mesh = np.meshgrid(*g.axes, indexing="ij")
        rr = np.sqrt(sum(c * c for c in mesh))
        center = int(np.argmin(rr))
    dist = dijkstra(graph, directed=False, indices=center)
    return dist.reshape(n0, n1)


@dataclass
class GaussEstimate:
    """L^m curvature mass of a ball against its Gauss-image measure."""

    rho: float
    lhs: float
    rhs: float

    @property
    def gap(self):
        return self.lhs - self.rhs

    def as_dict(self):
        return {"rho": self.rho, "lhs": self.lhs, "rhs": self.rhs, "gap": self.gap}


def _polar_ball_integrals(surf, chart_radius, p_exponents, n_r=1536, n_th=192):
    """Integrals over a chart-round geodesic ball by polar quadrature.

    Only for surfaces whose geodesic balls around the apex are round in
    the chart (the model family); chart_radius gives the chart radius of
    the ball. Returns integrals of |H|^p dv for each requested p, of K dv
    over the convexity set, and the ball volume.
    """
    if surf.m != 2:
        raise UsageError("polar ball quadrature is planar only")
    r = np.linspace(0.0, float(chart_radius), n_r + 1)
    th = np.linspace(0.0, 2.0 * np.pi, n_th, endpoint=False)
    pts = np.stack(
        [r[:, None] * np.cos(th)[None, :], r[:, None] * np.sin(th)[None, :]],
        axis=-1,
    )
    grad = surf.grad(pts)
    hess = surf.hess(pts)
    phi, H, K, plus = _jet_pointwise(grad, hess)
    dth = 2.0 * np.pi / n_th
    out = []
    for p in p_exponents:
        ang = np.sum(np.abs(H) ** p / phi, axis=1) * dth
        out.append(float(simpson(ang * r, x=r)))
    ang_k = np.sum(np.where(plus, K, 0.0) / phi, axis=1) * dth
    out.append(float(simpson(ang_k * r, x=r)))
    ang_v = np.sum(1.0 / phi, axis=1) * dth
    out.append(float(simpson(ang_v * r, x=r)))
    return out


def hyperboloid_chart_radius(l=1.0):
    """Chart radius of the geodesic ball of radius rho on the scaled sheet."""
    l = float(l)

    def radius(rho):
        return l * math.sinh(rho / l)

    return radius


def local_gauss_estimate(obj, rho, chart_radius=None, center=None):
    """Compare the L^m norm of H on B_rho with |N(B_rho^+)|^{1/m}.

    The Gauss-image measure is the Jacobian integral of K over the
    convexity part of the ball; with folds this overcounts the image
    set, which only strengthens the reported right-hand side. Balls are
    chart-round via chart_radius on model surfaces, else shortest-path
    balls on a sampled field.
    """
    rho = float(rho)
    if chart_radius is not None:
        surf = _as_surface(obj)
        if surf is None:
            raise UsageError("chart_radius applies to analytic surfaces")
        hm, kplus, _ = _polar_ball_integrals(surf, chart_radius(rho), [surf.m])
        return GaussEstimate(rho=rho, lhs=hm ** (1.0 / surf.m), rhs=max(kplus, 0.0) ** (1.0 / surf.m))
    if not isinstance(obj, CartesianField):
        raise UsageError("without chart_radius, pass a sampled field")
    m = obj.grid.m
    dist = geodesic_distances(obj, center=center)
    grad, hess, interior = field_jets(obj)
    keep = (dist <= rho) & interior
    if not np.any(keep):
        raise DomainError("geodesic ball captured no interior nodes")
    phi, H, K, plus = _jet_pointwise(grad[keep], hess[keep])
    dv = float(np.prod(obj.grid.spacing)) / phi
    hm = float(np.sum(np.abs(H) ** m * dv))
    kplus = float(np.sum(np.where(plus, K, 0.0) * dv))
    return GaussEstimate(rho=rho, lhs=hm ** (1.0 / m), rhs=max(kplus, 0.0) ** (1.0 / m))


@dataclass
class GrowthSeries:
    """L^p curvature mass and Gauss-image measure on expanding balls."""

    p: float
    m: int
    radii: np.ndarray
    lp_norms: np.ndarray
    lm_norms: np.ndarray
    gauss_image_measure: np.ndarray
    volumes: np.ndarray
    plateaued: bool

    def rows(self):
        return np.stack(
            [self.radii, self.lp_norms, self.gauss_image_measure, self.volumes],
            axis=1,
        )


def lp_growth(obj, p, radii, chart_radius=None, center=None, plateau_rtol=1e-3):
    """Track ||H||_{L^p(B_rho)} and |N(B_rho^+)| on expanding balls.

    For the surfaces of interest with bounded curvature the p <= m mass
    must grow without bound; the plateaued flag raises a hand when the
    last step grows by less than plateau_rtol in relative terms.
    """
    p = float(p)
    if p < 1.0:
        raise UsageError("p must be at least 1")
    radii = np.asarray(sorted(float(r) for r in radii), dtype=float)
    if radii.size < 2:
        raise UsageError("need at least two radii")
    lp_mass, lm_mass, gauss, vols = [], [], [], []
    if chart_radius is not None:
        surf = _as_surface(obj)
        if surf is None:
            raise UsageError("chart_radius applies to analytic surfaces")
        m = surf.m
        for rho in radii:
            hp, hm, kplus, vol = _polar_ball_integrals(
                surf, chart_radius(rho), [p, m]
            )
            lp_mass.append(hp)
            lm_mass.append(hm)
            gauss.append(max(kplus, 0.0))
            vols.append(vol)
    else:
        if not isinstance(obj, CartesianField):
            raise UsageError("without chart_radius, pass a sampled field")
        m = obj.grid.m
        dist = geodesic_distances(obj, center=center)
        grad, hess, interior = field_jets(obj)
        phi, H, K, plus = _jet_pointwise(grad[interior], hess[interior])
        dv = float(np.prod(obj.grid.spacing)) / phi
        d_in = dist[interior]
        for rho in radii:
            keep = d_in <= rho
            lp_mass.append(float(np.sum(np.abs(H[keep]) ** p * dv[keep])))
            lm_mass.append(float(np.sum(np.abs(H[keep]) ** m * dv[keep])))
            kk = keep & plus
            gauss.append(max(float(np.sum(K[kk] * dv[kk])), 0.0))
            vols.append(float(np.sum(dv[keep])))
    lp_mass = np.array(lp_mass)
    # the absolute floor keeps roundoff-scale masses (flat graphs) from
    # registering as growth
    grew = (lp_mass[-1] - lp_mass[-2]) > plateau_rtol * max(lp_mass[-1], 1e-12)
    return GrowthSeries(
        p=p,
        m=m,
        radii=radii,
        lp_norms=lp_mass ** (1.0 / p),
        lm_norms=np.array(lm_mass) ** (1.0 / m),
        gauss_image_measure=np.array(gauss),
        volumes=np.array(vols),
        plateaued=not grew,
    )


def holder_chain_gaps(series):
    """Slack in the two-step estimate chaining the Gauss image to L^p.

    Returns (gap1, gap2): gap1 = ||H||_m - |N^+|^{1/m} and
    gap2 = |B|^{1/m-1/p} ||H||_p - ||H||_m, both elementwise over the
    series radii; nonnegative values up to quadrature noise confirm the
    chain |N^+|^{1/m} <= ||H||_m <= |B|^{1/m-1/p} ||H||_p.
    """
    s = series
    if s.p < s.m:
        raise UsageError("the interpolation step needs p >= m")
    gap1 = s.lm_norms - s.gauss_image_measure ** (1.0 / s.m)
    expo = 1.0 / s.m - 1.0 / s.p
    gap2 = s.volumes**expo * s.lp_norms - s.lm_norms
    return gap1, gap2
