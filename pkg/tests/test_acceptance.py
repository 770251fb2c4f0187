"""Acceptance gate: thirteen checks against closed forms and cross-routes.

Each test computes its quantities, prints one [PASS]/[FAIL] line with the
measured numbers, and then asserts. Run with -s to see the lines for
passing tests too.
"""

import time

import numpy as np
import pytest

from pmcsurf import radial
from pmcsurf import solver as sv
from pmcsurf.cartesian import (
    alc_decay_check,
    bumped_hyperboloid,
    curvature_cartesian,
    hyperboloid,
    surface_field,
)
from pmcsurf.fields import BoxGrid, CartesianField, PolarGrid
from pmcsurf.integrals import (
    hyperboloid_chart_radius,
    local_gauss_estimate,
    lp_growth,
    willmore_integral,
)


def _gate(num, ok, detail):
    print("[%s] criterion %02d: %s" % ("PASS" if ok else "FAIL", num, detail))
    assert ok, "criterion %d: %s" % (num, detail)


@pytest.fixture(scope="session")
def H_rat():
    return sv.rational_curvature(0.1)


@pytest.fixture(scope="session")
def oracle3(H_rat):
    return sv.radial_ode_oracle(H_rat, 3.0)


@pytest.fixture(scope="session")
def pde_solves(H_rat):
    out = {}
    for n_s, n_th in ((64, 128), (128, 256)):
        fld, rep = sv.solve_dirichlet(H_rat, 3.0, n_s=n_s, n_theta=n_th, precheck=False)
        assert rep.converged
        out[n_s] = fld
    return out


@pytest.fixture(scope="session")
def exh8(H_rat):
    return sv.exhaustion(H_rat, list(range(1, 9)), s0=1.0, ds=1.0 / 24.0, n_theta=96)


def test_criterion_01_hyperboloid_curvature_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for m in (2, 3):
        pts = rng.uniform(-5.0, 5.0, size=(64, m))
        for l in (0.5, 1.0, 2.0):
            surf = hyperboloid(l, m)
            sample = curvature_cartesian(surf.grad(pts), surf.hess(pts))
            worst = max(worst, float(np.abs(sample.mean - 1.0 / l).max()))
            worst = max(worst, float(np.abs(sample.gauss - l ** (-m)).max()))
    dt = time.perf_counter() - t0
    _gate(1, worst < 1e-10 and dt < 1.0, "max H/K error %.3e, %.2fs" % (worst, dt))


def test_criterion_02_willmore_equality():
    t0 = time.perf_counter()
    rep2 = willmore_integral(hyperboloid(1.0, 2), truncation=50.0)
    err2 = abs(rep2.integral - np.pi) / np.pi
    rep3 = willmore_integral(hyperboloid(1.0, 3), truncation=50.0)
    bound3 = 4.0 * np.pi / 3.0
    err3 = abs(rep3.integral - bound3) / bound3
    dt = time.perf_counter() - t0
    _gate(
        2,
        err2 <= 1e-3 and err3 <= 5e-3 and dt < 30.0,
        "m=2 rel err %.2e, m=3 rel err %.2e, %.1fs" % (err2, err3, dt),
    )


def test_criterion_03_willmore_strictness():
    gaps = []
    ok = True
    for eps in (0.02, 0.05, 0.1):
        rep = willmore_integral(bumped_hyperboloid(eps), truncation=200.0)
        gap = rep.integral - rep.lower_bound
        ok = ok and gap > 10.0 * rep.quad_tolerance
        gaps.append(gap)
    ok = ok and gaps[0] < gaps[1] < gaps[2]
    _gate(3, ok, "gaps %s" % ", ".join("%.3e" % g for g in gaps))


def test_criterion_04_gauss_map_equality():
    radius = hyperboloid_chart_radius(1.0)
    worst = 0.0
    for rho in (0.5, 1.0, 2.0):
        est = local_gauss_estimate(hyperboloid(1.0, 2), rho, chart_radius=radius)
        closed = np.sqrt(2.0 * np.pi * (np.cosh(rho) - 1.0))
        worst = max(worst, abs(est.lhs - est.rhs), abs(est.lhs - closed))
    _gate(4, worst <= 1e-3, "max |lhs-rhs| and closed-form gap %.3e" % worst)


def test_criterion_05_lp_divergence():
    radii = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    series = lp_growth(hyperboloid(1.0, 2), 2.0, radii, chart_radius=hyperboloid_chart_radius(1.0))
    masses = series.lp_norms**2
    closed = 2.0 * np.pi * (np.cosh(radii) - 1.0)
    rel = float(np.abs(masses - closed).max() / closed.max())
    rel_each = float(np.abs(masses / closed - 1.0).max())
    doubles = masses[-1] >= 2.0 * masses[-2]
    _gate(
        5,
        rel_each <= 1e-3 and doubles,
        "max rel err %.2e (pooled %.2e), mass(6)/mass(5) = %.3f"
        % (rel_each, rel, masses[-1] / masses[-2]),
    )


def test_criterion_06_solver_exactness():
    ok = True
    notes = []
    for n_s, n_th in ((24, 48), (48, 96)):
        fld, rep = sv.solve_dirichlet(sv.constant_curvature(1.0), 3.0, n_s=n_s, n_theta=n_th)
        ok = ok and rep.converged and rep.iterations <= 2 and rep.residual_norm < 1e-12
        ok = ok and np.abs(fld.matrix()).max() < 1e-12
        notes.append("unit %dx%d it=%d res=%.1e" % (n_s, n_th, rep.iterations, rep.residual_norm))
    l0 = 0.8
    fld, rep = sv.solve_dirichlet(
        sv.constant_curvature(1.0 / l0), 2.5, n_s=32, n_theta=64,
        boundary=np.log(l0), precheck=False,
    )
    sheet_gap = float(np.abs(fld.matrix() - np.log(l0)).max())
    ok = ok and rep.converged and sheet_gap < 1e-11
    notes.append("sheet gap %.1e" % sheet_gap)
    _gate(6, ok, "; ".join(notes))


def test_criterion_07_ode_pde_equivalence(H_rat, oracle3, pde_solves):
    t0 = time.perf_counter()
    gaps = {}
    for n_s, fld in pde_solves.items():
        ref = oracle3.interp(fld.grid.s_nodes)[:, None]
        gaps[n_s] = float(np.abs(fld.matrix() - ref).max())
    ratio = gaps[64] / gaps[128]
    dt = time.perf_counter() - t0
    ok = gaps[128] <= 1e-3 and 3.2 <= ratio <= 4.8 and dt < 120.0
    _gate(7, ok, "gap@128x256 %.3e, ratio 64->128 %.3f, %.1fs" % (gaps[128], ratio, dt))


def test_criterion_08_height_estimate(H_rat, pde_solves, exh8):
    hyp = sv.check_hypotheses(H_rat, requested_radii=(0.8, 1.25))
    eps_h = 1e-3
    lo, hi = np.log(0.8) - eps_h, np.log(1.25) + eps_h
    fields = list(pde_solves.values()) + list(exh8.fields)
    mn = min(f.matrix().min() for f in fields)
    mx = max(f.matrix().max() for f in fields)
    ok = hyp.requested_ok and lo <= mn and mx <= hi
    _gate(
        8,
        ok,
        "certified (0.8, 1.25): %s; u range [%.6f, %.6f] within [ln 0.8, ln 1.25] +/- 1e-3"
        % (hyp.requested_ok, mn, mx),
    )


def test_criterion_09_uniform_tilt(exh8):
    tilt = np.asarray(exh8.tilt_series[:6])
    radii = np.asarray(exh8.radii[:6])
    A = np.stack([np.ones_like(radii), radii], axis=1)
    slope = float(np.linalg.lstsq(A, tilt, rcond=None)[0][1])
    bound = 2.0 * tilt[0] + 0.5
    ok = slope <= 1e-3 and tilt.max() <= bound
    _gate(9, ok, "lstsq slope %.3e per unit radius, max tilt %.6f <= %.6f" % (slope, tilt.max(), bound))


def test_criterion_10_compact_deltas(exh8):
    d = np.asarray(exh8.compact_deltas)
    tail = d[2:]  # deltas from the third ball pair onward
    ok = bool(np.all(np.diff(tail) < 0)) and d[-1] <= 1e-6
    _gate(10, ok, "deltas %s, final %.3e" % (", ".join("%.2e" % x for x in d), d[-1]))


def test_criterion_11_identity_orders(H_rat, pde_solves):
    ok = True
    notes = []
    for name, graph in sorted(radial.builtin_identity_graphs().items()):
        r1 = radial.laplacian_w_residual(graph, 1.1, 0.8, step=0.08)
        r2 = radial.laplacian_w_residual(graph, 1.1, 0.8, step=0.04)
        if r1 < 1e-10:
            notes.append("lapl %s exact" % name)
            continue
        order = float(np.log2(r1 / r2))
        ok = ok and order >= 1.9
        notes.append("lapl %s %.2f" % (name, order))
    for label, pt in (("axis", [1.5, 0.0, 0.0]), ("generic", [2.0, 0.3, -0.4])):
        r1 = radial.hessian_tau_residual(np.asarray(pt), step=2e-2)
        r2 = radial.hessian_tau_residual(np.asarray(pt), step=1e-2)
        order = float(np.log2(r1 / r2))
        ok = ok and order >= 1.9
        notes.append("tau %s %.2f" % (label, order))
    res = {n: sv.poincare_residual(f, H_rat) for n, f in pde_solves.items()}
    order = float(np.log2(res[64] / res[128]))
    ok = ok and order >= 1.9
    notes.append("poincare %.2f" % order)
    _gate(11, ok, "orders: " + ", ".join(notes))


def test_criterion_12_uniqueness_probe(H_rat):
    grid = PolarGrid(32, 64, 2.0)
    guesses = [0.0, 0.3, -0.3, sv.bump_field(grid, amp=0.2)]
    rep = sv.uniqueness_probe(H_rat, 2.0, guesses, n_s=32, n_theta=64)
    ok = all(rep.converged) and rep.max_pairwise <= 1e-9
    _gate(12, ok, "max pairwise distance %.3e over %d guesses" % (rep.max_pairwise, len(guesses)))


def test_criterion_13_alc_classifier():
    grid = BoxGrid.cube(2, 105.0, 421)
    cone_like = surface_field(hyperboloid(1.0), grid)
    rep_a = alc_decay_check(cone_like)
    surf = hyperboloid(1.0)
    shifted = CartesianField.from_function(grid, lambda x: surf.value(x) + 1.0)
    rep_b = alc_decay_check(shifted)
    ok = (
        rep_a.looks_alc
        and rep_a.monotone_decreasing
        and abs(rep_a.limit_estimate) <= 1e-3
        and not rep_b.looks_alc
        and abs(rep_b.limit_estimate - 1.0) <= 1e-3
    )
    _gate(
        13,
        ok,
        "cone graph limit %.2e (alc=%s), shifted limit %.6f (alc=%s)"
        % (rep_a.limit_estimate, rep_a.looks_alc, rep_b.limit_estimate, rep_b.looks_alc),
    )
