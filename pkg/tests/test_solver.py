import numpy as np
import pytest

from pmcsurf import radial
from pmcsurf import solver as sv
from pmcsurf.errors import BracketError, NotSpacelikeError, UsageError
from pmcsurf.fields import PolarGrid, ScalarField


@pytest.fixture(scope="module")
def H01():
    return sv.rational_curvature(0.1)


@pytest.fixture(scope="module")
def oracle3(H01):
    return sv.radial_ode_oracle(H01, 3.0)


@pytest.fixture(scope="module")
def solves3(H01):
    out = {}
    for n_s, n_th in [(24, 48), (48, 96)]:
        fld, rep = sv.solve_dirichlet(H01, 3.0, n_s=n_s, n_theta=n_th, precheck=False)
        assert rep.converged
        out[n_s] = fld
    return out


@pytest.fixture(scope="module")
def exh5(H01):
    return sv.exhaustion(H01, [1, 2, 3, 4, 5], s0=1.0, ds=1 / 16, n_theta=48)


# ---------------------------------------------------------------------------
# curvature data


def test_parse_builtins():
    Hc = sv.parse_curvature("const:1")
    assert float(Hc.hbar(0.37, 1.2, 0.4)) == 1.0
    assert float(Hc.dtheta(0.5, 2.0)) == pytest.approx(np.exp(0.5), rel=1e-14)

    Hr = sv.parse_curvature("rational:0.2")
    ell = np.exp(0.3)
    want = 2 * ell / (1 + ell**2) * (1 + 0.2 / np.cosh(1.5))
    assert float(Hr.hbar(0.3, 1.5)) == pytest.approx(want, rel=1e-14)
    assert float(sv.parse_curvature("rational").hbar(0.0, 0.0)) == 1.0

    Hd = sv.parse_curvature("dilation")
    assert float(Hd.hbar(0.7, 0.0)) == pytest.approx(np.exp(-0.7), rel=1e-14)
    assert float(Hd.dtheta(0.7, 3.0)) == 0.0

    for bad in ("gauss:1", "const", "const:zero", "const:-2", "rational:1.5", "table"):
        with pytest.raises(UsageError):
            sv.parse_curvature(bad)


def test_table_curvature(tmp_path):
    t_grid = np.linspace(-1.4, 1.4, 21)
    s_grid = np.linspace(0.0, 8.0, 33)
    exact = sv.rational_curvature(0.1)
    path = tmp_path / "h.csv"
    with open(path, "w") as fh:
        fh.write("t_s," + ",".join("%.17g" % s for s in s_grid) + "\n")
        for t in t_grid:
            vals = exact.hbar(t, s_grid)
            fh.write("%.17g," % t + ",".join("%.17g" % v for v in vals) + "\n")
    Ht = sv.table_curvature(str(path))
    tq = np.linspace(-1.2, 1.2, 17)[:, None]
    sq = np.linspace(0.2, 7.5, 23)[None, :]
    assert np.abs(Ht.hbar(tq, sq) - exact.hbar(tq, sq)).max() < 2e-5
    assert np.abs(Ht.dtheta(tq, sq) - exact.dtheta(tq, sq)).max() < 2e-3
    rep = sv.check_hypotheses(Ht, requested_radii=(0.8, 1.25))
    assert rep.passes["H1"] and rep.passes["H3"] and rep.requested_ok

    bad = tmp_path / "bad.csv"
    bad.write_text("t_s,0,1,2,3\n0.1,1,1,1,1\n")
    with pytest.raises(UsageError):
        sv.table_curvature(str(bad))
    neg = tmp_path / "neg.csv"
    with open(neg, "w") as fh:
        fh.write("t_s," + ",".join(str(s) for s in range(5)) + "\n")
        for k, t in enumerate(np.linspace(-1, 1, 5)):
            row = [1.0] * 5
            if k == 2:
                row[3] = -0.5
            fh.write("%g," % t + ",".join(str(v) for v in row) + "\n")
    with pytest.raises(UsageError):
        sv.table_curvature(str(neg))


def test_hypotheses_constant():
    rep = sv.check_hypotheses(sv.constant_curvature(1.0), requested_radii=(0.5, 2.0))
    assert rep.passes["H1"] and rep.passes["H1p"] and rep.passes["H3"]
    assert rep.passes["positive"] and rep.requested_ok
    assert rep.h1_min > 0
    assert rep.h3_l is not None and rep.h3_l < 1.0
    assert rep.h3_L is not None and rep.h3_L > 1.0
    assert np.isfinite(rep.h2_Lambda)


def test_hypotheses_rational(H01):
    rep = sv.check_hypotheses(H01, requested_radii=(0.8, 1.25))
    assert all(rep.passes[k] for k in ("H1", "H1p", "H2", "H3", "positive"))
    assert rep.requested_ok
    rep0 = sv.check_hypotheses(sv.rational_curvature(0.0), requested_radii=(0.5, 2.0))
    assert rep0.requested_ok and rep0.passes["H1p"]
    # the certified amplitude window: eps above 0.28125 breaks the 0.8 barrier
    rep_big = sv.check_hypotheses(sv.rational_curvature(0.3), requested_radii=(0.8, 1.25))
    assert not rep_big.requested_ok


def test_hypotheses_dilation():
    rep = sv.check_hypotheses(sv.dilation_curvature())
    assert rep.passes["H1"]
    assert not rep.passes["H1p"]
    assert not rep.passes["H3"]
    assert rep.h3_l is None and rep.h3_L is None
    assert abs(rep.h1_min) <= 1e-12
    d = rep.as_dict()
    assert d["passes"]["H1"] and not d["passes"]["H3"]


def test_hypotheses_usage():
    H = sv.PrescribedCurvature("shifted", lambda t, s, th=0.0: np.exp(t) * 0 + 1.0,
                               t_min=0.1, t_max=1.0)
    with pytest.raises(UsageError):
        sv.check_hypotheses(H)
    with pytest.raises(UsageError):
        sv.check_hypotheses(sv.constant_curvature(1.0), requested_radii=(1.5, 2.0))


def test_fd_fallback_matches_analytic():
    ref = sv.constant_curvature(1.0)
    noderiv = sv.PrescribedCurvature("const-fd", ref.hbar)
    t = np.linspace(-1.0, 1.0, 11)
    assert np.abs(noderiv.dtheta(t, 0.0) - np.exp(t)).max() < 1e-8


# ---------------------------------------------------------------------------
# discrete residual


def test_residual_exact_zero_cases():
    g = PolarGrid(16, 32, 2.0)
    zero = ScalarField.zeros(g)
    assert np.abs(sv.assemble_residual(zero, sv.constant_curvature(1.0)).matrix()).max() == 0.0
    assert np.abs(sv.assemble_residual(zero, sv.rational_curvature(0.0)).matrix()).max() == 0.0
    l0 = 0.8
    sheet = ScalarField.from_function(g, lambda s, th: np.log(l0) + 0 * s)
    r = sv.assemble_residual(sheet, sv.constant_curvature(1 / l0), boundary=np.log(l0))
    assert np.abs(r.matrix()).max() < 1e-14


def test_residual_matches_analytic_curvature():
    # the scheme should converge to m e^u (H_graph - Hbar) for a known graph
    graph = radial.builtin_identity_graphs()["mixed_bump"]
    errs = []
    for n_s, n_th in [(24, 48), (48, 96)]:
        g = PolarGrid(n_s, n_th, 2.0)
        u = ScalarField.from_function(g, graph.value)
        R = sv.assemble_residual(u, sv.constant_curvature(1.0)).rings[: n_s - 1]
        s = g.s_nodes[1:n_s][:, None]
        th = g.theta_nodes[None, :]
        H_true = radial.mean_curvature_divergence_form(graph, s + 0 * th, th + 0 * s)
        exact = 2 * np.exp(graph.value(s, th)) * (H_true - 1.0)
        errs.append(np.abs(R - exact).max())
    assert errs[0] / errs[1] > 3.0
    assert errs[1] < 0.02


def test_residual_margin_not_fatal():
    g = PolarGrid(12, 24, 2.0)
    steep = ScalarField.from_function(g, lambda s, th: 0.9985 * s + 0 * th)
    out = sv.assemble_residual(steep, sv.constant_curvature(1.0))
    assert np.isfinite(out.matrix()).all()
    cone = ScalarField.from_function(g, lambda s, th: 1.5 * s + 0 * th)
    with pytest.raises(NotSpacelikeError):
        sv.assemble_residual(cone, sv.constant_curvature(1.0))


def test_jacobian_matches_finite_differences(H01):
    g = PolarGrid(8, 16, 2.0)
    prob = sv.DiscreteProblem(g, H01, 0.0)
    rng = np.random.default_rng(7)
    for _ in range(3):
        x = rng.uniform(-0.04, 0.04, prob.n_unknowns)
        assert prob.slope_sq(x) < 0.6
        J = prob.jacobian(x).toarray()
        Jfd = np.empty_like(J)
        h = 1e-6
        for k in range(prob.n_unknowns):
            xp = x.copy()
            xm = x.copy()
            xp[k] += h
            xm[k] -= h
            Jfd[:, k] = (prob.residual(xp) - prob.residual(xm)) / (2 * h)
        scale = max(1.0, np.abs(J).max())
        assert np.abs(J - Jfd).max() / scale < 1e-6


# ---------------------------------------------------------------------------
# Newton solver


def test_solve_unit_curvature_is_exact():
    fld, rep = sv.solve_dirichlet(sv.constant_curvature(1.0), 3.0, n_s=24, n_theta=48)
    assert rep.converged and rep.iterations <= 2
    assert rep.residual_norm < 1e-12
    assert np.abs(fld.matrix()).max() < 1e-13
    assert rep.max_w == pytest.approx(1.0, abs=1e-13)


def test_solve_from_offset_guess():
    fld, rep = sv.solve_dirichlet(sv.constant_curvature(1.0), 2.0, n_s=24, n_theta=48, u0=0.3)
    assert rep.converged and rep.iterations <= 10
    assert np.abs(fld.matrix()).max() < 1e-9


def test_solve_constant_sheet_exact():
    for l0 in (0.8, 1.25):
        H = sv.constant_curvature(1 / l0)
        fld, rep = sv.solve_dirichlet(H, 2.5, n_s=20, n_theta=40, boundary=np.log(l0),
                                      precheck=False)
        assert rep.converged and rep.iterations == 0
        assert np.abs(fld.matrix() - np.log(l0)).max() < 1e-14

    # perturbed start still lands on the sheet
    g = PolarGrid(20, 40, 2.5)
    guess = ScalarField.from_function(
        g, lambda s, th: np.log(0.8) + 0.1 * np.exp(-(s**2)) * (1 - (s / 2.5) ** 2)
    )
    fld, rep = sv.solve_dirichlet(sv.constant_curvature(1.25), 2.5, n_s=20, n_theta=40,
                                  boundary=np.log(0.8), u0=guess, precheck=False)
    assert rep.converged
    assert np.abs(fld.matrix() - np.log(0.8)).max() < 1e-9


def test_solve_rational_dips_between_barriers(solves3):
    M = solves3[48].matrix()
    assert M.min() > np.log(0.8)
    assert M.min() < -0.01
    assert M.max() <= 1e-12


def test_solve_nonconvergence_is_reported():
    fld, rep = sv.solve_dirichlet(sv.rational_curvature(0.25), 2.0, n_s=16, n_theta=32,
                                  u0=0.4, max_iters=1, precheck=False)
    assert not rep.converged
    assert rep.message
    assert rep.iterations <= 1


def test_solve_rejects_non_spacelike_guess():
    g = PolarGrid(16, 32, 2.0)
    cone = ScalarField.from_function(g, lambda s, th: 1.5 * s + 0 * th)
    with pytest.raises(UsageError):
        sv.solve_dirichlet(sv.constant_curvature(1.0), 2.0, n_s=16, n_theta=32, u0=cone,
                           precheck=False)


def test_solve_boundary_callable():
    fld, rep = sv.solve_dirichlet(
        sv.constant_curvature(1.0), 2.0, n_s=24, n_theta=48,
        boundary=lambda th: 0.05 * np.cos(th), precheck=False,
    )
    assert rep.converged
    M = fld.matrix()
    assert np.abs(M[-1] - 0.05 * np.cos(fld.grid.theta_nodes)).max() < 1e-15
    assert np.abs(M).max() <= 0.05 + 1e-8


def test_solve_warns_without_barrier_radii():
    with pytest.warns(UserWarning):
        sv.solve_dirichlet(sv.dilation_curvature(), 1.5, n_s=12, n_theta=24)


def test_spacelike_margin_persists(H01):
    fld, rep = sv.solve_dirichlet(sv.rational_curvature(0.25), 3.0, n_s=32, n_theta=64,
                                  precheck=False)
    assert rep.converged
    prob = sv.DiscreteProblem(fld.grid, H01, 0.0)
    assert prob.slope_sq(prob.restrict(fld.matrix())) <= (1 - 1e-3) ** 2 + 1e-12


# ---------------------------------------------------------------------------
# radial oracle and chart cross-checks


def test_oracle_flat_profiles():
    prof = sv.radial_ode_oracle(sv.constant_curvature(1.0), 3.0)
    assert np.abs(prof.u).max() < 1e-12
    prof = sv.radial_ode_oracle(sv.rational_curvature(0.0), 3.0)
    assert np.abs(prof.u).max() < 1e-10
    l0 = 1.25
    prof = sv.radial_ode_oracle(sv.constant_curvature(1 / l0), 2.0, boundary=np.log(l0))
    assert np.abs(prof.u - np.log(l0)).max() < 1e-12


def test_oracle_bracket_control():
    # an explicit bracket straddling the root is honored
    prof = sv.radial_ode_oracle(sv.rational_curvature(0.0), 2.0, bracket=(-1.0, 1.0))
    assert abs(prof.u0) < 1e-10
    # one placed far from the root stays single-signed through both widenings
    with pytest.raises(BracketError):
        sv.radial_ode_oracle(sv.constant_curvature(1.0), 2.0, bracket=(3.0, 3.5))


def test_oracle_requires_radial_data():
    H = sv.PrescribedCurvature("angular", lambda t, s, th=0.0: 1.0 + 0 * np.asarray(t),
                               radial=False)
    with pytest.raises(UsageError):
        sv.radial_ode_oracle(H, 2.0)


def test_ode_pde_gap_second_order(H01, oracle3, solves3):
    gaps = {}
    for n_s, fld in solves3.items():
        M = fld.matrix()
        gaps[n_s] = np.abs(M - oracle3.interp(fld.grid.s_nodes)[:, None]).max()
        spread = (M.max(axis=1) - M.min(axis=1)).max()
        assert spread < 1e-10  # rotationally symmetric data, symmetric solution
    assert gaps[48] < 1e-3
    assert 3.2 < gaps[24] / gaps[48] < 4.8
    assert oracle3.error_estimate < 1e-10


def test_poincare_exact_cases():
    g = PolarGrid(20, 40, 2.0)
    zero = ScalarField.zeros(g)
    assert sv.poincare_residual(zero, 1.0) < 1e-13
    sheet = ScalarField.from_function(g, lambda s, th: np.log(0.8) + 0 * s)
    assert sv.poincare_residual(sheet, sv.constant_curvature(1 / 0.8)) < 1e-12
    assert sv.poincare_residual(sheet, sv.constant_curvature(1 / 0.8), form="divergence") < 1e-12
    with pytest.raises(UsageError):
        sv.poincare_residual(zero, 1.0, form="weak")


def test_poincare_residual_refines(H01, solves3):
    res = {n: sv.poincare_residual(f, H01) for n, f in solves3.items()}
    order = np.log2(res[24] / res[48])
    assert order > 1.8
    div = {n: sv.poincare_residual(f, H01, form="divergence") for n, f in solves3.items()}
    assert div[24] / div[48] > 3.0
    det = sv.poincare_residual(solves3[48], H01, details=True)
    assert det["excluded"] == 0 and det["residual"] == res[48]


# ---------------------------------------------------------------------------
# exhaustion and uniqueness


def test_exhaustion_unit_curvature():
    ex = sv.exhaustion(sv.constant_curvature(1.0), [1, 2, 3], s0=1.0, ds=1 / 8, n_theta=24)
    assert ex.converged_all
    assert all(d == 0.0 for d in ex.compact_deltas)
    assert all(abs(t - 1.0) < 1e-12 for t in ex.tilt_series)
    assert len(ex.psi_max) == 3 and "psi_plus" in ex.psi_max[0]


def test_exhaustion_rational(exh5):
    ex = exh5
    assert ex.converged_all
    assert ex.failure_index is None
    assert all(b > a for a, b in zip(ex.radii, ex.radii[1:]))
    d = ex.compact_deltas
    assert len(d) == 4
    assert all(y < x for x, y in zip(d, d[1:]))
    t = ex.tilt_series
    assert max(t) <= t[0] + 0.5
    # the innermost dip sends the dilation-weighted tilt max to the pole
    assert ex.psi_max[-1]["psi_minus"]["s"] == 0.0
    assert ex.psi_max[-1]["psi_plus"]["s"] > ex.radii[-1] / 2
    rd = ex.as_dict()
    assert rd["converged_all"] and len(rd["compact_deltas"]) == 4


def test_exhaustion_usage_errors(H01):
    with pytest.raises(UsageError):
        sv.exhaustion(H01, [2, 2, 3])
    with pytest.raises(UsageError):
        sv.exhaustion(H01, [1, 2], s0=1.5)


def test_uniqueness_probe(H01):
    grid = PolarGrid(24, 48, 2.0)
    bump = sv.bump_field(grid, amp=0.2)
    rep = sv.uniqueness_probe(H01, 2.0, [0.0, 0.25, -0.25, bump], n_s=24, n_theta=48)
    assert all(rep.converged)
    assert rep.max_pairwise < 1e-9


def test_uniqueness_probe_needs_two(H01):
    with pytest.raises(UsageError):
        sv.uniqueness_probe(H01, 2.0, [0.0])


def test_dilation_solutions_shift_with_boundary():
    H = sv.dilation_curvature()
    f0, r0 = sv.solve_dirichlet(H, 2.0, n_s=20, n_theta=40, boundary=0.0, precheck=False)
    f1, r1 = sv.solve_dirichlet(H, 2.0, n_s=20, n_theta=40, boundary=0.2, precheck=False)
    assert r0.converged and r1.converged
    assert np.abs(f1.matrix() - f0.matrix() - 0.2).max() < 1e-12
