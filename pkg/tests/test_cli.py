import json
import subprocess
import sys

import numpy as np
import pytest

from pmcsurf import fieldio
from pmcsurf.cartesian import affine, hyperboloid, surface_field
from pmcsurf.cli import main
from pmcsurf.fields import BoxGrid


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_solve_writes_field_and_report(tmp_path):
    d = str(tmp_path)
    rc = main(["solve", "--H", "const:1", "--smax", "3", "--grid", "32x64", "--outdir", d])
    assert rc == 0
    rep = _read_json(tmp_path / "solve_report.json")
    assert rep["converged"] is True
    assert rep["iterations"] == 0
    assert rep["roundtrip_max_gap"] == 0.0
    fld = fieldio.read_radial_field(str(tmp_path / "solution.field"))
    assert fld.grid.n_s == 32 and fld.grid.n_theta == 64
    assert np.abs(fld.matrix()).max() == 0.0


def test_solve_usage_errors(tmp_path):
    assert main(["solve", "--H", "const:1", "--smax", "3", "--grid", "0x0"]) == 64
    assert main(["solve", "--H", "const:1"]) == 64  # no smax anywhere
    assert main(["solve", "--H", "gauss:1", "--smax", "2"]) == 64
    assert main(["solve", "--H", "const:1", "--smax", "2", "--nope"]) == 64
    assert main([]) == 64
    assert main(["frobnicate"]) == 64


def test_missing_inputs_exit_66(tmp_path):
    assert main(["solve", "--H", "table:%s/nope.csv" % tmp_path, "--smax", "2"]) == 66
    assert main(["solve", "--config", str(tmp_path / "nope.conf")]) == 66
    assert main(["willmore", "--surface", "field:%s/nope.box" % tmp_path]) == 66


def test_solve_nonconvergence_exit_2(tmp_path):
    d = str(tmp_path)
    rc = main(["solve", "--H", "rational:0.25", "--smax", "2", "--grid", "16x32",
               "--tol", "1e-16", "--max-iters", "3", "--outdir", d])
    assert rc == 2
    rep = _read_json(tmp_path / "solve_report.json")
    assert rep["converged"] is False
    assert rep["message"]


def test_config_file_flags_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(
        "[solve]\n"
        "H = rational:0.1  # builtin family\n"
        "smax = 2\n"
        "grid = 32x64\n"
    )
    d1 = tmp_path / "a"
    d2 = tmp_path / "b"
    assert main(["solve", "--config", str(conf), "--outdir", str(d1)]) == 0
    assert fieldio.read_radial_field(str(d1 / "solution.field")).grid.n_s == 32
    assert main(["solve", "--config", str(conf), "--grid", "16x32", "--outdir", str(d2)]) == 0
    assert fieldio.read_radial_field(str(d2 / "solution.field")).grid.n_s == 16

    conf.write_text("[solve]\nH = const:1\nsmax = 2\nwibble = 3\n")
    assert main(["solve", "--config", str(conf)]) == 64


def test_reports_are_byte_identical(tmp_path):
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    args = ["solve", "--H", "rational:0.1", "--smax", "2", "--grid", "16x32"]
    assert main(args + ["--outdir", str(d1)]) == 0
    assert main(args + ["--outdir", str(d2)]) == 0
    assert (d1 / "solve_report.json").read_bytes() == (d2 / "solve_report.json").read_bytes()
    assert (d1 / "solution.field").read_bytes() == (d2 / "solution.field").read_bytes()


def test_exhaustion_outputs(tmp_path):
    d = str(tmp_path)
    rc = main(["exhaustion", "--H", "rational:0.1", "--radii", "1:3",
               "--ds", "0.0625", "--ntheta", "48", "--outdir", d])
    assert rc == 0
    rep = _read_json(tmp_path / "exhaustion_report.json")
    assert rep["failure_index"] is None
    assert len(rep["radii"]) == 3
    assert len(rep["compact_deltas"]) == 2
    assert rep["compact_deltas"][1] < rep["compact_deltas"][0]
    assert rep["field_files"] == ["ball_01.field", "ball_02.field", "ball_03.field"]
    for name, r in zip(rep["field_files"], rep["radii"]):
        fld = fieldio.read_radial_field(str(tmp_path / name))
        assert fld.grid.s_max == pytest.approx(r)


def test_exhaustion_partial_report_on_failure(tmp_path):
    d = str(tmp_path)
    rc = main(["exhaustion", "--H", "rational:0.1", "--radii", "1:3",
               "--ds", "0.125", "--ntheta", "24", "--tol", "1e-18", "--outdir", d])
    assert rc == 2
    rep = _read_json(tmp_path / "exhaustion_report.json")
    assert rep["failure_index"] == 0
    assert rep["field_files"] == []
    assert rep["reports"][0]["converged"] is False


def test_willmore_hyperboloid(tmp_path):
    d = str(tmp_path)
    rc = main(["willmore", "--surface", "hyperboloid:l=1", "--m", "2", "--R", "50",
               "--outdir", d])
    assert rc == 0
    rep = _read_json(tmp_path / "willmore_report.json")
    assert rep["passes"] is True
    assert abs(rep["integral"] - np.pi) / np.pi <= 1e-3
    assert rep["m"] == 2


def test_willmore_field_route(tmp_path):
    grid = BoxGrid.cube(2, 22.0, 353)
    fld = surface_field(hyperboloid(1.0), grid)
    box = tmp_path / "hyp.box"
    fieldio.write_cartesian_field(fld, str(box))
    rc = main(["willmore", "--surface", "field:%s" % box, "--R", "20",
               "--outdir", str(tmp_path)])
    assert rc == 0
    assert main(["willmore", "--surface", "field:%s" % box, "--m", "3"]) == 64


def test_growth_csv_roundtrip(tmp_path):
    d = str(tmp_path)
    rc = main(["growth", "--surface", "hyperboloid:l=1", "--p", "2", "--radii", "1:4",
               "--outdir", d])
    assert rc == 0
    cols = fieldio.read_series_csv(str(tmp_path / "growth.csv"))
    assert list(cols) == ["rho", "lp_norm", "lm_norm", "gauss_image", "volume"]
    assert cols["rho"].size == 4
    assert np.all(np.diff(cols["lp_norm"]) > 0)
    assert cols["lp_norm"][0] ** 2 == pytest.approx(2 * np.pi * (np.cosh(1.0) - 1.0), rel=1e-3)


def test_growth_flat_graph_flags_plateau(tmp_path):
    grid = BoxGrid.cube(2, 8.0, 81)
    fld = surface_field(affine(1.0, np.zeros(2)), grid)
    box = tmp_path / "flat.box"
    fieldio.write_cartesian_field(fld, str(box))
    rc = main(["growth", "--surface", "field:%s" % box, "--radii", "1,2,3",
               "--outdir", str(tmp_path)])
    assert rc == 3


def test_check_h_exit_codes(tmp_path):
    d = str(tmp_path)
    assert main(["check-h", "--H", "const:1", "--outdir", d]) == 0
    rep = _read_json(tmp_path / "hypotheses_report.json")
    assert rep["passes"]["H1"] and rep["passes"]["H3"]
    assert main(["check-h", "--H", "rational:0.1", "--lL", "0.8,1.25", "--outdir", d]) == 0
    assert main(["check-h", "--H", "dilation", "--outdir", d]) == 3
    assert main(["check-h", "--H", "const:1", "--lL", "nonsense", "--outdir", d]) == 64


def test_identities_report(tmp_path):
    d = str(tmp_path)
    rc = main(["identities", "--outdir", d])
    assert rc == 0
    rep = _read_json(tmp_path / "identities_report.json")
    assert rep["passes"] is True
    assert rep["min_order"] >= 1.9
    suites = {e["suite"] for e in rep["entries"]}
    assert suites == {"laplacian_w", "hessian_tau", "poincare"}


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("PMC_THREADS", "2")
    d = str(tmp_path)
    rc = main(["willmore", "--surface", "hyperboloid:l=1", "--R", "10",
               "--spacing", "0.5", "--outdir", d])
    assert rc == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "pmcsurf.cli", "check-h", "--H", "const:1",
         "--outdir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "check-h: const:1 passes" in proc.stdout
