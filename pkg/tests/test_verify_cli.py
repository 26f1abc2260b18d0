"""Certification battery and the command-line interface."""

import json

import numpy as np
import pytest

from ddrmag import cli, mesh as msh, verify
from ddrmag.ddr_core import DDR


@pytest.fixture(scope="module")
def ddr_cube():
    return DDR(msh.generate_mesh("cartesian", 1), 1)


def test_exactness_check(ddr_cube):
    rep = verify.check_exactness(ddr_cube)
    assert rep["passed"], rep
    assert rep["ranks"] == rep["expected"]
    assert rep["complex_residuals"]["CG"] <= 1e-11
    assert rep["complex_residuals"]["DC"] <= 1e-11


def test_consistency_check(ddr_cube):
    rep = verify.check_consistency(ddr_cube)
    assert rep["passed"], rep


def test_curl0_commutation(ddr_cube):
    rep = verify.check_curl0_commutation(ddr_cube)
    assert rep["passed"], rep


def test_infsup_frozen_values():
    # dense inf-sup constants on the single cube; stability far above the
    # acceptance floor
    beta0 = verify.compute_infsup(DDR(msh.generate_mesh("cartesian", 1), 0))
    beta1 = verify.compute_infsup(DDR(msh.generate_mesh("cartesian", 1), 1))
    assert abs(beta0 - 2.0 / 3.0) < 1e-10
    assert abs(beta1 - 0.5) < 1e-10


def test_infsup_cap_enforced():
    ddr = DDR(msh.generate_mesh("cartesian", 2), 0)
    with pytest.raises(RuntimeError):
        verify.compute_infsup(ddr, dof_cap=10)


def test_battery_and_report_format():
    m = msh.generate_mesh("kuhn-tet", 1)
    rep = verify.run_battery(degrees=(0,), meshes=[("kuhn-1", m)])
    assert rep["passed"]
    text = verify.format_report(rep)
    assert "kuhn-1" in text
    assert "pass" in text.lower()


def test_cli_mesh_info(capsys):
    assert cli.main(["mesh-info", "--family", "cartesian", "--n", "2"]) == 0
    out = capsys.readouterr().out
    assert "n_elements: 8" in out


def test_cli_solve_writes_csv(tmp_path, capsys):
    out = tmp_path / "row.csv"
    rc = cli.main(["solve", "--family", "cartesian", "--n", "1",
                   "--degree", "0", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("MeshSize,EnergyError")
    assert len(lines) == 2


def test_cli_degree_cap():
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", "--family", "cartesian", "--n", "1",
                  "--degree", "4"])
    assert exc.value.code == 2


def test_cli_verify_json(tmp_path, capsys):
    rep_path = tmp_path / "report.json"
    rc = cli.main(["verify", "--family", "kuhn-tet", "--n", "1",
                   "--degree", "0", "--json", "--report", str(rep_path)])
    assert rc == 0
    data = json.loads(rep_path.read_text())
    assert data["passed"] is True


def test_cli_convergence_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        rc = cli.main(["convergence", "--family", "cartesian",
                       "--levels", "1,2", "--degree", "0",
                       "--out", str(path)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_bad_levels():
    with pytest.raises(SystemExit) as exc:
        cli.main(["convergence", "--family", "cartesian",
                  "--levels", "2,x", "--degree", "0"])
    assert exc.value.code == 2
