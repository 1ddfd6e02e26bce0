import csv
import io
import json

import numpy as np
import pytest

from hyperflow.cli import main
from hyperflow.curvature import scalar_curvature


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_text(capsys, fixture_file):
    code, out, _ = run(capsys, "validate", fixture_file("doubled_tet"))
    assert code == 0
    assert out.splitlines()[0] == "N=4 tets=2 edges=6; all χ=2, d=2"


def test_validate_json(capsys, fixture_file):
    code, out, _ = run(capsys, "validate", fixture_file("torus_cusp"), "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["N"] == 1 and doc["edges"] == 2
    assert doc["vertices"][0] == {"label": 0, "degree": 8, "euler_char": 0}


def test_validate_unglued(capsys, tmp_path):
    p = tmp_path / "one.json"
    p.write_text(json.dumps({"mode": "explicit", "tets": [[0, 1, 2, 3]], "gluings": []}))
    code, out, err = run(capsys, "validate", str(p))
    assert code == 1
    assert "unglued face" in err and "tet 0" in err and "face 0" in err
    assert out == ""


def test_validate_empty_and_missing(capsys, tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    assert run(capsys, "validate", str(p))[0] == 1
    assert run(capsys, "validate", str(tmp_path / "nope.json"))[0] == 1


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_curvature_json(capsys, fixture_file, doubled):
    code, out, _ = run(capsys, "curvature", fixture_file("doubled_tet"), "--radii", "0.5,1,1.5,2", "--jacobian")
    assert code == 0
    doc = json.loads(out)
    K = scalar_curvature(doubled, np.array([0.5, 1, 1.5, 2]))
    # repr formatting round-trips exactly
    assert doc["K_edge_sum"] == K.tolist()
    assert doc["discrepancy"] < 1e-9
    lam = np.array(doc["lambda"])
    np.testing.assert_array_equal(lam, lam.T)
    assert len(doc["edges"]) == 6


def test_curvature_csv(capsys, fixture_file, penta, tmp_path):
    radii = tmp_path / "r.txt"
    radii.write_text("0.3 0.6 0.9 1.2 1.5\n")
    out_file = tmp_path / "k.csv"
    code, out, _ = run(
        capsys, "curvature", fixture_file("pentachoron"), "--radii", str(radii), "--format", "csv", "--out", str(out_file)
    )
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(out_file.read_text())))
    K = [float(r["value"]) for r in rows if r["quantity"] == "K_edge_sum"]
    assert K == scalar_curvature(penta, np.array([0.3, 0.6, 0.9, 1.2, 1.5])).tolist()


def test_curvature_dimension_mismatch(capsys, fixture_file):
    code, _, err = run(capsys, "curvature", fixture_file("doubled_tet"), "--radii", "1,1,1")
    assert code == 1
    assert "dimension mismatch" in err


def test_curvature_nonpositive(capsys, fixture_file):
    assert run(capsys, "curvature", fixture_file("doubled_tet"), "--radii", "1,1,0,1")[0] == 1


def test_flow_newton_current(capsys, fixture_file):
    code, out, err = run(capsys, "flow", fixture_file("pentachoron"), "--radii", "0.7", "--method", "newton")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["t", "step", "residual"]
    assert len(rows) == 2
    assert "converged" in err


def test_flow_ricci_perturbed(capsys, fixture_file):
    code, out, _ = run(
        capsys, "flow", fixture_file("doubled_tet"), "--radii", "1.05,0.95,1.05,0.95", "--target-radii", "1", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["termination"] == "converged"
    assert doc["summary"]["final_residual"] <= 1e-10
    np.testing.assert_allclose(doc["summary"]["final_r"], 1.0, atol=1e-9)


def test_flow_methods_agree(capsys, fixture_file):
    limits = []
    for method in ("calabi", "newton"):
        code, out, _ = run(
            capsys, "flow", fixture_file("torus_cusp"), "--radii", "1.3", "--target-radii", "0.8",
            "--method", method, "--format", "json",
        )
        assert code == 0
        limits.append(np.array(json.loads(out)["summary"]["final_r"]))
    np.testing.assert_allclose(limits[0], limits[1], atol=1e-7)


def test_flow_exit_codes(capsys, fixture_file):
    args = ["flow", fixture_file("doubled_tet"), "--radii", "1.2", "--target-radii", "1"]
    assert run(capsys, *args, "--max-iters", "1")[0] == 3
    assert run(capsys, *args, "--max-time", "0.01")[0] == 4


def test_flow_deterministic(capsys, fixture_file):
    args = ["flow", fixture_file("doubled_tet"), "--radii", "1.2,0.8,1,1", "--target-radii", "1", "--sample-every", "5"]
    first = run(capsys, *args)[1]
    assert first == run(capsys, *args)[1]
    assert len(first.splitlines()) > 2


def test_flow_bad_sample_every(capsys, fixture_file):
    assert run(capsys, "flow", fixture_file("doubled_tet"), "--radii", "1", "--sample-every", "0")[0] == 2


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--M", "1", "--c", "0.5", "--chi", "2", "--d", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["C1"] == 13.112405382142331
    assert doc["C1_tilde"] == 0.5766355006486307


def test_bounds_csv_and_error(capsys):
    code, out, _ = run(capsys, "bounds", "--M", "1", "--c", "0.5", "--chi", "0", "--d", "8", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "quantity,value"
    assert run(capsys, "bounds", "--M", "1", "--c", "2", "--chi", "2", "--d", "2")[0] == 1
