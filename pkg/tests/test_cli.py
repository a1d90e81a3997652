import csv
import json
import subprocess
import sys

import pytest

from muponzi.cli import main

FAST_HYPERBOLIC = ["verify-hyperbolic", "--r-max", "1.5", "--r-step", "0.5", "--angles", "3"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_certificate_schema(capsys):
    code, cert = run(["verify-tree", "--radius", "4"], capsys)
    assert code == 0
    assert set(cert) == {"schema", "command", "config", "pass", "metrics", "witnesses", "timing"}
    assert cert["schema"] == 1 and cert["command"] == "verify-tree"
    assert cert["config"]["radius"] == 4 and cert["config"]["free"] == 2


def test_verify_tree_defaults(capsys):
    code, cert = run(["verify-tree"], capsys)
    m = cert["metrics"]
    assert code == 0 and cert["pass"]
    assert m["identity_boundary"] == 4 and m["interior_boundary_values"] == [2]
    assert m["window_points"] == 2 * 3 ** 8 - 1
    assert cert["witnesses"]["witness_radius"] == 0


def test_verify_tree_rank_three(capsys):
    code, cert = run(["verify-tree", "--free", "3", "--radius", "4"], capsys)
    assert code == 0
    assert cert["metrics"]["identity_boundary"] == 6 and cert["metrics"]["interior_boundary_values"] == [4]


def test_amenable_rank_is_a_config_error(capsys):
    assert main(["verify-tree", "--free", "1"]) == 2
    assert "amenable" in capsys.readouterr().err


def test_unreachable_tolerance_is_a_numeric_error(capsys):
    assert main(["verify-hyperbolic", "--ball-radius", "1", "--quad-tol", "1e-30", "--centers", "0"]) == 2


def test_ball_self_test(capsys):
    code, cert = run(["verify-hyperbolic", "--ball-radius", "1"], capsys)
    assert code == 0
    assert cert["metrics"]["max_deviation"] <= 1e-6
    assert len(cert["metrics"]["centers"]) == 4


def test_ball_self_test_rejects_wrong_reference_value(capsys):
    # 3.4123920 is off from 2 pi (cosh 1 - 1) = 3.4122763 by 1.2e-4
    code, cert = run(["verify-hyperbolic", "--ball-radius", "1", "--expect", "3.4123920"], capsys)
    assert code == 1
    assert cert["metrics"]["max_deviation"] == pytest.approx(1.157e-4, abs=1e-6)


def test_small_hyperbolic_grid_and_csv(tmp_path, capsys):
    path = tmp_path / "rows.csv"
    code, cert = run(FAST_HYPERBOLIC + ["--csv", str(path)], capsys)
    assert code == 0
    m = cert["metrics"]
    assert m["closed_form_min"] >= m["epsilon"]
    assert m["case2_nonincreasing"] and m["case_continuity_gap"] <= 1e-9
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "angle", "closed_form", "quadrature", "residual"]
    assert len(rows) == 1 + 1 + 3 * 3
    assert all(abs(float(r[4])) <= 1e-4 for r in rows[1:])


def test_output_is_deterministic_apart_from_timing(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"c{k}.json"
        assert main(FAST_HYPERBOLIC + ["--out", str(p)]) == 0
        cert = json.loads(p.read_text())
        cert.pop("timing")
        outs.append(cert)
    assert outs[0] == outs[1]


def test_config_file_sets_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius": 3}))
    code, cert = run(["verify-tree", "--config", str(cfg)], capsys)
    assert code == 0 and cert["config"]["radius"] == 3
    code, cert = run(["verify-tree", "--config", str(cfg), "--radius", "5"], capsys)
    assert cert["config"]["radius"] == 5


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radius": 3, "raduis": 4}))
    assert main(["verify-tree", "--config", str(cfg)]) == 2
    assert "raduis" in capsys.readouterr().err


def test_flux_translation_flow(capsys):
    code, cert = run(["flux", "--max-len", "20"], capsys)
    assert code == 0
    rows = cert["metrics"]["rows"]
    assert all(r["flux"] == 0 and r["bound"] == 2 for r in rows)
    assert len(cert["witnesses"]["refutations"]) == 18


def test_flux_empty_and_random(capsys):
    code, cert = run(["flux", "--empty", "--max-len", "5"], capsys)
    assert code == 0 and all(r["flux"] == 0 for r in cert["metrics"]["rows"])
    code, cert = run(["flux", "--random", "--R", "2", "--max-len", "30"], capsys)
    assert code == 0 and cert["metrics"]["oriented"]
    assert all(abs(r["flux"]) <= 6 for r in cert["metrics"]["rows"])
    code, cert = run(["flux", "--dim", "2", "--max-len", "6"], capsys)
    assert code == 0


def test_flux_reads_chain_file(tmp_path, capsys):
    p = tmp_path / "chain.tsv"
    p.write_text("0\t1\t1\n1\t0\t-1\n")
    code, cert = run(["flux", "--chain", str(p), "--max-len", "3", "--norm-bound", "2"], capsys)
    assert code == 0
    assert cert["metrics"]["rows"][0]["flux"] == 2
    # the chain's net flow is 2, so a norm bound of 1 is refused
    assert main(["flux", "--chain", str(p), "--max-len", "3"]) == 2


def test_convert_z_lift(capsys):
    code, cert = run(["convert", "--direction", "ponzi-to-mu", "--space", "Z"], capsys)
    assert code == 0
    assert cert["metrics"]["C"] == 3 and cert["metrics"]["identity_residual"] == 0


def test_convert_z_lift_varying_E_fails(capsys):
    code, cert = run(["convert", "--direction", "ponzi-to-mu", "--space", "Z", "--E-varying"], capsys)
    assert code == 1
    assert cert["metrics"]["failed_check"] == "constant_on_S_check"


def test_convert_free_lift(capsys):
    code, cert = run(["convert", "--direction", "ponzi-to-mu", "--space", "free", "--radius", "4"], capsys)
    assert code == 0 and cert["metrics"]["C"] == 1


def test_convert_rejects_unknown_space(capsys):
    assert main(["convert", "--direction", "ponzi-to-mu", "--space", "torus"]) == 2
    assert main(["convert", "--direction", "mu-to-ponzi", "--space", "Z"]) == 2
    assert main(["convert", "--direction", "mu-to-ponzi", "--window", "1.5"]) == 2


def test_console_entry_point_runs():
    out = subprocess.run([sys.executable, "-m", "muponzi.cli", "verify-tree", "--radius", "3"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert json.loads(out.stdout)["pass"] is True
