import json
import math

import numpy as np
import pandas as pd
import pytest

from med_lab.ensemble_io import encode_matrix, load_ensemble, serialize_povm
from med_lab.errors import UsageError
from med_lab.med_certify import Povm
from med_lab.med_cli import gen_document, main, parse_grid, solve_ensemble


def write_json(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


@pytest.fixture
def trine_file(tmp_path):
    assert main(["gen", "trine", "--out", str(tmp_path / "trine.json")]) == 0
    return str(tmp_path / "trine.json")


@pytest.fixture
def spin_file(tmp_path):
    assert main(["gen", "spin", "--out", str(tmp_path / "spin.json")]) == 0
    return str(tmp_path / "spin.json")


@pytest.fixture
def pair_file(tmp_path):
    return write_json(tmp_path / "pair.json", {
        "dim": 2, "priors": "equal",
        "states": [{"matrix": encode_matrix(np.diag([1.0, 0.0]))}, {"matrix": encode_matrix(np.diag([0.0, 1.0]))}],
    })


def read_json_report(capsys):
    return json.loads(capsys.readouterr().out)


# ---------------------------
# SOLVE
# ---------------------------
def test_solve_trine(trine_file, capsys):
    assert main(["solve", trine_file, "--json"]) == 0
    report = read_json_report(capsys)
    assert report["p_opt"] == pytest.approx(2 / 3, abs=1e-9)
    assert report["label"] == "optimal"
    assert report["method_used"] == "both"
    assert report["applicability"] == "exact"
    assert report["certificate"]["verdict"] == "pass"
    assert report["helstrom_family_summary"]["ratio"] == pytest.approx(2 / 3, abs=1e-9)
    assert report["p_oracle"] == pytest.approx(report["p_closed"], abs=1e-9)
    assert "timings_ms" not in report


def test_solve_text_output(trine_file, capsys):
    assert main(["solve", trine_file]) == 0
    out = capsys.readouterr().out
    assert "optimal" in out and "0.666666666667" in out


def test_solve_oracle_only(trine_file, capsys):
    assert main(["solve", trine_file, "--method", "oracle", "--json"]) == 0
    report = read_json_report(capsys)
    assert report["method_used"] == "oracle"
    assert report["applicability"] == "n/a"
    assert report["p_closed"] is None


def test_solve_closed_inapplicable_reports_upper_bound(spin_file, capsys):
    assert main(["solve", spin_file, "--method", "closed", "--json"]) == 2
    report = read_json_report(capsys)
    assert report["label"] == "inapplicable"
    assert report["certificate"] is None
    assert report["upper_bound"] == pytest.approx((1 + 0.6 * math.sin(1.0472)) / 4, abs=1e-12)


def test_solve_reports_family_when_an_outcome_is_never_guessed(tmp_path, capsys):
    path = write_json(tmp_path / "skewed.json", {
        "dim": 2, "priors": [0.9, 0.1],
        "states": [{"matrix": encode_matrix(np.eye(2) / 2)}, {"matrix": encode_matrix(np.eye(2) / 2)}],
    })
    assert main(["solve", path, "--method", "oracle", "--json"]) == 0
    report = read_json_report(capsys)
    assert report["label"] == "optimal"
    assert report["p_opt"] == pytest.approx(0.9, abs=1e-9)
    summary = report["helstrom_family_summary"]
    assert summary is not None
    assert summary["degenerate"] == [True, False]
    assert summary["tau_min_eigenvalues"][1] == pytest.approx(0.5, abs=1e-6)


def test_solve_json_is_deterministic(trine_file, capsys):
    main(["solve", trine_file, "--json"])
    first = capsys.readouterr().out
    main(["solve", trine_file, "--json"])
    assert capsys.readouterr().out == first


def test_solve_timings_flag(trine_file, capsys):
    assert main(["solve", trine_file, "--json", "--timings"]) == 0
    assert set(read_json_report(capsys)["timings_ms"]) >= {"closed_form", "oracle", "certify", "srm"}


def test_solve_bad_priors(tmp_path, capsys):
    path = write_json(tmp_path / "bad.json", {
        "dim": 2, "priors": [0.9, 0.9],
        "states": [{"matrix": encode_matrix(np.eye(2) / 2)}, {"matrix": encode_matrix(np.eye(2) / 2)}],
    })
    assert main(["solve", path]) == 1
    assert "priors" in capsys.readouterr().out
    assert main(["solve", path, "--json"]) == 1
    assert read_json_report(capsys)["field_path"] == "priors"


def test_solve_missing_file(tmp_path):
    assert main(["solve", str(tmp_path / "absent.json")]) == 1


def test_unsupported_method(trine_file, capsys):
    assert main(["solve", trine_file, "--method", "magic"]) == 1
    assert "magic" in capsys.readouterr().err


def test_solve_ensemble_rejects_method(trine_file):
    with pytest.raises(UsageError):
        solve_ensemble(load_ensemble(trine_file), method="magic")


# ---------------------------
# CERTIFY
# ---------------------------
def test_certify_pass_and_fail(tmp_path, pair_file, capsys):
    projective = write_json(tmp_path / "proj.json", json.loads(serialize_povm(
        Povm(np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])))))
    uniform = write_json(tmp_path / "uniform.json", json.loads(serialize_povm(
        Povm(np.stack([np.eye(2) / 2] * 2)))))
    assert main(["certify", pair_file, projective, "--json"]) == 0
    assert read_json_report(capsys)["p"] == pytest.approx(1.0)
    assert main(["certify", pair_file, uniform]) == 2
    assert "fail" in capsys.readouterr().out


def test_certify_dimension_mismatch(tmp_path, pair_file):
    povm = write_json(tmp_path / "qutrit.json", json.loads(serialize_povm(Povm(np.eye(3)[None]))))
    assert main(["certify", pair_file, povm]) == 1


# ---------------------------
# SWEEP
# ---------------------------
def test_sweep_theta(spin_file, tmp_path, capsys):
    out = tmp_path / "sweeps" / "theta.csv"
    code = main(["sweep", spin_file, "--grid", f"theta=0,{math.pi / 4},{math.pi / 2}", "--out", str(out)])
    assert code == 0
    table = pd.read_csv(out)
    assert len(table) == 3
    assert list(table["theta"]) == sorted(table["theta"])
    first = table.iloc[0]
    assert first["p_formula"] == pytest.approx(0.25)
    assert first["p_closed"] == pytest.approx(0.25)
    assert first["applicability"] == "degenerate_uniform"
    assert np.isnan(table.iloc[1]["p_closed"])
    assert list(table["margin_source"]) == ["closed_form" if c else "oracle" for c in table["certified"]]
    assert first["margin_source"] == "closed_form"
    assert table.iloc[1]["margin_source"] == "oracle"
    assert (table["p_oracle"] <= table["p_formula"] + 1e-7).all()
    assert "Saved 3 rows" in capsys.readouterr().out


def test_parse_grid():
    grid = parse_grid("theta=0.5,0.1; n=4,3")
    assert grid == {"theta": [0.1, 0.5], "n": [3, 4]}
    with pytest.raises(UsageError):
        parse_grid("b=1")
    with pytest.raises(UsageError):
        parse_grid("n=2.5")
    with pytest.raises(UsageError):
        parse_grid("")


def test_sweep_unknown_field(spin_file, tmp_path):
    assert main(["sweep", spin_file, "--grid", "b=1", "--out", str(tmp_path / "x.csv")]) == 1


def test_sweep_rejects_non_spin_template(trine_file, tmp_path):
    assert main(["sweep", trine_file, "--grid", "a=0.1", "--out", str(tmp_path / "x.csv")]) == 1


# ---------------------------
# GEN
# ---------------------------
def test_gen_files_load(tmp_path):
    assert main(["gen", "pair", "--a", "0.6", "--out", str(tmp_path / "pair.json")]) == 0
    pair = load_ensemble(tmp_path / "pair.json")
    assert pair.count == 2 and pair.dim == 2
    assert main(["gen", "spin", "--two_j", "3", "--a", "0.2", "--out", str(tmp_path / "spin.json")]) == 0
    spin = load_ensemble(tmp_path / "spin.json")
    assert spin.dim == 4 and spin.generators is not None


def test_gen_defaults_and_validation():
    document = gen_document("latitude", n=5)
    assert document["states"][0]["bloch_latitude"]["a"] == 0.6
    assert len(document["states"][0]["bloch_latitude"]["phis"]) == 5
    assert main(["gen", "pair", "--a", "2.0", "--out", "unused.json"]) == 1
