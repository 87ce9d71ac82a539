import csv
import io
import json

import pytest

from oslab import cli
from oslab import obstruction as ob


def run(args, capsys=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(args, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def run_json(args):
    code, out, err = run(args + ["--format", "json"])
    return code, (json.loads(out) if out else None), err


def test_norm_outer_column_builtin():
    code, rep, _ = run_json(["norm", "--builtin", "lemma32-b", "--n-range", "3"])
    assert code == 0
    cert = rep["results"][0]["certificate"]
    assert cert["lower"] <= 1.0 <= cert["upper"] and cert["exact"]


def test_norm_zero_builtin():
    code, rep, _ = run_json(["norm", "--builtin", "zero"])
    assert code == 0
    assert rep["results"][0]["certificate"]["lower"] == 0.0


def test_random_element_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["norm", "--builtin", "random", "--seed", "9", "--out", str(tmp_path / d)]) == 0
    for name in ("norm.json", "norm.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_reports_embed_provenance():
    _, rep, _ = run_json(["obstruction", "--n-range", "1-12", "--seed", "4"])
    assert rep["seed"] == 4
    assert rep["config"]["n_range"] == list(range(1, 13))
    assert rep["code_version"] == cli.code_version() and len(rep["code_version"]) == 16


def test_element_file(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(ob.lemma32_element(4).with_space(ob.osp.RowOp(4)).dumps())
    code, rep, _ = run_json(["norm", "--element", str(p)])
    assert code == 0
    assert rep["results"][0]["certificate"]["upper"] == pytest.approx(2.0, abs=1e-8)


def test_bad_element_file_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "space": {"kind": "Row", "dim": 1},\n  "coords": [[[[1, 0]]]\n')
    code, _, err = run(["norm", "--element", str(p)])
    assert code == cli.EXIT_INPUT
    assert "bad.json:" in err and ":3:" in err or ":4:" in err


def test_lemma32_defaults_contain_known_row():
    code, out, _ = run(["lemma32"])
    assert code == 0
    rows = [r for r in csv.reader(io.StringIO(out)) if r and not r[0].startswith("#")]
    assert rows[0] == ob.LEMMA32_HEADER
    body = [(int(r[0]), float(r[1]), float(r[2])) for r in rows[1:]]
    assert len(body) == 30
    hit = [b for b in body if b[:2] == (4, 0.5)]
    assert hit and hit[0][2] == pytest.approx(1.41421356, abs=1e-8)


def test_obstruction_equal_exponents_rejected():
    code, _, err = run(["obstruction", "--theta", "0.5", "--gamma", "0.5"])
    assert code == cli.EXIT_INPUT and "theta < gamma" in err


def test_obstruction_symmetric_flag():
    code, rep, _ = run_json(["obstruction", "--theta", "0.8", "--gamma", "0.2", "--symmetric", "--n-range", "1-50"])
    assert code == 0 and rep["reduced"]


def test_config_file_and_override(tmp_path):
    cfgf = tmp_path / "run.cfg"
    cfgf.write_text("# sweep\nn-range = 1-5\nseed = 3\ngamma = 1\n")
    _, rep, _ = run_json(["obstruction", "--config", str(cfgf)])
    assert rep["config"]["n_range"] == [1, 2, 3, 4, 5] and rep["seed"] == 3
    _, rep, _ = run_json(["obstruction", "--config", str(cfgf), "--seed", "8"])
    assert rep["seed"] == 8


def test_config_file_bad_line(tmp_path):
    cfgf = tmp_path / "bad.cfg"
    cfgf.write_text("seed = 1\nthis line is wrong\n")
    code, _, err = run(["obstruction", "--config", str(cfgf)])
    assert code == cli.EXIT_INPUT and "bad.cfg:2" in err


def test_empty_range_rejected():
    code, _, _ = run(["lemma32", "--n-range", "5-2"])
    assert code == cli.EXIT_INPUT


def test_prop31_and_moduli_run():
    code, rep, _ = run_json(["prop31", "--n-range", "1-3"])
    assert code == 0 and len(rep["rows"]) == 3
    code, rep, _ = run_json(["moduli", "--count", "5"])
    assert code == 0 and rep["pairs"] == 10


def test_interp_command():
    code, rep, _ = run_json(["interp", "--builtin", "lemma32-b", "--n-range", "2", "--theta", "0.5"])
    assert code == 0
    r = rep["results"][0]
    assert r["lower"] <= 2**0.25 <= r["upper"]


def test_kalton_defaults_pass():
    code, rep, _ = run_json(["kalton"])
    assert code == 0 and rep["passed"]
    assert [lvl["k"] for lvl in rep["levels"]] == [1, 2, 3]
    for lvl in rep["levels"]:
        assert {c["name"] for c in lvl["checks"]} >= {"section-residual", "g-upper", "g-lower", "g-h-inverse", "eps-norm"}


def test_kalton_fault_injection_fails():
    code, rep, _ = run_json(["kalton", "--k-max", "1", "--samples", "30", "--inject-fault"])
    assert code == cli.EXIT_VERIFY and not rep["passed"]
    names = {c["name"]: c["passed"] for c in rep["levels"][0]["checks"]}
    assert not names["section-residual"]


def test_kalton_budget_exhaustion():
    code, rep, _ = run_json(["kalton", "--budget", "0"])
    assert code == cli.EXIT_BUDGET and rep["partial"]


def test_kalton_rejects_large_quotient():
    code, _, _ = run(["kalton", "--truncation", "7"])
    assert code == cli.EXIT_INPUT


def test_sphere_glue_reports_residuals():
    code, rep, _ = run_json(["sphere-glue", "--k-max", "1", "--samples", "60"])
    checks = {c["name"]: c for c in rep["levels"][0]["checks"]}
    assert checks["glued-section-residual"]["max_residual"] <= 1e-9
    assert checks["sphere-restriction"]["passed"]
    # the ray pair exceeds the affine bound 2t + 1, so the run reports a verification failure
    assert rep["ray_pair"]["lhs"] > rep["ray_pair"]["rhs"]
    assert code == cli.EXIT_VERIFY


def test_unknown_command():
    code, _, _ = run(["frobnicate"])
    assert code == cli.EXIT_INPUT
