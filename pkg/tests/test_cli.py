import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from biased_npmle.cli import DatasetError, main, parse_dataset

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_curve(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[float(r["t"]), float(r["survival"])] for r in rows])


def test_parse_durations(tmp_path):
    s = parse_dataset(write(tmp_path, "d.csv", "1,1\n2,0\n"), "durations")
    assert s.exact.tolist() == [1.0] and s.censored.tolist() == [2.0]
    s = parse_dataset(write(tmp_path, "h.csv", "value,status\n1,1\n"), "durations")
    assert s.m == 1


def test_parse_truncated_row(tmp_path):
    t = parse_dataset(write(tmp_path, "t.csv", "782,900,1\n"), "truncated")
    assert list(t.records()) == [(782.0, 900.0, True)]


def test_parse_error_names_row_and_column(tmp_path):
    with pytest.raises(DatasetError, match="row 1, column 'value'"):
        parse_dataset(write(tmp_path, "bad.csv", "abc,1\n"), "durations")
    with pytest.raises(DatasetError, match="row 2"):
        parse_dataset(write(tmp_path, "bad2.csv", "1,1\n2,3,4\n"), "durations")
    with pytest.raises(DatasetError, match="status"):
        parse_dataset(write(tmp_path, "bad3.csv", "1,2\n"), "durations")


def test_estimate_truncated_interval(tmp_path, capsys):
    data = write(tmp_path, "ch.csv",
                 "entry,exit,status\n790,900,1\n800,1000,0\n850,950,1\n900,1050,1\n820,1080,0\n")
    weight = '{"kind":"TruncatedInterval","alpha":782,"beta":1073}'
    out = tmp_path / "out"
    assert main(["estimate", "--input", data, "--format", "truncated",
                 "--weight", weight, "--out", str(out)]) == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["conditional_on"] == 782.0
    assert "conditional" in fit["estimand"]
    curve = read_curve(out / "survival.csv")
    assert curve[0].tolist() == [782.0, 1.0]
    assert np.all(np.diff(curve[:, 1]) <= 0)
    assert abs(sum(fit["pi"]) - 1) < 1e-12
    assert (out / "resolved_config.json").exists()


def test_estimate_constant_weight_is_km(tmp_path):
    data = write(tmp_path, "d.csv", "1,1\n2,0\n3,1\n4,1\n")
    out = tmp_path / "o"
    assert main(["estimate", "--input", data, "--weight", '{"kind":"Constant","c":1}',
                 "--out", str(out), "--tol", "1e-13", "--loglik-tol", "1e-16"]) == 0
    curve = read_curve(out / "survival.csv")
    # KM: 3/4 after 1, then 3/4 * 1/2 after 3, 0 after 4
    assert curve[1:, 0].tolist() == [1.0, 3.0, 4.0]
    np.testing.assert_allclose(curve[1:, 1], [0.75, 0.375, 0.0], atol=1e-8)


def test_estimate_all_censored(tmp_path):
    data = write(tmp_path, "c.csv", "1,0\n2,0\n5,0\n")
    out = tmp_path / "o"
    assert main(["estimate", "--input", data, "--weight", '{"kind":"Constant","c":1}',
                 "--out", str(out)]) == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["pi"][-1] == pytest.approx(1.0, abs=1e-6)
    assert fit["support"][-1] == 5.0


def test_estimate_non_convergence_exit_code(tmp_path):
    data = write(tmp_path, "d.csv", "1,1\n0.5,0\n")
    rc = main(["estimate", "--input", data, "--weight", '{"kind":"Linear"}',
               "--out", str(tmp_path / "o"), "--max-iter", "2", "--loglik-trace"])
    assert rc == 2
    assert "loglik_trace" in json.loads((tmp_path / "o" / "fit.json").read_text())


def test_estimate_input_errors(tmp_path):
    data = write(tmp_path, "d.csv", "0.5,1\n2,1\n")
    w = '{"kind":"TruncatedInterval","alpha":1,"beta":3}'
    assert main(["estimate", "--input", data, "--weight", w, "--out", str(tmp_path / "o")]) == 3
    bad = write(tmp_path, "bad.csv", "x,1\n")
    assert main(["estimate", "--input", bad, "--weight", '{"kind":"Linear"}',
                 "--out", str(tmp_path / "o")]) == 3
    assert main(["estimate", "--input", data, "--weight", '{"kind": "Linear"',
                 "--out", str(tmp_path / "o")]) == 3


def test_estimate_age_residual(tmp_path):
    data = write(tmp_path, "a.csv", "age,residual,status\n1,2,1\n0.5,0.5,0\n2,0.2,1\n")
    out = tmp_path / "o"
    assert main(["estimate", "--input", data, "--format", "age-residual",
                 "--weight", '{"kind":"Linear"}', "--out", str(out)]) == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["support"] == [1.0, 2.2, 3.0]


def test_ple_exit_codes(tmp_path, capsys):
    degenerate = write(tmp_path, "g.csv", "0.5,1,1\n1.5,2,1\n")
    assert main(["ple", "--input", degenerate, "--out", str(tmp_path / "a")]) == 4
    assert "degenerate" in capsys.readouterr().err
    plain = write(tmp_path, "p.csv", "0,1,1\n0,2,0\n")
    assert main(["ple", "--input", plain, "--out", str(tmp_path / "b")]) == 0
    curve = read_curve(tmp_path / "b" / "survival.csv")
    assert curve[1].tolist() == [1.0, 0.5]
    none = write(tmp_path, "n.csv", "0,1,0\n0,2,0\n")
    assert main(["ple", "--input", none, "--out", str(tmp_path / "c")]) == 3


def test_simulate_is_deterministic(tmp_path):
    cfg = str(CONFIGS / "simulate_left_truncated.json")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("data.csv", "report.json", "resolved_config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    first = (tmp_path / "a" / "data.csv").read_text().splitlines()[0]
    assert first == "entry,exit,status"


def test_simulate_unattainable_target(tmp_path):
    cfg = json.dumps({"model": "left_truncated", "g": {"family": "exponential", "rate": 1},
                      "w": {"family": "exponential", "rate": 1}, "censor_target": 1.0, "n": 5})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_simulate_cross_sectional_format(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(CONFIGS / "simulate_cross_sectional.json"),
                 "--out", str(out)]) == 0
    rows = (out / "data.csv").read_text().splitlines()
    assert rows[0] == "age,residual,status" and len(rows) == 201
    arr = parse_dataset(str(out / "data.csv"), "age-residual")
    assert arr.shape == (200, 3)


def test_bench_smoke_and_bad_config(tmp_path, capsys):
    out = tmp_path / "b"
    assert main(["bench", "--config", str(CONFIGS / "smoke.json"), "--out", str(out),
                 "--workers", "1"]) == 0
    assert (out / "report.csv").exists() and (out / "report.json").exists()
    bad = write(tmp_path, "bad.json", '{"assumed_w": {"kind": "Linear",}}')
    assert main(["bench", "--config", bad, "--out", str(out)]) == 3
    assert "line 1, column" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biased_npmle", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "estimate" in proc.stdout
