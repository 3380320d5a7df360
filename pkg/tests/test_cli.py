from __future__ import annotations

import csv
import io
import json

import pytest

from rpzf import cli
from rpzf.errors import NumericalError, ParseError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_grid_parsing():
    g = cli.parse_grid("0.05:0.95:0.05")
    assert len(g) == 19 and g[0] == 0.05 and g[-1] == 0.95
    assert cli.parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert cli.parse_grid("0.5:0.5:0.1") == [0.5]
    for bad in ("0.1:0.3", "a:b:c", "0.3:0.1:0.1", "0.1:0.3:0"):
        with pytest.raises(ParseError):
            cli.parse_grid(bad)


def test_analyze_k3(capsys):
    code, out, _ = run(capsys, "analyze", "--family", "complete:3", "--p", "0.6",
                       "--variant", "darpzf")
    assert code == 0
    r = rows(out)[0]
    assert r["state_index"] == "1"
    assert abs(float(r["c_die"]) - 0.5) < 1e-6 and abs(float(r["c_force"]) - 0.5) < 1e-6


def test_analyze_grid_sorted(capsys, tmp_path):
    out = tmp_path / "k32.csv"
    code, _, _ = run(capsys, "analyze", "--family", "complete:32", "--p-grid", "0.05:0.95:0.05",
                     "--variant", "darpzf", "--start", "0", "--out", str(out))
    assert code == 0
    data = rows(out.read_text())
    assert [float(r["p"]) for r in data] == sorted(float(r["p"]) for r in data)
    assert len(data) == 19
    man = json.loads((tmp_path / "k32.csv.manifest.json").read_text())
    assert man["command"] == "analyze" and man["outputs"] == [str(out)]
    assert man["params"]["p_grid"] == "0.05:0.95:0.05"
    assert {"version", "timestamp", "seeds"} <= set(man)


def test_analyze_sarpzf_full_mode(capsys):
    code, out, _ = run(capsys, "analyze", "--family", "cycle:4", "--p", "0.5",
                       "--variant", "sarpzf", "--mode", "full")
    data = rows(out)
    assert code == 0 and len(data) == 15
    assert data[0]["c_die"] == ""


@pytest.mark.parametrize("argv, code", [
    (["analyze", "--edge-list", "EDGES", "--p", "1.5"], 3),
    (["analyze", "--edge-list", "BROKEN", "--p", "0.5"], 2),
    (["analyze", "--edge-list", "MISSING", "--p", "0.5"], 2),
    (["analyze", "--family", "cycle:20", "--p", "0.5", "--mode", "full"], 4),
    (["analyze", "--family", "cycle:5", "--p", "0.5", "--mode", "collapsed"], 3),
    (["analyze", "--family", "complete:4"], 2),
    (["analyze", "--family", "complete:4", "--p", "0.5", "--state", "0"], 3),
    (["critical-p", "--family", "complete:4", "--state", "9"], 3),
    (["meanfield", "--family", "cycle:13", "--model", "sarpzf", "--p", "0.5"], 4),
    (["simulate", "--family", "complete:4", "--p", "0.5", "--start", "x"], 2),
])
def test_exit_codes(capsys, tmp_path, argv, code):
    (tmp_path / "e.txt").write_text("3\n0 1\n1 2\n")
    (tmp_path / "b.txt").write_text("3\n0 1 1\n")
    subs = {"EDGES": tmp_path / "e.txt", "BROKEN": tmp_path / "b.txt",
            "MISSING": tmp_path / "nope.txt"}
    argv = [str(subs.get(a, a)) for a in argv]
    got, _, err = run(capsys, *argv)
    assert got == code
    assert err.startswith("rpzf: error:")


def test_numerical_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("stalled")
    monkeypatch.setattr(cli, "critical_reversion_probability", boom)
    code, _, _ = run(capsys, "critical-p", "--family", "complete:4")
    assert code == 5


def test_unknown_flag_is_an_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["analyze", "--family", "complete:4", "--p", "0.5", "--bogus"])
    assert info.value.code == 2


@pytest.mark.parametrize("sub, flags", [
    ("analyze", ["--family", "--edge-list", "--variant", "--p", "--p-grid", "--mode", "--state",
                 "--out", "--format"]),
    ("simulate", ["--seed", "--trials", "--max-rounds", "--start", "--workers"]),
    ("threshold", ["--metric", "--n-grid", "--exponent", "--offset", "--rule"]),
    ("meanfield", ["--model", "--beta", "--horizon", "--per-vertex"]),
    ("pmf", ["--n", "--b", "--k", "--formula"]),
    ("critical-p", ["--tol", "--scan"]),
])
def test_help_documents_flags(capsys, sub, flags):
    with pytest.raises(SystemExit):
        cli.main([sub, "--help"])
    text = capsys.readouterr().out
    for f in flags:
        assert f in text


@pytest.mark.parametrize("n, expected, tol", [(7, 0.427101, 1e-5), (22, 0.436346, 1e-5),
                                              (64, 0.4379, 1e-4)])
def test_critical_p(capsys, n, expected, tol):
    code, out, _ = run(capsys, "critical-p", "--family", f"complete:{n}")
    assert code == 0
    assert abs(float(out.strip()) - expected) <= tol


def test_simulate_reproducible(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    path = tmp_path / "s.json"
    outputs = []
    for _ in range(2):
        run(capsys, "simulate", "--family", "cycle:32", "--start", "0", "--variant", "darpzf",
            "--trials", "300", "--p-grid", "0.3:0.5:0.1", "--seed", "42", "--format", "json",
            "--out", str(path))
        outputs.append((path.read_bytes(), (tmp_path / "s.json.manifest.json").read_bytes()))
    assert outputs[0] == outputs[1]
    doc = json.loads(path.read_text())
    assert [r["p"] for r in doc["rows"]] == [0.3, 0.4, 0.5]
    assert doc["manifest"]["seeds"] == [42]
    assert doc["rows"][0]["trials"] == 300


def test_simulate_csv_columns(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "star:6", "--p", "0.5", "--trials", "50")
    header = out.splitlines()[0].split(",")
    assert header[:8] == ["p", "die_out_fraction", "se_die_out", "mean_abs_time", "se_abs_time",
                          "censored_count", "trials", "seed"]


def test_threshold(capsys):
    code, out, _ = run(capsys, "threshold", "--family", "complete", "--n-grid",
                       "100,1000,10000,100000", "--exponent", "0.5")
    vals = [float(r["metric_value"]) for r in rows(out)]
    assert code == 0 and vals[-1] > 10 and vals == sorted(vals)
    code, out, _ = run(capsys, "threshold", "--family", "star", "--n-grid", "100000",
                       "--offset", "2")
    assert abs(float(rows(out)[0]["metric_value"]) - 3.0) < 0.01


def test_meanfield(capsys):
    code, out, _ = run(capsys, "meanfield", "--family", "complete:5", "--model", "sarpzf",
                       "--p", "0.9", "--horizon", "4", "--per-vertex")
    data = rows(out)
    assert code == 0 and len(data) == 5
    assert float(data[0]["rho"]) == 0.2 and data[0]["p_0"] == "1.0"


def test_pmf(capsys):
    code, out, _ = run(capsys, "pmf", "--n", "6", "--b", "2", "--p", "0.4", "--variant", "darpzf")
    data = rows(out)
    assert code == 0 and len(data) == 7
    assert sum(float(r["pmf"]) for r in data) == pytest.approx(1.0, abs=1e-12)
    code, out1, _ = run(capsys, "pmf", "--n", "6", "--b", "2", "--p", "0.4", "--formula", "1")
    code, out2, _ = run(capsys, "pmf", "--n", "6", "--b", "2", "--p", "0.4", "--formula", "2")
    for a, b in zip(rows(out1), rows(out2)):
        assert float(a["pmf"]) == pytest.approx(float(b["pmf"]), abs=1e-12)
