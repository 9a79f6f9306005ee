import csv
import io
import json
import subprocess
import sys

import pytest

from otelbaev.cli import parse_f, run


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_profile_constant(capsys):
    assert run(["profile", "--coef", "const:1", "--window", "5", "--n", "11"]) == 0
    out = capsys.readouterr()
    rows = rows_of(out.out)
    assert len(rows) == 11
    assert all(abs(float(r["d"]) - 1) < 1e-12 and abs(float(r["q_star"]) - 1) < 1e-12 for r in rows)
    assert "const:1" in out.err


def test_csv_uses_17_digits(capsys):
    run(["profile", "--coef", "square", "--window", "1", "--n", "3"])
    first = rows_of(capsys.readouterr().out)[0]
    assert float(first["d"]) == float(repr(float(first["d"])))
    assert len(first["d"].replace(".", "").lstrip("0")) >= 15


def test_unknown_coefficient_lists_catalog(capsys):
    assert run(["profile", "--coef", "gauss"]) == 2
    err = capsys.readouterr().err
    for label in ("const:", "square", "example1", "example2"):
        assert label in err


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["profile", "--n", "2"],
    ["profile", "--window", "-1"],
    ["profile", "--exp-cutoff", "3"],
    ["solve", "--coef", "const:1", "--f", "nope"],
    ["solve", "--coef", "const:1", "--p", "0.5"],
    ["kclass", "--coef", "square"],
    ["example1", "--alpha", "0.45", "--beta", "0.04"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_numeric_error(capsys):
    assert run(["profile", "--coef", "const:0", "--n", "5"]) == 3
    assert "numeric error" in capsys.readouterr().err


def test_kernel_equivalence_command_passes(tmp_path, capsys):
    out = tmp_path / "thm33.csv"
    code = run(["verify-thm33", "--coef", "example2", "--window", "20", "--n", "201",
                "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0 and "PASS" in text
    assert len(rows_of(out.read_text())) == 201


def test_verification_failure_exits_one(capsys):
    assert run(["example1", "--alpha", "0.1", "--beta", "0.45", "--n", "21"]) == 1
    assert "FAIL" in capsys.readouterr().err


def test_json_mirrors_csv(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "a.json"
    base = ["cover", "--coef", "example2", "--start", "1", "--cells", "5"]
    assert run(base + ["--out", str(a)]) == 0
    assert run(base + ["--out", str(b), "--format", "json"]) == 0
    capsys.readouterr()
    rows = rows_of(a.read_text())
    doc = json.loads(b.read_text())
    assert doc["columns"] == list(rows[0].keys()) and doc["passed"] is True
    assert len(doc["rows"]) == len(rows) == 5
    center = doc["columns"].index("center")
    assert float(rows[2]["center"]) == doc["rows"][2][center]


@pytest.mark.parametrize("argv", [
    ["profile", "--coef", "example2", "--n", "21", "--spacing", "log", "--window", "50"],
    ["solve", "--coef", "example2", "--f", "gauss", "--theta", "qstar", "--n", "11"],
    ["kclass", "--coef", "example2"],
])
def test_deterministic_output(tmp_path, argv, capsys):
    paths = [tmp_path / "one.csv", tmp_path / "two.csv"]
    for p in paths:
        assert run(argv + ["--out", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_other_subcommands(tmp_path, capsys):
    for argv in (["verify-thm35", "--pair", "exp", "--n", "11"],
                 ["example2", "--n", "21"],
                 ["admissible", "--coef", "const:1", "--p", "2", "--window", "20"]):
        assert run(argv + ["--out", str(tmp_path / "x.csv")]) == 0, argv
    capsys.readouterr()


def test_admissible_window_cutting_family_fails(capsys):
    # window 10 clips the family members centred at +-10, so doubling it moves c
    assert run(["admissible", "--coef", "const:1", "--window", "10"]) == 1


def test_parse_f():
    assert parse_f("ind:0:1").name == "ind[0,1]"
    assert parse_f("gauss:2").support == (-7.0, 11.0)
    assert parse_f("tri").name == "tri@0"


def test_binary_exit_codes(tmp_path):
    def call(*args):
        return subprocess.run([sys.executable, "-m", "otelbaev", *args], capture_output=True,
                              text=True, cwd=tmp_path)
    ok = call("profile", "--coef", "const:1", "--window", "5", "--n", "11")
    assert ok.returncode == 0 and ok.stdout.startswith("x,d,q_star")
    assert call("profile", "--coef", "gauss").returncode == 2
    assert call("--help").returncode == 0
