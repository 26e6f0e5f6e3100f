import csv
import io
import json
import math

import numpy as np
import pytest

from fracdiff import cli
from fracdiff.fdsolver import ProblemSpec, solve_l1
from fracdiff.fracops import TimeGrid
from fracdiff.fullspace import invert_Z
from fracdiff.probe import critical_exponent
from fracdiff.spectral import IntervalDomain

CONFIG = """\
[problem]
alpha = 0.5
L = 1
M = 20
N = 30
T = 0.5
[coefficients]
A = checkerboard:7
[data]
u0 = bump
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "p.ini"
    path.write_text(CONFIG)
    return path


# --- usage and exit codes --------------------------------------------------------

def test_mlf_eval_alpha_one_closed_form(capsys):
    code, out, _ = run(capsys, "mlf", "eval", "--alpha", "1", "--mu", "2", "--t", "3")
    assert code == 0
    assert out.splitlines()[0] == "alpha,mu,t,s"
    assert float(rows(out)[0]["s"]) == pytest.approx(math.exp(-6), rel=1e-11)


def test_mlf_bounds_columns_and_sandwich(capsys):
    _, out, _ = run(capsys, "mlf", "eval", "--alpha", "0.5", "--mu", "2", "--t", "0.5,1,3", "--bounds")
    recs = rows(out)
    assert list(recs[0]) == ["alpha", "mu", "t", "s", "lower", "upper"]
    for r in recs:
        assert float(r["lower"]) <= float(r["s"]) <= float(r["upper"])


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["mlf", "eval", "--alpha", "1", "--mu", "2", "--t", "3", "--nope"],
    ["mlf", "eval", "--alpha", "1"],
    ["mlf", "eval", "--alpha", "2", "--mu", "1", "--t", "1"],
    ["mlf", "eval", "--alpha", "0.5", "--mu", "1", "--t", "1,x"],
    ["harnack", "--alpha", "0.5", "--dim", "2"],
    ["harnack", "--alpha", "0.5", "--p-grid", "abc"],
    ["holder", "--config", "missing.ini", "--q", "0,1,0,1", "--beta1", "0.1", "--beta2", "0.1"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_json_mirrors_csv(capsys):
    argv = ["mlf", "eval", "--alpha", "0.3", "--mu", "5", "--t", "0,0.1,2", "--bounds"]
    _, out_csv, _ = run(capsys, *argv)
    _, out_json, _ = run(capsys, *argv, "--json")
    doc = json.loads(out_json)
    table = list(csv.reader(io.StringIO(out_csv)))
    assert doc["columns"] == table[0]
    for jrow, crow in zip(doc["rows"], table[1:]):
        for j, c in zip(jrow, crow):
            assert (j is None and c == "nan") or j == float(c)


def test_floats_have_twelve_significant_digits(capsys):
    _, out, _ = run(capsys, "mlf", "eval", "--alpha", "0.5", "--mu", "1", "--t", "1")
    s = rows(out)[0]["s"]
    assert len(s.replace("0.", "", 1).lstrip("0")) == 12


# --- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("text,needle", [
    (CONFIG.replace("T = 0.5", "T = 0.5\nfoo = 3"), ":7: unknown key 'foo'"),
    (CONFIG + "[extra]\nx = 1\n", "unknown section [extra]"),
    (CONFIG.replace("M = 20", "M = twenty"), ":4: bad value for 'M'"),
    (CONFIG.replace("checkerboard:7", "marble"), ":8: A must be"),
    (CONFIG.replace("u0 = bump", "u0 = square"), ":10: u0 must be"),
    (CONFIG.replace("M = 20\n", ""), "missing required key 'M'"),
    ("alpha = 0.5\n", "malformed config"),
    (CONFIG + "alpha = 0.7\n", ":11: unknown key 'alpha' in [data]"),
    (CONFIG.replace("L = 1", "L = 1\nL = 2"), "malformed config"),
])
def test_malformed_config_diagnostics(capsys, tmp_path, text, needle):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    code, _, err = run(capsys, "solve", "--config", str(path))
    assert code == 2
    assert needle in err


def test_solve_outputs(capsys, config, tmp_path):
    field = tmp_path / "u.csv"
    code, out, _ = run(capsys, "solve", "--config", str(config), "--out", str(field))
    assert code == 0
    summary = rows(out)
    assert len(summary) == 31
    assert all(float(r["margin"]) <= 1e-12 for r in summary)
    u = rows(field.read_text())
    assert list(u[0]) == ["t", "x", "u"] and len(u) == 31 * 21
    assert float(u[-1]["t"]) == 0.5 and float(u[-1]["x"]) == 1.0


def test_solve_byte_identical_and_seeded_default(capsys, config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "solve", "--config", str(config), "--out", str(a))
    run(capsys, "solve", "--config", str(config), "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    # checkerboard without a seed uses --seed (default 42)
    config.write_text(CONFIG.replace("checkerboard:7", "checkerboard"))
    _, s42, _ = run(capsys, "solve", "--config", str(config))
    _, s42b, _ = run(capsys, "solve", "--config", str(config), "--seed", "42")
    _, s7, _ = run(capsys, "solve", "--config", str(config), "--seed", "7")
    assert s42 == s42b and s42 != s7


def test_solve_matches_library_with_file_datum(capsys, tmp_path):
    x = np.linspace(0, 1, 21)
    u0 = np.sin(np.pi * x) * (1 + x)
    u0[[0, -1]] = 0.0
    np.savetxt(tmp_path / "u0.csv", u0, delimiter=",")
    cfg = tmp_path / "p.ini"
    cfg.write_text(CONFIG.replace("checkerboard:7", "const:0.7").replace("bump", "file:u0.csv"))
    field = tmp_path / "u.csv"
    run(capsys, "solve", "--config", str(cfg), "--out", str(field))
    got = np.array([float(r["u"]) for r in rows(field.read_text())]).reshape(31, 21)
    sp = ProblemSpec(0.5, IntervalDomain(1.0), 20, TimeGrid(0.5, 30, 3.0), A=0.7, u0=u0)
    assert np.max(np.abs(got - solve_l1(sp).u)) <= 1e-11


def test_solve_without_envelope_reports_nan(capsys, config):
    config.write_text(CONFIG.replace("[data]", "c = 1\n[data]"))
    code, out, _ = run(capsys, "solve", "--config", str(config), "--scheme", "volterra", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["rows"][3][2] is None


# --- other subcommands -----------------------------------------------------------

@pytest.mark.parametrize("check", ["fundamental", "convex", "l2norm"])
def test_identity(capsys, check):
    code, out, _ = run(capsys, "identity", "--check", check, "--n", "64", "--seed", "3")
    recs = rows(out)
    assert code == 0 and list(recs[0]) == ["node", "lhs", "rhs", "gap"] and len(recs) == 63
    gaps = np.array([float(r["gap"]) for r in recs])
    if check == "fundamental":
        assert np.max(np.abs(gaps)) <= 1e-3
    else:
        assert gaps.min() >= -1e-10
    _, again, _ = run(capsys, "identity", "--check", check, "--n", "64", "--seed", "3")
    _, other, _ = run(capsys, "identity", "--check", check, "--n", "64", "--seed", "4")
    assert again == out and other != out


def test_spectral_phi1_equality(capsys):
    code, out, _ = run(capsys, "spectral", "--alpha", "0.5", "--L", "2", "--u0", "phi1",
                       "--times", "0,0.5,3")
    assert code == 0
    assert all(abs(float(r["margin"])) <= 1e-12 for r in rows(out))


def test_spectral_file_datum(capsys, tmp_path):
    x = np.linspace(0, math.pi, 129)
    np.savetxt(tmp_path / "s.csv", x * (math.pi - x), delimiter=",")
    code, out, _ = run(capsys, "spectral", "--alpha", "0.7", "--u0", "file", "--u0-file",
                       str(tmp_path / "s.csv"), "--modes", "64", "--times", "1")
    assert code == 0 and float(rows(out)[0]["margin"]) < 0
    assert run(capsys, "spectral", "--alpha", "0.7", "--u0", "file", "--times", "1")[0] == 2


def test_decay_and_kernel(capsys):
    code, out, err = run(capsys, "decay", "--alpha", "0.5", "--dim", "2", "--points", "5")
    assert code == 0 and len(rows(out)) == 5 and "slope" in err
    code, out, _ = run(capsys, "kernel", "--alpha", "0.5", "--dim", "1", "--rmax", "2", "--points", "5")
    recs = rows(out)
    ref = invert_Z(0.5, 1, 1.0, [float(r["r"]) for r in recs]).Z
    assert code == 0 and np.allclose([float(r["Z"]) for r in recs], ref, rtol=1e-11)
    _, out, _ = run(capsys, "kernel", "--alpha", "0.5", "--dim", "3", "--rmax", "1", "--points", "4")
    assert float(rows(out)[0]["r"]) == 0.25


def test_harnack(capsys):
    code, out, _ = run(capsys, "harnack", "--alpha", "0.5", "--family", "spectral",
                       "--p-grid", "0.5pc,1.3", "--r-grid", "1,0.5")
    recs = rows(out)
    assert code == 0 and len(recs) == 4
    assert float(recs[0]["p"]) == pytest.approx(0.5 * critical_exponent(0.5, 1), rel=1e-11)
    assert [float(r["r"]) for r in recs] == [0.5, 1.0, 0.5, 1.0]
    assert all(float(r["ratio"]) > 0 for r in recs)


def test_holder(capsys, config):
    code, out, _ = run(capsys, "holder", "--config", str(config), "--q", "0.1,0.5,0.25,0.75",
                       "--beta1", "0.025", "--beta2", "0.1")
    assert code == 0 and float(rows(out)[0]["seminorm"]) > 0
    assert run(capsys, "holder", "--config", str(config), "--q", "0,1", "--beta1", "0.1",
               "--beta2", "0.1")[0] == 2


def test_verify_quick(capsys, monkeypatch):
    monkeypatch.setenv("FRACDIFF_THREADS", "2")
    code, out, _ = run(capsys, "verify", "--suite", "quick")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 7 and all(s.startswith("[PASS]") for s in lines)


def test_verify_failure_exit_1(capsys, monkeypatch):
    from fracdiff import acceptance
    monkeypatch.setattr(acceptance, "QUICK", (2,))
    monkeypatch.setitem(acceptance.CRITERIA, 2, ("forced", lambda: (False, "x")))
    code, out, _ = run(capsys, "verify", "--suite", "quick")
    assert code == 1 and out.startswith("[FAIL]  2 forced")


def test_config_inline_comments(capsys, config):
    config.write_text(CONFIG.replace("M = 20", "M = 20   # cells").replace("bump", "bump ; datum"))
    code, out, _ = run(capsys, "solve", "--config", str(config))
    assert code == 0 and len(rows(out)) == 31
