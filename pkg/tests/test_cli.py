import csv
import io
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from rtk import checks
from rtk import examples as ex
from rtk import io as rio
from rtk.cli import main, parse_deltas
from rtk.errors import ValidationError
from rtk.tensor import PairedTensor, Shape


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def fixture_path(tmp_path):
    p = tmp_path / "example1.json"
    p.write_bytes(ex.fixture_bytes())
    return p


def write_doc(path, kind, tensors, options=None):
    path.write_bytes(rio.serialize(rio.ProblemDocument(kind, tensors, options or {})))
    return path


def test_solve_arte_writes_report_and_history(runner, fixture_path, tmp_path):
    out = tmp_path / "rep.json"
    res = runner.invoke(main, ["solve", "arte", "--input", str(fixture_path), "--output", str(out)])
    assert res.exit_code == 0, res.output
    rep = json.loads(out.read_text())
    assert rep["converged"] and rep["closed_loop_stable"]
    assert rep["residual"] < ex.NEWTON_OPTIONS["eps"]
    assert len(rep["closed_loop_eigenvalues"]) == 6
    rows = list(csv.reader((tmp_path / "rep_history.csv").open()))
    assert rows[0] == ["iteration", "residual", "log10_residual"]
    assert len(rows) == rep["iterations"] + 2
    assert float(rows[-1][1]) == pytest.approx(rep["residual"])


def test_solve_arte_schur_to_stdout(runner, fixture_path):
    res = runner.invoke(main, ["solve", "arte", "--input", str(fixture_path), "--method", "schur"])
    assert res.exit_code == 0
    rep = json.loads(res.stdout)
    assert rep["method"] == "schur" and rep["iterations"] == 0
    e = rio.tensor_from_obj(rep["E"])
    assert np.abs(e.array - ex.example1_published_e().array).max() < 1e-4


def test_solve_arte_zero_g_one_iteration(runner, tmp_path):
    a = -2.0 * PairedTensor.identity((2, 2))
    k = PairedTensor.identity((2, 2))
    p = write_doc(tmp_path / "lyap_like.json", "arte", {"A": a, "G": 0 * k, "K": k})
    res = runner.invoke(main, ["solve", "arte", "--input", str(p), "--inner", "direct"])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.stdout)
    assert rep["iterations"] == 1
    e = rio.tensor_from_obj(rep["E"])
    assert np.allclose(e.unfold(), 0.25 * np.eye(4))


def test_spectrum(runner, fixture_path):
    res = runner.invoke(main, ["spectrum", "--input", str(fixture_path)])
    open_loop = json.loads(res.stdout)
    assert not open_loop["stable"] and len(open_loop["eigenvalues"]) == 6
    res = runner.invoke(main, ["spectrum", "--input", str(fixture_path), "--closed-loop"])
    closed = json.loads(res.stdout)
    assert closed["stable"] and closed["tensor"] == "A - G*E"
    got = np.sort_complex([complex(*z) for z in closed["eigenvalues"]])
    assert np.allclose(got, np.sort_complex(ex.CLOSED_LOOP), atol=1e-3)


def test_lyap_and_sylv(runner, tmp_path):
    a = PairedTensor.fold(np.array([[-1.0, 0.5], [0.0, -2.0]]), Shape((2,), (2,)))
    q = PairedTensor.identity((2,))
    p = write_doc(tmp_path / "l.json", "lyapunov", {"A": a, "Q": q})
    for method in ("direct", "bicg-tensor", "bicg-vec"):
        res = runner.invoke(main, ["solve", "lyap", "--input", str(p), "--method", method])
        assert res.exit_code == 0
        assert json.loads(res.stdout)["residual"] < 1e-8
    s = write_doc(tmp_path / "s.json", "sylvester", {"A": a, "B": a, "K": q}, {"method": "bicg"})
    res = runner.invoke(main, ["solve", "sylv", "--input", str(s)])
    assert res.exit_code == 0 and json.loads(res.stdout)["method"] == "bicg"
    bad = write_doc(tmp_path / "b.json", "lyapunov", {"A": a, "Q": q}, {"method": "lu"})
    assert runner.invoke(main, ["solve", "lyap", "--input", str(bad)]).exit_code == 2


def test_hinf_and_brl(runner, fixture_path):
    res = runner.invoke(main, ["analyze", "hinf", "--input", str(fixture_path), "--closed-loop",
                               "--rel-tol", "1e-6"])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.stdout)
    assert rep["lower"] <= rep["hinf"] <= rep["upper"]
    assert rep["upper"] - rep["lower"] <= 1e-6 * rep["upper"]
    h = rep["hinf"]
    for factor, below in ((1.25, True), (0.8, False)):
        res = runner.invoke(main, ["analyze", "brl", "--input", str(fixture_path), "--closed-loop",
                                   "--gamma", str(factor * h)])
        v = json.loads(res.stdout)
        assert v["consistent"] and v["norm_below_gamma"] is below


def test_precondition_exit_code(runner, fixture_path):
    # the open loop of Example 1 is unstable
    res = runner.invoke(main, ["analyze", "hinf", "--input", str(fixture_path)])
    assert res.exit_code == 3
    assert "error [" in res.stderr


def test_parse_and_validation_exit_codes(runner, tmp_path, fixture_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "arte",\n "tensors": [}')
    res = runner.invoke(main, ["solve", "arte", "--input", str(bad)])
    assert res.exit_code == 2 and "line 2" in res.stderr
    trunc = json.loads(ex.fixture_bytes())
    trunc["tensors"]["E0"]["data"].pop()
    bad.write_text(json.dumps(trunc))
    res = runner.invoke(main, ["solve", "arte", "--input", str(bad)])
    assert res.exit_code == 2 and "tensors.E0.data" in res.stderr
    res = runner.invoke(main, ["solve", "arte", "--input", str(tmp_path / "none.json")])
    assert res.exit_code == 2
    res = runner.invoke(main, ["solve", "arte", "--input", str(fixture_path),
                               "--output", str(tmp_path / "no" / "dir" / "r.json")])
    assert res.exit_code == 2
    res = runner.invoke(main, ["analyze", "brl", "--input", str(fixture_path)])
    assert res.exit_code == 2


def test_convergence_exit_code(runner, fixture_path):
    res = runner.invoke(main, ["solve", "arte", "--input", str(fixture_path), "--eps", "1e-30",
                               "--max-iter", "2", "--inner", "direct"])
    assert res.exit_code == 4


def test_perturb_csv_and_seed(runner, fixture_path, tmp_path, monkeypatch):
    args = ["analyze", "perturb", "--input", str(fixture_path), "--deltas", "1e-8,2e-7", "--trials", "2"]
    first = tmp_path / "a.csv"
    monkeypatch.setenv("RTK_SEED", "17")
    res = runner.invoke(main, args + ["--csv", str(first)])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.stdout)
    assert rep["seed"] == 17 and rep["samples"] == 4 and rep["failed_samples"] == 0
    assert rep["kappa_upper"][0] == pytest.approx(ex.KAPPA[0], rel=1e-4)
    assert rep["max_error_to_bound"] <= 1.1
    second = tmp_path / "b.csv"
    runner.invoke(main, args + ["--csv", str(second)])
    assert first.read_bytes() == second.read_bytes()
    third = tmp_path / "c.csv"
    runner.invoke(main, args + ["--csv", str(third), "--seed", "18"])
    assert third.read_bytes() != first.read_bytes()
    header = next(csv.reader(io.StringIO(first.read_text())))
    assert header[:3] == ["delta", "trial", "dE_norm"]
    res = runner.invoke(main, args + ["--g-index", "9,1,1,1"])
    assert res.exit_code == 2


def test_parse_deltas():
    assert parse_deltas("example1")[0] == 1e-8 and len(parse_deltas("example1")) == 99
    assert parse_deltas("0:1:3") == (0.0, 0.5, 1.0)
    assert parse_deltas(" 1e-3, 2e-3 ") == (1e-3, 2e-3)
    for bad in ("x", "-1", "nan", "1:2"):
        with pytest.raises(ValidationError):
            parse_deltas(bad)


def test_demo_check_passes(runner, tmp_path):
    res = runner.invoke(main, ["demo", "example1", "--check", "--output-dir", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "9/9 checks passed" in res.stdout
    assert res.stdout.count("[PASS]") == 9
    assert (tmp_path / "example1_report.json").exists()
    assert (tmp_path / "example1_history.csv").exists()


def test_demo_check_failure_exit_code(runner, monkeypatch):
    def failing(progress=None):
        c = checks.Check(1, "forced", False, "injected failure")
        if progress:
            progress(c)
        return [c]

    monkeypatch.setattr(checks, "run_all", failing)
    res = runner.invoke(main, ["demo", "example1", "--check"])
    assert res.exit_code == 5
    assert "[FAIL] criterion 1" in res.stdout


@pytest.mark.skipif(shutil.which("rtk") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["rtk", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("solve", "analyze", "spectrum", "demo"):
        assert cmd in res.stdout


def test_module_entry():
    res = subprocess.run([sys.executable, "-m", "rtk.cli", "solve", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "arte" in res.stdout
