import csv
import json
import subprocess
import sys

import pytest

from evolsolve import records
from evolsolve.canon import CANON1_CONFIG, CANON_NA_CONFIG
from evolsolve.cli import main
from evolsolve.config import load_config

SMALL_NA = CANON_NA_CONFIG.replace("grid.n_cells = 64", "grid.n_cells = 16").replace(
    "grid.n_steps = 1000", "grid.n_steps = 100"
)
SMALL_1 = CANON1_CONFIG.replace("grid.n_cells = 64", "grid.n_cells = 16").replace(
    "grid.n_steps = 1000", "grid.n_steps = 100"
)


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(tmp_path, command, text, *extra, out="out"):
    cfg = _write(tmp_path, text)
    out_dir = tmp_path / out
    status = main([command, "--config", cfg, "--out", str(out_dir), *extra])
    return status, out_dir


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _summary(out_dir):
    return json.loads((out_dir / "summary.json").read_text())


def test_check_compatible(tmp_path, capsys):
    status, out = _run(tmp_path, "check", SMALL_1)
    assert status == 0
    rows = _csv(out / "compat.csv")
    assert [r["regime"] for r in rows] == ["pointwise", "pointwise"]
    assert list(rows[0]) == list(records.COMPAT_COLUMNS)
    assert "regime=pointwise" in capsys.readouterr().out


def test_check_integral_regime(tmp_path):
    text = (
        "problem.q = 3\nproblem.u0 = sin(pi*x)\nright.kind = robin\nright.alpha = 0\nright.beta = 1\n"
        "right.g = -pi + t\ngrid.n_cells = 16\ngrid.n_steps = 50\n"
    )
    status, out = _run(tmp_path, "check", text)
    assert status == 0
    rows = _csv(out / "compat.csv")
    assert [r["regime"] for r in rows] == ["pointwise", "integral"]


def test_incompatible_data_exit_1(tmp_path):
    text = "problem.u0 = 1 - x\ngrid.n_cells = 16\ngrid.n_steps = 50\n"
    status, out = _run(tmp_path, "solve", text)
    assert status == 1
    summary = _summary(out)
    assert summary["status"] == "failed"
    assert summary["error"]["type"] == "IncompatibleData"
    assert _csv(out / "compat.csv")[0]["passed"] == "false"
    status, _ = _run(tmp_path, "check", text, out="out2")
    assert status == 1


def test_config_errors_exit_2(tmp_path, capsys):
    status, _ = _run(tmp_path, "solve", "problem.q = 0.5\nsolver.tol = 0\n")
    assert status == 2
    err = capsys.readouterr().err
    assert "q must exceed 1" in err and "tol must be positive" in err
    status, _ = _run(tmp_path, "solve", "garbage line\n")
    assert status == 2
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2
    status, _ = _run(tmp_path, "solve", "problem.a = -1\ngrid.n_cells = 8\ngrid.n_steps = 4\n")
    assert status == 2
    status, _ = _run(tmp_path, "study", SMALL_1)
    assert status == 2


def test_solve_outputs(tmp_path):
    status, out = _run(tmp_path, "solve", SMALL_NA)
    assert status == 0
    rows = _csv(out / "report.csv")
    assert list(rows[0]) == list(records.REPORT_COLUMNS)
    assert rows[-1]["row"] == "summary"
    assert all(r["schema"] == "1" for r in rows)
    assert float(rows[-1]["error"]) < 1e-2
    sol = _csv(out / "solution.csv")
    assert list(sol[0]) == list(records.SOLUTION_COLUMNS)
    assert len(sol) == 101 * 17
    summary = _summary(out)
    assert summary["schema"] == 1 and summary["status"] == "ok"


def test_solve_is_deterministic(tmp_path):
    _, out1 = _run(tmp_path, "solve", SMALL_NA, "--seed", "4", out="a")
    _, out2 = _run(tmp_path, "solve", SMALL_NA, "--seed", "4", out="b")
    for name in ("report.csv", "solution.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_effective_config_round_trip(tmp_path):
    status, out = _run(tmp_path, "solve", SMALL_NA, "--seed", "11")
    assert status == 0
    cfg = load_config(out / "effective.cfg")
    assert cfg["run.seed"] == 11
    assert cfg["output.dir"] == str(out)
    original = load_config(tmp_path / "run.cfg").with_overrides(run__seed=11, output__dir=str(out))
    assert cfg == original


def test_diagnose(tmp_path):
    status, out = _run(tmp_path, "diagnose", SMALL_NA, "--theta0", "2.0")
    assert status == 0
    sector = _csv(out / "sector.csv")
    assert sector[-1]["row"] == "global"
    assert float(sector[0]["theta0"]) == 2.0
    assert {r["component"] for r in _csv(out / "moduli.csv")} == {"A", "B", "Q"}
    maxreg = _csv(out / "maxreg.csv")
    assert list(maxreg[0]) == list(records.MAXREG_COLUMNS)
    assert len(maxreg) == 5 * 6


def test_study(tmp_path):
    text = SMALL_1.replace("problem.f = (pi^2 - 1)*exp(-t)*sin(pi*x)\nproblem.u0 = sin(pi*x)\n", "")
    text += "problem.exact = exp(-t)*sin(pi*x)\nrun.study = both\n"
    status, out = _run(tmp_path, "study", text, "--refinements", "2")
    assert status == 0
    rows = _csv(out / "study.csv")
    assert [r["kind"] for r in rows] == ["time", "time", "space", "space"]
    assert set(_summary(out)["orders"]) == {"time", "space"}


def test_bench_columns(tmp_path):
    status, out = _run(tmp_path, "bench", SMALL_NA.replace("solver.tol = 1e-10", "solver.windows = 2"))
    assert status == 0
    (row,) = _csv(out / "bench.csv")
    assert list(row) == list(records.BENCH_COLUMNS)
    assert int(row["windows"]) == 2
    assert int(row["factorizations_contraction"]) < int(row["factorizations_direct"]) == 100
    assert float(row["max_abs_diff"]) < 1e-6


def test_console_script(tmp_path):
    cfg = _write(tmp_path, SMALL_1)
    out = tmp_path / "o"
    proc = subprocess.run(
        [sys.executable, "-m", "evolsolve.cli", "check", "--config", cfg, "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (out / "compat.csv").exists()
    proc = subprocess.run([sys.executable, "-m", "evolsolve.cli", "frobnicate", "--config", cfg], capture_output=True)
    assert proc.returncode == 2
