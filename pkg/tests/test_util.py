import json
import math
import os
from pathlib import Path

import numpy as np
from hessenv.dirs import get_runs_dir, new_run_dir
from hessenv.report import sanitize, strip_volatile, write_report, write_residual_history
from hessenv.solver import SolveReport
from hessenv.util import path_with_tilde, timed


def test_path_with_tilde():
    home = os.path.expanduser("~")
    assert path_with_tilde(Path(home) / "runs") == "~/runs"
    assert path_with_tilde(Path("/tmp/x")) == "/tmp/x"


def test_timed():
    timings: dict[str, float] = {}
    with timed(timings, "a"):
        pass
    with timed(timings, "a"):
        pass
    assert set(timings) == {"a"}
    assert timings["a"] >= 0.0


def test_sanitize():
    out = sanitize(
        {
            "inf": math.inf,
            "ninf": -math.inf,
            "nan": float("nan"),
            "arr": np.array([1.5, 2.5]),
            "flag": np.bool_(True),
            "count": np.int64(3),
            "tuple": (1, 2),
            "path": Path("/tmp/x"),
        }
    )
    assert out == {
        "inf": "inf",
        "ninf": "-inf",
        "nan": "nan",
        "arr": [1.5, 2.5],
        "flag": True,
        "count": 3,
        "tuple": [1, 2],
        "path": "/tmp/x",
    }
    json.dumps(out)


def test_strip_volatile():
    report = {"timings": {"solve": 1.0}, "solve_report": {"wall_time": 2.0, "iterations": 3}}
    assert strip_volatile(report) == {"solve_report": {"iterations": 3}}


def test_write_report(tmp_path):
    path = write_report(tmp_path, {"b": math.inf, "a": [1, 2]})
    assert json.loads(path.read_text()) == {"a": [1, 2], "b": "inf"}


def test_write_residual_history(tmp_path):
    report = SolveReport(
        residual_history=[1.0, 0.1, 1e-3],
        cone_margin_history=[1.0, 0.9, 0.8],
        step_lengths=[1.0, 0.5],
        krylov_iterations=[4, 6],
    )
    lines = write_residual_history(tmp_path, report).read_text().splitlines()
    assert lines[0] == "iteration,residual,cone_margin,step,krylov"
    assert lines[1] == "0,1.0,1.0,,"
    assert lines[3] == "2,0.001,0.8,0.5,6"


def test_runs_dir(monkeypatch, tmp_path):
    monkeypatch.setenv("HESSENV_OUTPUT_DIR", str(tmp_path / "runs"))
    assert get_runs_dir() == tmp_path / "runs"
    path = new_run_dir("solve")
    assert path.parent == tmp_path / "runs"
    assert path.name.endswith("-solve")
    assert path.is_dir()
