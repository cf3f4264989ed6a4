import os
import subprocess
import sys

import numpy as np
import pytest

from obstacle_mfem.cli import main


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_unknown_example_exits_2(tmp_path):
    rc = main(["membrane", "--example", "nope", "--out", str(tmp_path)])
    assert rc == 2


def test_membrane_run_outputs(tmp_path):
    out = str(tmp_path)
    rc = main(["membrane", "--example", "smooth-square", "--mode", "uniform",
               "--levels", "3", "--initial-subdivisions", "1", "--out", out])
    assert rc == 0
    for name in ("convergence.dat", "errors.dat", "estimators.dat"):
        assert os.path.exists(os.path.join(out, name))
    lines = _read(os.path.join(out, "convergence.dat")).decode().splitlines()
    assert lines[0].startswith("# dofs nelems error_u error_sigma")
    assert len(lines) == 4
    table = np.loadtxt(os.path.join(out, "convergence.dat"))
    assert list(table[:, 1]) == [8.0, 32.0, 128.0]
    # errors and total estimator decrease
    assert (np.diff(table[:, 2]) < 0).all()
    assert (np.diff(table[:, 8]) < 0).all()


def test_repeated_runs_bitwise_identical(tmp_path):
    args = ["membrane", "--example", "lshape-pyramid", "--mode", "adaptive",
            "--levels", "4", "--theta", "0.5"]
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert main(args + ["--out", out]) == 0
        outs.append(out)
    for name in ("convergence.dat", "errors.dat", "estimators.dat"):
        assert _read(os.path.join(outs[0], name)) == _read(
            os.path.join(outs[1], name))


def test_dump_meshes(tmp_path):
    out = str(tmp_path)
    rc = main(["membrane", "--example", "smooth-square", "--levels", "2",
               "--dump-meshes", "--out", out])
    assert rc == 0
    for k in (0, 1):
        mpath = os.path.join(out, "mesh_%03d.txt" % k)
        spath = os.path.join(out, "solution_%03d.txt" % k)
        assert os.path.exists(mpath) and os.path.exists(spath)
        lines = _read(mpath).decode().splitlines()
        nv, ne, nt = map(int, lines[0].split())
        assert len(lines) == 1 + nv + nt
        assert len(_read(spath).decode().splitlines()) == nt


def test_plate_run_outputs(tmp_path):
    out = str(tmp_path)
    rc = main(["plate", "--example", "smooth", "--mode", "uniform",
               "--levels", "2", "--initial-subdivisions", "1", "--out", out])
    assert rc == 0
    table = np.loadtxt(os.path.join(out, "convergence.dat"))
    assert list(table[:, 1]) == [8.0, 32.0]
    assert np.isfinite(table[:, 2]).all()   # exact solution available
    header = _read(os.path.join(out, "convergence.dat")).decode().splitlines()[0]
    assert "error_M" in header


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "obstacle_mfem.cli", "membrane",
         "--example", "smooth-square", "--levels", "1",
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(tmp_path / "convergence.dat")
