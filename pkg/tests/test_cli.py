import json
import subprocess
import sys

import numpy as np
import pytest

from groupl0 import io
from groupl0.cli import main
from groupl0.groups import build_partition


def test_file_roundtrips(tmp_path, rng):
    A = rng.standard_normal((4, 3))
    io.write_matrix(tmp_path / "m.csv", A)
    assert np.array_equal(io.read_matrix(tmp_path / "m.csv"), A)
    part = build_partition([2, 1, 3])
    io.write_partition(tmp_path / "p.csv", part)
    assert (tmp_path / "p.csv").read_text() == "2,1,3\n"
    assert io.read_partition(tmp_path / "p.csv") == part
    v = rng.standard_normal(5)
    io.write_vector(tmp_path / "v.csv", v)
    assert np.array_equal(io.read_vector(tmp_path / "v.csv"), v)
    io.write_vector(tmp_path / "one.csv", [2.5])
    assert io.read_vector(tmp_path / "one.csv").tolist() == [2.5]


@pytest.fixture
def instance_dir(tmp_path):
    out = tmp_path / "inst"
    main(["gen", "--n", "60", "--N", "30", "--T", "3", "--s", "4", "--theta", "1",
          "--sigma", "1e-3", "--seed", "9", "--out", str(out)])
    return out


def test_gen_writes_files(instance_dir):
    for name in ("design.csv", "partition.csv", "y.csv", "x_true.csv", "instance.json"):
        assert (instance_dir / name).exists()
    meta = json.loads((instance_dir / "instance.json").read_text())
    assert len(meta["true_active"]) == 3
    assert io.read_matrix(instance_dir / "design.csv").shape == (60, 120)


def test_solve_cli(instance_dir, capsys):
    meta = json.loads((instance_dir / "instance.json").read_text())
    out = instance_dir / "x.csv"
    log = instance_dir / "path.csv"
    capsys.readouterr()
    main(["solve", "--design", str(instance_dir / "design.csv"),
          "--partition", str(instance_dir / "partition.csv"), "--data", str(instance_dir / "y.csv"),
          "--eps", str(meta["noise_norm"]), "--out", str(out), "--path-log", str(log)])
    summary = json.loads(capsys.readouterr().out)
    assert summary["termination"] == "discrepancy-met"
    assert summary["active"] == meta["true_active"]
    x = io.read_vector(out)
    xt = io.read_vector(instance_dir / "x_true.csv")
    assert np.linalg.norm(x - xt) / np.linalg.norm(xt) < 1e-2
    lines = log.read_text().splitlines()
    assert lines[0] == "s,lambda,residual,n_active,inner_iters,time_ms"
    assert len(lines) >= 3


def test_gomp_cli(instance_dir, capsys):
    meta = json.loads((instance_dir / "instance.json").read_text())
    capsys.readouterr()
    main(["gomp", "--design", str(instance_dir / "design.csv"),
          "--partition", str(instance_dir / "partition.csv"), "--data", str(instance_dir / "y.csv"),
          "--eps", str(meta["noise_norm"]), "--selection", "transformed",
          "--out", str(instance_dir / "xg.csv")])
    summary = json.loads(capsys.readouterr().out)
    assert summary["active"] == meta["true_active"]


def test_bmc_cli(instance_dir, capsys):
    capsys.readouterr()
    main(["bmc", "--design", str(instance_dir / "design.csv"),
          "--partition", str(instance_dir / "partition.csv"),
          "--pairwise-csv", str(instance_dir / "pw.csv")])
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) >= {"mc", "bmc", "assumption_T_max"}
    assert 0 < rep["bmc"] <= 1
    pw = io.read_matrix(instance_dir / "pw.csv")
    assert pw.shape == (30, 30) and np.allclose(np.diag(pw), 1.0)


def test_bench_cli_bit_identical(tmp_path):
    cfg = {"params": {"n": 40, "N": 20, "s": 4, "T": [2, 4], "theta": 1.0}, "trials": 2,
           "solvers": ["gpdasc", "gomp"], "seed": 17}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    for d in ("r1", "r2"):
        main(["bench", "--config", str(path), "--out-dir", str(tmp_path / d)])
    for name in ("trials.csv", "summary.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "groupl0", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("gen", "solve", "gomp", "bmc", "bench"):
        assert cmd in res.stdout
