import json
import socket
import subprocess
import sys

import numpy as np
import pytest

from tmpc import models
from tmpc.cli import bench_conv, main
from tmpc.ir import save_model, save_tensor


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    rng = np.random.default_rng(0)
    g = models.logistic_regression(rng.uniform(-1, 1, (20, 4)), rng.uniform(-1, 1, 4))
    save_model(tmp_path / "lr.hlil", g)
    save_tensor(tmp_path / "x.tmpt", rng.uniform(-1, 1, (1, 20)).astype(np.float32))
    (tmp_path / "calib").mkdir()
    save_tensor(tmp_path / "calib" / "batch.tmpt", rng.uniform(-1, 1, (40, 1, 20)).astype(np.float32))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_compile_scale_15(workdir, capsys):
    assert main(["compile", "lr.hlil", "--scale", "15", "--out", "lr.llil"]) == 0
    out = capsys.readouterr()
    assert json.loads(out.out)["chosen_scale"] == 15
    assert "ScaleDown(xW, 15);" in out.err
    assert (workdir / "lr.llil").exists()


def test_compile_sweep_prints_table(workdir, capsys):
    assert main(["compile", "lr.hlil", "--sweep", "calib", "--s-min", "6", "--s-max", "12"]) == 0
    out = capsys.readouterr()
    res = json.loads(out.out)
    assert [e["scale"] for e in res["sweep"]["entries"]] == list(range(6, 13))
    assert res["chosen_scale"] == res["sweep"]["chosen"]
    assert "argmax-agreement" in out.err


def test_compile_missing_calibration_dir(workdir):
    assert main(["compile", "lr.hlil", "--sweep", "nowhere"]) == 2


def test_compile_bad_container(workdir):
    (workdir / "bad.hlil").write_bytes(b"garbage")
    assert main(["compile", "bad.hlil", "--scale", "4"]) == 3


def test_run_fixed_matches_float(workdir, capsys):
    assert main(["run", "lr.hlil", "x.tmpt", "--backend", "float"]) == 0
    f = _json(capsys)
    assert main(["run", "lr.hlil", "x.tmpt", "--backend", "fixed", "--scale", "15"]) == 0
    x = _json(capsys)
    assert f["output"] == x["output"]
    assert x["time_ms"] >= 0


def test_run_fixed_overflow_exit_code(workdir, capsys):
    rng = np.random.default_rng(1)
    g = models.logistic_regression(rng.uniform(-1e6, 1e6, (20, 4)), np.zeros(4))
    save_model(workdir / "big.hlil", g)
    save_tensor(workdir / "big.tmpt", np.full((1, 20), 1e3, np.float32))
    assert main(["run", "big.hlil", "big.tmpt", "--backend", "fixed", "--scale", "20"]) == 5


def test_run_mpc_needs_config(workdir):
    assert main(["run", "--backend", "mpc"]) == 2


def test_usage_errors_exit_2(workdir):
    with pytest.raises(SystemExit) as e:
        main(["run", "--backend", "gpu"])
    assert e.value.code == 2
    assert main(["run", "lr.hlil", "x.tmpt", "--backend", "fixed"]) == 2  # no scale


def _free_base_port():
    for _ in range(50):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        base = s.getsockname()[1]
        s.close()
        ok = True
        for k in (1, 2):
            t = socket.socket()
            try:
                t.bind(("127.0.0.1", base + k))
            except OSError:
                ok = False
            finally:
                t.close()
        if ok:
            return base
    raise RuntimeError("no free ports")


def test_deal_and_run_three_processes(workdir, capsys):
    assert main(["run", "lr.hlil", "x.tmpt", "--backend", "fixed", "--scale", "15"]) == 0
    fixed = _json(capsys)["output"]
    base = _free_base_port()
    assert main(["deal", "lr.hlil", "x.tmpt", "--scale", "15", "--seed", "5", "--out", "shares",
                 "--base-port", str(base)]) == 0
    capsys.readouterr()
    procs = [subprocess.Popen([sys.executable, "-m", "tmpc.cli", "run", "--backend", "mpc", "--party", str(i),
                               "--config", f"shares/p{i}/config.json", "--verbose"],
                              stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, cwd=workdir)
             for i in range(3)]
    outs = [p.communicate(timeout=60) for p in procs]
    assert [p.returncode for p in procs] == [0, 0, 0], [o[1] for o in outs]
    res = [json.loads(o[0]) for o in outs]
    assert res[0]["output"] == fixed
    assert res[1]["output"] is None and res[2]["output"] is None
    # parties never touch the plaintext model or input
    for i, r in enumerate(res):
        assert all(f.startswith(f"shares/p{i}/") for f in r["files_read"])
        assert "files read:" in outs[i][1]
    assert main(["report"] + [f"shares/p{i}/comm_p{i}.json" for i in range(3)]) == 0
    merged = _json(capsys)
    assert merged["total"]["elements"] > 0


def test_mpc_missing_peer_exit_code(workdir, capsys):
    base = _free_base_port()
    assert main(["deal", "lr.hlil", "x.tmpt", "--scale", "15", "--out", "shares", "--base-port", str(base)]) == 0
    cfg = json.loads((workdir / "shares/p0/config.json").read_text())
    cfg["timeout"] = 0.5
    (workdir / "shares/p0/config.json").write_text(json.dumps(cfg))
    assert main(["run", "--backend", "mpc", "--config", "shares/p0/config.json"]) == 4
    assert "party 1" in capsys.readouterr().err


def test_bench_conv_table():
    res = bench_conv(28, 5)
    assert res["modes"]["naive"]["elements"] == res["modes"]["naive"]["formula"] == 29426
    assert res["modes"]["reshaped"]["elements"] == res["modes"]["reshaped"]["formula"] == 2194
    assert res["ratio"] == pytest.approx(13.4, abs=0.05)


def test_bench_conv_m_equals_f():
    res = bench_conv(5, 5)
    for mode in ("naive", "reshaped"):
        assert res["modes"][mode]["elements"] == res["modes"][mode]["formula"]


def test_bench_conv_cli(capsys):
    assert main(["bench-conv", "--m", "12", "--f", "3"]) == 0
    out = capsys.readouterr()
    assert json.loads(out.out)["m"] == 12
    assert "ratio" in out.err
    assert main(["bench-conv", "--m", "3", "--f", "5"]) == 2
