import json
import math
import subprocess
import sys

import numpy as np
import pytest

from starparticles.cli import OUT_DIR_ENV, main, parse_thetas


def _csv(text):
    lines = text.strip().splitlines()
    return lines[0], np.array([[float(x) for x in l.split(",")] for l in lines[1:]])


def test_parse_thetas():
    t = parse_thetas("0:pi:5")
    assert t[-1] == pytest.approx(math.pi) and len(t) == 5
    assert parse_thetas("pi/4:pi/2:2") == pytest.approx([math.pi / 4, math.pi / 2])


def test_corr_uniform_is_linear(capsys):
    assert main(["corr", "--family", "uniform", "--r", "1.5707963", "--domain", "sphere",
                 "--thetas", "0:pi:50"]) == 0
    head, rows = _csv(capsys.readouterr().out)
    assert head == "theta,C"
    assert len(rows) == 50
    assert np.max(np.abs(rows[:, 1] - (1 - rows[:, 0] / math.pi))) <= 1e-6


def test_corr_quadrature_method(capsys):
    assert main(["corr", "--family", "vmf", "--a", "2", "--domain", "circle",
                 "--thetas", "pi/2:pi/2:1", "--method", "quadrature"]) == 0
    _, rows = _csv(capsys.readouterr().out)
    assert rows[0, 1] == pytest.approx(0.37625024288004666, rel=1e-9)


def test_fractal_json(capsys):
    assert main(["fractal", "--family", "power", "--q", "0.5", "--domain", "sphere", "--numeric"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["alpha"] == 1.0 and out["dimension"] == 2.5
    assert out["b"] == pytest.approx(0.4870061099175156, rel=1e-12)
    assert out["b_numeric"] == pytest.approx(out["b"], rel=1e-9)


def test_partition_to_file(tmp_path):
    dest = tmp_path / "p.csv"
    assert main(["partition", "--n", "10", "--out", str(dest)]) == 0
    assert len(dest.read_text().splitlines()) == 11


@pytest.mark.parametrize("argv", [
    ["simulate", "--family", "vmf", "--a", "1"],                       # no seed
    ["simulate", "--family", "vmf", "--a", "1", "--seed", "1", "--bogus"],
    ["fractal", "--family", "power", "--q", "1.5"],                   # parameter out of range
    ["fractal", "--family", "power"],                                 # missing parameter
    ["corr", "--family", "power", "--q", "0.5", "--method", "closed"],
    ["corr", "--family", "vmf", "--a", "1", "--thetas", "0:4:3"],
    ["simulate", "--family", "vmf", "--a", "1", "--seed", "1", "--threads", "0"],
    ["nonsense"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_io_error_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["partition", "--n", "4", "--out", str(blocker / "sub" / "p.csv")])
    assert code == 1


def _simulate(out_dir, threads, extra=()):
    return main(["simulate", "--family", "power", "--q", "0.5", "--m1", "20", "--m2", "30",
                 "--n", "3000", "--seed", "11", "--threads", str(threads), "--out-dir", str(out_dir),
                 *extra])


def test_simulate_outputs_and_manifest(tmp_path):
    assert _simulate(tmp_path, 1, ["--mesh-out", "m.obj"]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "simulate"
    assert man["config"]["seed"] == 11 and man["config"]["clamp_delta"] > 0
    assert set(man["outputs"]) == {"values", "mesh"}
    head, rows = _csv((tmp_path / "field.csv").read_text())
    assert head == "theta,phi,x" and rows.shape == (600, 3)
    assert "threads" not in json.dumps(man)


def test_outputs_byte_identical_across_threads(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _simulate(a, 1, ["--mesh-out", "m.obj"]) == 0
    assert _simulate(b, 3, ["--mesh-out", "m.obj"]) == 0
    for name in ("field.csv", "manifest.json", "m.obj"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[kernel]\nfamily = vmf\na = 2\n[simulation]\nm1 = 4\nm2 = 5\nn = 200\nseed = 3\n")
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "x")]) == 0
    man = json.loads((tmp_path / "x" / "manifest.json").read_text())
    assert man["kernel"]["a"] == 2.0 and man["config"]["M1"] == 4
    # command-line flags win over the file
    assert main(["simulate", "--config", str(cfg), "--m1", "6", "--out-dir", str(tmp_path / "y")]) == 0
    man = json.loads((tmp_path / "y" / "manifest.json").read_text())
    assert man["config"]["M1"] == 6 and man["config"]["seed"] == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[x]\nwibble = 1\n")
    assert main(["simulate", "--config", str(bad)]) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["simulate", "--family", "vmf", "--a", "1", "--m1", "3", "--m2", "3",
                 "--n", "50", "--seed", "0"]) == 0
    assert (tmp_path / "env" / "field.csv").exists()


def test_circle_outline(tmp_path):
    assert main(["simulate", "--family", "vmf", "--a", "3", "--domain", "circle", "--m1", "64",
                 "--n", "256", "--mean", "25", "--variance", "1", "--seed", "2",
                 "--outline-out", "o.csv", "--out-dir", str(tmp_path)]) == 0
    head, rows = _csv((tmp_path / "o.csv").read_text())
    assert head == "x,y" and rows.shape == (65, 2)
    assert np.array_equal(rows[0], rows[-1])


def test_preset_command(tmp_path):
    assert main(["preset", "wet_earth", "--seed", "1", "--m1", "10", "--m2", "20", "--n", "2000",
                 "--out-dir", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "wet_earth.manifest.json").read_text())
    assert man["preset"]["truncation_c"] == 6371.0
    assert man["summary"]["min_radius"] >= 6371.0


def test_estimate_command(tmp_path, capsys):
    assert main(["estimate", "--family", "power", "--q", "0.5", "--m1", "40", "--m2", "80",
                 "--n", "5000", "--seeds", "6", "--seed", "0", "--out-dir", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {"alpha", "dimension", "window"} <= set(out)
    head, _ = _csv((tmp_path / "variogram.csv").read_text())
    assert head == "theta,gamma_hat,count"


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "starparticles", "fractal", "--family", "uniform",
                          "--r", "1.0"], capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["alpha"] == 1.0
