import csv
import json

import numpy as np
import pytest

from linbridge.cli import main
from linbridge.config import RunConfig, dump_config, load_config
from linbridge.presets import PRESET_NAMES, preset
from linbridge.errors import UnknownPreset


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    dump_config(cfg, path)
    return str(path)


def _rows(path):
    with open(path) as f:
        return list(csv.reader(f))


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_config_round_trip(tmp_path, name):
    cfg = preset(name, str(tmp_path / name))
    path = _write(tmp_path, "c.json", cfg)
    assert load_config(path) == cfg


def test_piecewise_config_round_trip(tmp_path):
    d = {
        "system": {
            "n": 1, "m": 1, "t0": 0.0, "tf": 2.0,
            "A": {"breakpoints": [1.0], "pieces": [[[[0.0, 1.0]]], [[[-1.0]]]]},
            "B": [[[1.0]]],
        },
        "bridge": {"xi0": [0], "xi1": [1]},
    }
    cfg = RunConfig.from_dict(d)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    sys = cfg.build_system()
    assert sys.A(0.5)[0, 0] == 0.5 and sys.A(1.5)[0, 0] == -1.0


def test_config_validation():
    base = preset("ou-bridge").to_dict()
    bad = dict(base, bridge={"xi0": [0.0], "xi1": [0.0, 0.0]})
    with pytest.raises(ValueError):
        RunConfig.from_dict(bad)
    with pytest.raises(ValueError):
        RunConfig.from_dict(dict(base, grid={"N": 1}))
    wrong_m = dict(base, system=dict(base["system"], m=2))
    with pytest.raises(ValueError):
        RunConfig.from_dict(wrong_m).build_system()


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("nope")


def test_stats_wiener(tmp_path):
    cfg = _write(tmp_path, "bb.json", preset("brownian-bridge"))
    assert main(["stats", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "stats.csv")
    assert rows[0] == ["t", "L_1", "Q_11"]
    assert len(rows) == 1002
    row = rows[1 + 250]
    assert float(row[0]) == 0.25
    assert float(row[2]) == pytest.approx(0.1875, abs=1e-12)
    assert all(float(r[1]) == 0.0 for r in rows[1:])


def test_stats_double_integrator(tmp_path):
    cfg = _write(tmp_path, "ou.json", preset("ou-bridge"))
    assert main(["stats", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "stats.csv")
    assert rows[0] == ["t", "L_1", "L_2", "Q_11", "Q_12", "Q_21", "Q_22"]
    row = rows[1 + 500]
    assert float(row[0]) == 0.5
    assert float(row[6]) == pytest.approx(0.0625, abs=1e-12)
    # shortest round-trip float formatting
    assert all(repr(float(v)) == v for v in row)


def test_simulate_pinning_and_determinism(tmp_path):
    cfg = _write(tmp_path, "off.json", preset("ou-bridge-offcenter"))
    args = ["simulate", "--config", cfg, "--paths", "5", "--grid", "200"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "3"]) == 0
    a = (tmp_path / "a" / "paths.csv").read_bytes()
    assert a == (tmp_path / "b" / "paths.csv").read_bytes()
    rows = _rows(tmp_path / "a" / "paths.csv")
    assert rows[0] == ["path_id", "t", "x_1", "x_2"]
    body = np.array(rows[1:], dtype=float).reshape(5, 201, 4)
    assert np.all(body[:, 0, 0] == np.arange(5)[:, None].ravel())
    assert np.all(body[:, 0, 2:] == 0.0)
    assert np.all(body[:, -1, 2:] == [1.0, 0.0])


def test_simulate_svg(tmp_path):
    cfg = _write(tmp_path, "ou.json", preset("ou-bridge"))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"), "--svg"]) == 0
    for name in ("component_1.svg", "component_2.svg", "phase.svg"):
        text = (tmp_path / "o" / name).read_text()
        assert text.startswith("<svg") and "<polyline" in text


def test_exit_codes(tmp_path, capsys):
    assert main(["stats", "--config", str(tmp_path / "missing.json")]) == 1
    d = preset("ou-bridge").to_dict()
    d["system"]["B"] = [[[0.0]], [[0.0]]]
    path = tmp_path / "dead.json"
    path.write_text(json.dumps(d))
    assert main(["stats", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "UNBRIDGEABLE" in capsys.readouterr().err
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    cfg = _write(tmp_path, "ou.json", preset("ou-bridge"))
    assert main(["validate", "--config", cfg, "--paths", "10", "--out", str(tmp_path / "o")]) == 1
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["stats", "--config", str(tmp_path / "junk.json")]) == 1


def test_validate_corrupt_gain(tmp_path):
    cfg = _write(tmp_path, "ou.json", preset("ou-bridge"))
    out = str(tmp_path / "o")
    assert main(["validate", "--config", cfg, "--paths", "5000", "--out", out]) == 0
    rows = _rows(tmp_path / "o" / "validation.csv")
    assert rows[0] == ["entry", "analytic", "empirical", "z"]
    assert main(["validate", "--config", cfg, "--paths", "5000", "--out", out, "--corrupt-gain", "0.5"]) == 3


@pytest.mark.slow
@pytest.mark.parametrize("name", ["brownian-bridge", "ou-bridge"])
def test_validate_presets(tmp_path, name):
    cfg = _write(tmp_path, "c.json", preset(name))
    assert main(["validate", "--config", cfg, "--paths", "100000", "--out", str(tmp_path / "o")]) == 0


def test_demo_ou(tmp_path):
    out = tmp_path / "ou"
    assert main(["demo", "ou-bridge", "--out", str(out)]) == 0
    cfg = load_config(out / "config.json")
    assert cfg == preset("ou-bridge", str(out))
    assert cfg.grid.N == 1000 and cfg.simulation.seed == 1 and cfg.simulation.n_paths == 2
    rows = _rows(out / "paths.csv")
    assert len(rows) == 1 + 2 * 1001
    for f in ("stats.csv", "component_1.svg", "component_2.svg", "phase.svg"):
        assert (out / f).exists()


def test_demo_brownian_2d(tmp_path):
    out = tmp_path / "b2"
    assert main(["demo", "brownian-2d", "--out", str(out)]) == 0
    assert (out / "phase.svg").exists()
    rows = _rows(out / "stats.csv")
    # independent components: zero cross-covariance
    assert all(float(r[4]) == 0.0 and float(r[5]) == 0.0 for r in rows[1:])


def test_demo_offcenter_mean(tmp_path):
    out = tmp_path / "off"
    assert main(["demo", "ou-bridge-offcenter", "--out", str(out)]) == 0
    rows = _rows(out / "stats.csv")
    t = np.array([float(r[0]) for r in rows[1:]])
    L = np.array([[float(r[1]), float(r[2])] for r in rows[1:]])
    # Hermite cubic from (0, 0) to (1, 0) for the double integrator
    np.testing.assert_allclose(L[:, 0], 3 * t**2 - 2 * t**3, atol=1e-10)
    np.testing.assert_allclose(L[:, 1], 6 * t - 6 * t**2, atol=1e-10)
    assert "mean L(t)" in (out / "component_1.svg").read_text()


def test_module_entry_point(tmp_path):
    import subprocess, sys

    r = subprocess.run([sys.executable, "-m", "linbridge", "demo", "brownian-bridge", "--out", str(tmp_path / "x")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
