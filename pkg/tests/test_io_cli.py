"""Unit tests for config validation, on-disk formats, and the CLI surface."""

import json
import os

import numpy as np
import pytest

from invasionlab.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_MISSING, EXIT_OK, \
    main
from invasionlab.core import Grid, State
from invasionlab.io import ConfigError, MissingData, load_manifest, \
    read_csv, read_heatmap, read_snapshot, read_wavetrain, validate_config, \
    write_csv, write_heatmap, write_snapshot, write_wavetrain
from invasionlab.wavetrain import WaveTrain


def _base_config():
    return {
        "params": {"a": 0.1, "gamma": 2.0, "eps": 0.01},
        "grid": {"x_min": -20.0, "x_max": 20.0, "n": 201},
        "scheme": {"dt": 0.02, "t_end": 1.0, "record_every": 10},
        "init": {"kind": "zero"},
    }


# ---------------------------------------------------------------------------
# config validation


def test_validate_accepts_minimal_config():
    assert validate_config(_base_config()) is not None


def test_unknown_top_level_key_is_named():
    cfg = _base_config()
    cfg["extra"] = 1
    with pytest.raises(ConfigError) as exc:
        validate_config(cfg)
    assert exc.value.field_path == "config.extra"


def test_missing_required_key_is_named():
    cfg = _base_config()
    del cfg["scheme"]["dt"]
    with pytest.raises(ConfigError) as exc:
        validate_config(cfg)
    assert exc.value.field_path == "scheme.dt"


def test_bad_value_errors_carry_field_paths():
    cases = [
        (lambda c: c["params"].update(eps=-0.1), "params.eps"),
        (lambda c: c["grid"].update(n=10.5), "grid.n"),
        (lambda c: c["scheme"].update(bc="absorbing"), "scheme.bc"),
        (lambda c: c["init"].update(kind="plasma"), "init.kind"),
        (lambda c: c.update(events=[{"t_fire": 0, "center": 0,
                                     "width": -1, "amplitude": 1}]),
         "events[0].width"),
    ]
    for mutate, path in cases:
        cfg = _base_config()
        mutate(cfg)
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        assert exc.value.field_path == path


def test_grid_ordering_enforced():
    cfg = _base_config()
    cfg["grid"]["x_max"] = cfg["grid"]["x_min"]
    with pytest.raises(ConfigError):
        validate_config(cfg)


# ---------------------------------------------------------------------------
# formats


def test_snapshot_roundtrip_is_bit_exact(tmp_path):
    grid = Grid(-3.0, 3.0, 61)
    rng = np.random.Generator(np.random.Philox(3))
    st = State(grid, 12.5, rng.normal(size=grid.n), rng.normal(size=grid.n))
    path = str(tmp_path / "snap.bin")
    write_snapshot(path, st)
    back = read_snapshot(path)
    assert back.t == st.t
    assert np.array_equal(back.u, st.u)
    assert np.array_equal(back.w, st.w)
    assert back.grid.n == grid.n


def test_truncated_snapshot_raises_missing_data(tmp_path):
    grid = Grid(-3.0, 3.0, 61)
    st = State(grid, 0.0, np.zeros(grid.n), np.zeros(grid.n))
    path = str(tmp_path / "snap.bin")
    write_snapshot(path, st)
    with open(path, "r+b") as fh:
        fh.truncate(os.path.getsize(path) - 16)
    with pytest.raises(MissingData):
        read_snapshot(path)


def test_csv_roundtrip_full_precision(tmp_path):
    path = str(tmp_path / "data.csv")
    a = np.array([1 / 3, np.pi, 1e-17])
    b = np.array([-1.0, 0.0, 2.0 ** -40])
    write_csv(path, ["a", "b"], [a, b])
    header, cols = read_csv(path)
    assert header == ["a", "b"]
    assert np.array_equal(cols[0], a)
    assert np.array_equal(cols[1], b)


def test_heatmap_roundtrip_within_quantization(tmp_path):
    path = str(tmp_path / "map.pgm")
    rng = np.random.Generator(np.random.Philox(5))
    field = rng.normal(size=(7, 31))
    write_heatmap(path, field)
    back = read_heatmap(path)
    span = field.max() - field.min()
    assert back.shape == field.shape
    assert np.max(np.abs(back - field)) <= span / 65535.0


def test_wavetrain_record_roundtrip(tmp_path):
    m = 16
    wt = WaveTrain(m=m, profile_u=np.linspace(0, 1, m),
                   profile_w=np.linspace(1, 0, m), L=12.0, c=-0.7,
                   residual=1e-11)
    path = str(tmp_path / "wt.json")
    write_wavetrain(path, wt)
    back = read_wavetrain(path)
    assert back.L == wt.L and back.c == wt.c and back.m == m
    assert np.array_equal(back.profile_u, wt.profile_u)


# ---------------------------------------------------------------------------
# CLI


def _write_config(tmp_path, cfg, name="config.json"):
    path = str(tmp_path / name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh)
    return path


def test_cli_simulate_writes_verifiable_run(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, _base_config())
    out = str(tmp_path / "run")
    assert main(["simulate", "--config", cfg_path, "--out", out]) == EXIT_OK
    assert capsys.readouterr().out.strip() == out
    manifest = load_manifest(out, verify=True)  # CRC check must pass
    snaps = [f for f in manifest["files"] if f["path"].startswith("snapshots/")]
    assert len(snaps) == 6  # t = 0, 0.2, ..., 1.0
    # zero init with no events stays identically zero
    final = read_snapshot(os.path.join(out, snaps[-1]["path"]))
    assert np.all(final.u == 0.0) and np.all(final.w == 0.0)


def test_cli_bad_config_exits_2_and_names_field(tmp_path, capsys):
    cfg = _base_config()
    cfg["scheme"]["dt"] = -1.0
    cfg_path = _write_config(tmp_path, cfg)
    code = main(["simulate", "--config", cfg_path,
                 "--out", str(tmp_path / "run")])
    assert code == EXIT_CONFIG
    assert "scheme.dt" in capsys.readouterr().err


def test_cli_missing_config_file_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "run")]) == EXIT_CONFIG


def test_cli_blowup_exits_3(tmp_path):
    cfg = _base_config()
    cfg["scheme"]["dt"] = 2.0
    cfg["scheme"]["t_end"] = 100.0
    cfg["init"] = {"kind": "bump", "center": 0.0, "width": 2.0,
                   "amplitude": 50.0}
    cfg_path = _write_config(tmp_path, cfg)
    assert main(["simulate", "--config", cfg_path,
                 "--out", str(tmp_path / "run")]) == EXIT_BLOWUP


def test_cli_analyze_missing_run_exits_4(tmp_path):
    assert main(["analyze", "--run", str(tmp_path / "absent"),
                 "--out", str(tmp_path / "out")]) == EXIT_MISSING


def test_cli_dispersion_writes_summary(tmp_path):
    cfg_path = _write_config(tmp_path, _base_config())
    out = str(tmp_path / "disp")
    assert main(["dispersion", "--config", cfg_path, "--out", out]) == EXIT_OK
    with open(os.path.join(out, "dispersion.json")) as fh:
        rec = json.load(fh)
    assert abs(rec["c_lin"] - 0.34067) < 2e-4
    assert rec["pinched"] is True


def test_cli_report_renders_figures(tmp_path):
    cfg = _base_config()
    cfg["init"] = {"kind": "bump", "center": 0.0, "width": 2.0,
                   "amplitude": 0.6}
    cfg_path = _write_config(tmp_path, cfg)
    run = str(tmp_path / "run")
    assert main(["simulate", "--config", cfg_path, "--out", run]) == EXIT_OK
    out = str(tmp_path / "report")
    assert main(["report", "--run", run, "--out", out]) == EXIT_OK
    for name in ("spacetime_u.png", "final_profile.png",
                 "front_position.png"):
        path = os.path.join(out, name)
        assert os.path.getsize(path) > 1000, name


def test_cli_out_root_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("INVASIONLAB_OUT", str(tmp_path / "envroot"))
    monkeypatch.chdir(tmp_path)
    cfg_path = _write_config(tmp_path, _base_config())
    assert main(["simulate", "--config", cfg_path]) == EXIT_OK
    printed = capsys.readouterr().out.strip()
    assert printed.startswith(str(tmp_path / "envroot"))
    assert os.path.exists(os.path.join(printed, "manifest.json"))
