"""Sweeps, CSV round-trips, config parsing and the CLI."""

import numpy as np
import pytest

from flagsim.cli import main
from flagsim.config import ConfigError, RPM, RunConfig, load_config
from flagsim.sweeps import (SWEEP_FIELDS, compare_regimes, read_rows, sweep,
                            write_rows)


def test_sweep_beam_rows(design1):
    rows = sweep(design1, "beam", n_list=[2, 3], omega_T_rpm_grid=[50, 100])
    assert len(rows) == 4
    assert [(r["n"], r["omega_T_rpm"]) for r in rows] == \
        [(2, 50.0), (2, 100.0), (3, 50.0), (3, 100.0)]
    for r in rows:
        assert r["status"] == "ok"
        assert set(SWEEP_FIELDS) <= set(r)
        assert r["v"] > 0 and r["omega_h"] > 0 and r["omega_t"] > 0
        # normalized columns are consistent linear rescalings
        tmpl = design1.beam_template()
        assert np.isclose(r["v_bar"],
                          r["v"] * tmpl.eta_p * tmpl.L ** 3 / tmpl.EI)
        assert np.isclose(r["omega_h_bar"] / r["omega_h"],
                          r["omega_T_bar"] / (r["omega_T_rpm"] * RPM))


def test_sweep_error_rows_continue(design1):
    # edge length exceeds L/4 for a very short flagellum: build fails,
    # the row records the error and the sweep carries on
    rows = sweep(design1, "der", n_list=[2], omega_T_rpm_grid=[60],
                 L_list=[0.012, 0.111])
    assert rows[0]["status"].startswith("error")
    assert np.isnan(rows[0]["v"])
    assert len(rows) == 2


def test_sweep_parallel_matches_serial(design1):
    grid = [40, 80]
    serial = sweep(design1, "beam", [2], grid)
    parallel = sweep(design1, "beam", [2], grid, workers=2)
    for a, b in zip(serial, parallel):
        assert a == b


def test_csv_roundtrip(tmp_path, design1):
    rows = sweep(design1, "beam", n_list=[2], omega_T_rpm_grid=[50, 100])
    path = tmp_path / "sweep.csv"
    write_rows(path, rows, SWEEP_FIELDS)
    back = read_rows(path)
    assert back == rows


def test_compare_regimes_rows(design1):
    rows = compare_regimes(design1, [5, 40])
    assert len(rows) == 6
    by_rate = {}
    for r in rows:
        by_rate.setdefault(r["omega_T_rpm"], {})[r["regime"]] = r["tip_over_L"]
    low = by_rate[5.0]
    assert abs(low["lb"] - low["nlb"]) / low["lb"] < 0.05
    assert abs(low["nlb"] - low["nlb_no_head"]) / low["nlb"] < 0.01


def test_config_defaults_and_presets():
    cfg = RunConfig.from_design(1)
    assert cfg.L == 0.111 and cfg.R_h == 0.02 and cfg.mu == 6.828
    cfg2 = RunConfig.from_design(2, n=3)
    assert cfg2.n == 3 and cfg2.L == 0.089 and cfg2.C1 == 28.750
    with pytest.raises(ValueError):
        RunConfig.from_design(7)


def test_config_file_loading(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("""
[robot]
n = 3
L = 0.089
[medium]
mu = 2.125
[sim]
omega_T_rpm = 75
dt = 0.005
[beam]
regime = lb
grid_points = 65
""")
    cfg = load_config(path, base=RunConfig.from_design(1))
    assert cfg.n == 3
    assert cfg.L == 0.089
    assert cfg.mu == 2.125
    assert np.isclose(cfg.omega_T, 75 * RPM)
    assert cfg.dt == 0.005
    assert cfg.regime.value == "lb"
    assert cfg.grid_points == 65
    # untouched keys keep the preset values
    assert cfg.C1 == 2.420 and cfg.R_h == 0.02


def test_config_rejects_bad_values(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[robot]\nn = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[sim]\ndt = -0.1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[beam]\nregime = warp\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_cli_beam_and_outputs(tmp_path):
    out = tmp_path / "beam.csv"
    rc = main(["beam", "--design", "1", "--omega-T-rpm", "100",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert list(rows[0]) == ["y", "w", "w_prime"]
    assert rows[0]["y"] == 0.0 and rows[0]["w"] == 0.0
    assert rows[-1]["y"] == pytest.approx(0.111)


def test_cli_sweep_and_grid_syntax(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--design", "2", "--model", "beam",
               "--n-list", "2,3", "--omega-T-grid", "40:100:3",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert len(rows) == 6
    assert {r["omega_T_rpm"] for r in rows} == {40.0, 70.0, 100.0}


def test_cli_simulate_short(tmp_path):
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "--design", "2", "--omega-T-rpm", "100",
               "--duration", "0.5", "--output-interval", "0.1",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert len(rows) == 5
    assert list(rows[0]) == ["t", "x", "y", "z", "v", "omega_h", "omega_t",
                             "newton_iters"]


def test_cli_fit_roundtrip(tmp_path):
    from flagsim.calibrate import synthetic_series, write_series

    cfg = RunConfig.from_design(2, grid_points=65)
    series = synthetic_series(cfg, [40, 70, 100], noise=0.0)
    data = tmp_path / "series.csv"
    write_series(data, series)
    out = tmp_path / "fit.csv"
    rc = main(["fit", "--design", "2", "--data", str(data),
               "--model", "beam", "--max-evals", "25", "--out", str(out)])
    assert rc == 0
    fit = read_rows(out)[0]
    assert fit["C1"] > 0 and fit["C2"] > 0 and fit["mu"] > 0


def test_cli_compare_regimes(tmp_path):
    out = tmp_path / "regimes.csv"
    rc = main(["compare-regimes", "--design", "1",
               "--omega-T-grid", "20,60", "--out", str(out)])
    assert rc == 0
    assert len(read_rows(out)) == 6


def test_cli_config_error_exit_code(tmp_path):
    rc = main(["simulate", "--design", "1", "--config",
               str(tmp_path / "absent.ini"), "--out", str(tmp_path / "o.csv")])
    assert rc == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[robot]\nedge_length = 0.2\n")
    rc = main(["simulate", "--design", "1", "--config", str(bad),
               "--out", str(tmp_path / "o.csv")])
    assert rc == 2


def test_cli_solver_failure_exit_code(tmp_path):
    # an unreachable Newton tolerance exhausts the halving ladder
    cfg = tmp_path / "impossible.ini"
    cfg.write_text("[sim]\ntolerance = 1e-30\n")
    rc = main(["simulate", "--design", "2", "--config", str(cfg),
               "--duration", "0.1", "--out", str(tmp_path / "o.csv")])
    assert rc == 3
