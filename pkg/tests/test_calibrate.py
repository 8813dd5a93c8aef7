"""Parameter fitting: series handling, determinism, quick recovery."""

import numpy as np
import pytest

from flagsim.calibrate import (ExperimentSeries, fit_parameters, predict,
                               read_series, synthetic_series, write_series)
from flagsim.config import RPM, RunConfig


def test_series_validation():
    good = ExperimentSeries(omega_T=[1.0, 2.0], v=[1e-4, 2e-4],
                            omega_h=[0.9, 1.8])
    assert len(good) == 2
    with pytest.raises(ValueError):
        ExperimentSeries(omega_T=[0.0, 2.0], v=[1e-4, 2e-4],
                         omega_h=[0.9, 1.8])
    with pytest.raises(ValueError):
        ExperimentSeries(omega_T=[1.0, 2.0], v=[1e-4], omega_h=[0.9, 1.8])
    with pytest.raises(ValueError):
        ExperimentSeries(omega_T=[1.0, 2.0], v=[1e-4, 2e-4],
                         omega_h=[0.9, 1.8], sigma_v=[-1.0, 1.0])


def test_series_roundtrip(tmp_path):
    series = ExperimentSeries(
        omega_T=np.array([50.0, 80.0, 120.0]) * RPM,
        v=np.array([1e-4, 2e-4, 3.5e-4]),
        omega_h=np.array([45.0, 70.0, 100.0]) * RPM,
        sigma_v=np.array([1e-5, 2e-5, 3e-5]),
        sigma_omega=np.array([0.5, 0.5, 0.5]) * RPM,
        design=2, n=3)
    path = tmp_path / "series.csv"
    write_series(path, series)
    back = read_series(path)
    assert back.design == 2 and back.n == 3
    for name in ("omega_T", "v", "omega_h", "sigma_v", "sigma_omega"):
        assert np.allclose(getattr(back, name), getattr(series, name))


def test_synthetic_series_deterministic(design2):
    cfg = RunConfig.from_design(2, grid_points=65)
    a = synthetic_series(cfg, [50, 80], noise=0.05, seed=42)
    b = synthetic_series(cfg, [50, 80], noise=0.05, seed=42)
    assert np.array_equal(a.v, b.v)
    assert np.array_equal(a.omega_h, b.omega_h)
    c = synthetic_series(cfg, [50, 80], noise=0.05, seed=43)
    assert not np.array_equal(a.v, c.v)


def test_fit_precondition_errors():
    cfg = RunConfig.from_design(1, grid_points=65)
    two = ExperimentSeries(omega_T=[1.0, 2.0], v=[1e-4, 2e-4],
                           omega_h=[0.9, 1.8])
    with pytest.raises(ValueError):
        fit_parameters(two, cfg)
    three = ExperimentSeries(omega_T=[1.0, 2.0, 3.0], v=[1e-4, 2e-4, 3e-4],
                             omega_h=[0.9, 1.8, 2.7])
    with pytest.raises(ValueError):
        fit_parameters(three, cfg, initial=(1.0, -0.5, 2.0))
    with pytest.raises(ValueError):
        fit_parameters(three, cfg, initial=(1e9, 0.5, 2.0))  # outside bounds


def test_fit_quick_recovery():
    cfg = RunConfig.from_design(2, n=2, grid_points=65)
    series = synthetic_series(cfg, [40, 60, 80, 100], noise=0.0)
    res = fit_parameters(series, cfg, model="beam",
                         initial=(cfg.C1 * 1.15, cfg.C2 * 0.9, cfg.mu * 1.1),
                         max_evals=160)
    assert abs(res.C1 - cfg.C1) / cfg.C1 < 0.02
    assert abs(res.C2 - cfg.C2) / cfg.C2 < 0.02
    assert abs(res.mu - cfg.mu) / cfg.mu < 0.02
    assert res.objective < 1e-4


def test_fit_deterministic():
    cfg = RunConfig.from_design(2, n=2, grid_points=65)
    series = synthetic_series(cfg, [40, 70, 100], noise=0.03, seed=5)
    kw = dict(model="beam", initial=(cfg.C1, cfg.C2, cfg.mu), max_evals=30)
    a = fit_parameters(series, cfg, **kw)
    b = fit_parameters(series, cfg, **kw)
    assert (a.C1, a.C2, a.mu, a.objective) == (b.C1, b.C2, b.mu, b.objective)


def test_predict_der_smoke(design2):
    cfg = RunConfig.from_design(2, n=2)
    v, w = predict(cfg, [100 * RPM], model="der", max_time=1.0)
    assert np.isfinite(v).all() and np.isfinite(w).all()
    with pytest.raises(ValueError):
        predict(cfg, [1.0], model="nope")
