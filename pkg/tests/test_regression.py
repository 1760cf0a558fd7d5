import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fandomdyn import regression as rg
from fandomdyn.errors import RankDeficientError, UndefinedStatisticError
from fandomdyn.model import BurstinessReport, Emotion, TeamMetadata
from oracles import normal_equations


def _design(x_cols, y, names=None):
    x_cols = np.atleast_2d(np.asarray(x_cols, dtype=float))
    n = x_cols.shape[1]
    names = names or [f"x{i}" for i in range(x_cols.shape[0])]
    X = np.column_stack([np.ones(n), x_cols.T])
    return rg.DesignMatrix([f"r{i}" for i in range(n)], ["intercept", *names], X, y)


def test_exact_line():
    x = np.arange(6.0)
    fit = rg.fit_ols(_design([x], 2 * x + 1))
    assert fit.coef("intercept") == pytest.approx(1, abs=1e-12)
    assert fit.coef("x0") == pytest.approx(2, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.rmse == pytest.approx(0.0, abs=1e-12)


def test_constant_response():
    x = np.arange(5.0)
    fit = rg.fit_ols(_design([x], np.full(5, 3.0)))
    assert fit.coef("x0") == pytest.approx(0, abs=1e-12)
    assert fit.rmse == pytest.approx(0, abs=1e-12)
    with pytest.raises(UndefinedStatisticError):
        rg.r_squared(fit)


def test_matches_normal_equations():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 20))
    y = rng.normal(size=20)
    fit = rg.fit_ols(_design(X, y))
    np.testing.assert_allclose(fit.coefficients, normal_equations(np.column_stack([np.ones(20), X.T]), y),
                               atol=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
@settings(max_examples=60)
def test_fit_identities(seed, p):
    rng = np.random.default_rng(seed)
    n = p + 3 + int(rng.integers(0, 10))
    X = rng.normal(size=(p, n))
    y = rng.normal(size=n)
    dm = _design(X, y)
    fit = rg.fit_ols(dm)
    assert 0 <= fit.r2 <= 1 + 1e-12
    assert fit.rmse >= 0
    # residuals orthogonal to every column
    np.testing.assert_allclose(dm.X.T @ fit.residuals, 0, atol=1e-8)
    ss_tot = np.sum((y - y.mean()) ** 2)
    assert fit.r2 == pytest.approx(1 - n * fit.rmse ** 2 / ss_tot, rel=1e-9, abs=1e-12)
    # nested models never fit better
    if p > 1:
        assert rg.fit_ols(dm.drop("x0")).r2 <= fit.r2 + 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-50, 50))
@settings(max_examples=40)
def test_affine_response_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2, 12))
    y = rng.normal(size=12)
    r2 = rg.fit_ols(_design(X, y)).r2
    assert rg.fit_ols(_design(X, a * y + b)).r2 == pytest.approx(r2, abs=1e-9)


def test_predictor_scaling_rescales_coefficient():
    rng = np.random.default_rng(2)
    dm = _design(rng.normal(size=(2, 15)), rng.normal(size=15))
    f1 = rg.fit_ols(dm)
    f2 = rg.fit_ols(dm.scaled({"x1": 1000.0}))
    assert f2.coef("x1") == pytest.approx(f1.coef("x1") / 1000)
    assert f2.r2 == pytest.approx(f1.r2)
    np.testing.assert_allclose(f2.standardized, f1.standardized, atol=1e-10)


def test_rank_deficiency_names_columns():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, 10))
    dm = _design([a, b, 2 * a], rng.normal(size=10), names=["a", "b", "twice_a"])
    with pytest.raises(RankDeficientError) as info:
        rg.fit_ols(dm)
    assert set(info.value.columns) == {"a", "twice_a"}
    assert "twice_a" in str(info.value)


def test_too_few_rows_rejected():
    with pytest.raises(ValueError):
        _design([[1.0, 2.0]], [1.0, 2.0])


def _meta(n=8, seed=0):
    rng = np.random.default_rng(seed)
    out = {}
    for i in range(n):
        t = f"t{i}"
        out[t] = TeamMetadata(t, "A", "North", float(rng.normal(20000, 3000)), 0.1,
                              float(rng.normal(150, 30)), float(rng.lognormal(17, 1)),
                              i + 1, int((i * 5) % n) + 1, 1, 1)
    return out


def _joy(team, b):
    return BurstinessReport(team, Emotion.JOY, 10, 1.0, 1.0, 1.0, 0.0, b, None, 1)


def test_build_full_model_and_exclusion(caplog):
    meta = _meta(9)
    reports = {t: _joy(t, 0.1 * i) for i, t in enumerate(sorted(meta)) if t != "t4"}
    with caplog.at_level(logging.WARNING):
        dm = rg.build_full_model(meta, reports)
    assert dm.columns == ("intercept", "heritage", "pci", "mv", "welfare", "b_joy")
    assert dm.X.shape == (8, 6) and "t4" not in dm.rows
    assert "t4" in caplog.text


def test_ablation_noise_vs_signal():
    rng = np.random.default_rng(7)
    n = 40
    signal, noise = rng.normal(size=(2, n))
    y = 3 * signal + rng.normal(0, 0.5, n)
    dm = _design([signal, noise], y, names=["signal", "noise"])
    drop_noise = rg.ablation_compare(dm, "noise")
    drop_signal = rg.ablation_compare(dm, "signal")
    assert abs(drop_noise.delta_r2_pct) < 5
    assert drop_signal.delta_r2_pct > 50
    assert drop_signal.delta_rmse_pct > 100
    again = rg.ablation_compare(dm, "signal")
    assert again.delta_r2_pct == drop_signal.delta_r2_pct


def test_ablation_formulas():
    rng = np.random.default_rng(8)
    dm = _design(rng.normal(size=(2, 12)), rng.normal(size=12))
    res = rg.ablation_compare(dm, "x1")
    assert res.delta_r2_pct == pytest.approx(100 * (res.full.r2 - res.reduced.r2) / res.full.r2)
    assert res.delta_rmse_pct == pytest.approx(100 * (res.reduced.rmse - res.full.rmse) / res.full.rmse)


def test_drop_guards():
    dm = _design([np.arange(5.0)], np.arange(5.0) ** 2)
    with pytest.raises(ValueError):
        dm.drop("intercept")
    with pytest.raises(KeyError):
        dm.drop("missing")


def test_regression_json(tmp_path):
    import json
    rng = np.random.default_rng(1)
    dm = _design(rng.normal(size=(2, 10)), rng.normal(size=10))
    rg.write_regression_json(tmp_path / "r.json", rg.ablation_compare(dm, "x1"))
    doc = json.loads((tmp_path / "r.json").read_text())
    assert set(doc) >= {"full", "reduced", "delta_r2_pct", "delta_rmse_pct", "dropped"}
    assert len(doc["full"]["observations"]) == 10
