import json

import numpy as np
import pytest

from tspca.exceptions import ConditioningError, RangeError
from tspca.forecast import (
    ForecastReport,
    VARModel,
    fit_var,
    forecast,
    reports_to_csv,
    reports_to_json,
    restrict_var,
    rolling_compare,
)
from tspca.prewhiten import fit_ar
from tspca.simulation import EXAMPLE5, generate


def simulate_var1(rng, Phi, n, burn=200):
    p = Phi.shape[0]
    y = np.zeros((n + burn, p))
    e = rng.standard_normal((n + burn, p))
    for t in range(1, n + burn):
        y[t] = Phi @ y[t - 1] + e[t]
    return y[burn:]


def test_var_white_noise_order_zero(rng):
    zero = sum(fit_var(rng.standard_normal((500, 2)), 2).order == 0 for _ in range(200))
    assert zero >= 160


def test_var1_consistency(rng):
    good = 0
    for _ in range(100):
        m = fit_var(simulate_var1(rng, 0.6 * np.eye(2), 2000), 3)
        good += m.order >= 1 and np.max(np.abs(m.coefficient_matrices[0] - 0.6 * np.eye(2))) < 0.05
    assert good >= 95


def test_var_order_zero_forecasts_mean(rng):
    Y = rng.standard_normal((100, 3)) + [1, 2, 3]
    m = fit_var(Y, 0)
    assert m.order == 0 and m.coefficient_matrices == []
    np.testing.assert_allclose(forecast(m, Y, 1), Y.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(forecast(m, Y, 2), Y.mean(axis=0), atol=1e-12)


def test_var_errors(rng):
    with pytest.raises(RangeError):
        fit_var(rng.standard_normal((20, 3)), 5)
    y = rng.standard_normal(200)
    with pytest.raises(ConditioningError):
        restrict_var(VARModel(1, [np.eye(2)], np.zeros(2), np.eye(2)), np.c_[y, 2 * y], 0.0)


def test_var_skips_collinear_orders():
    # lead-shifted copies: lags 1 and 2 of (eta_t, eta_{t+1}) share eta_t
    Y, _, _ = generate(EXAMPLE5, 300, 3)
    m = fit_var(Y, 5)
    assert np.isinf(m.aic[-1]) and np.isfinite(m.aic[m.order])


def test_var_aic_on_common_sample(rng):
    Y = simulate_var1(rng, np.array([[0.5, 0.2], [0.0, 0.3]]), 400)
    m = fit_var(Y, 2)
    assert m.sample_start == 2
    T = Y[2:]
    for k in range(3):
        X = np.hstack([np.ones((398, 1))] + [Y[2 - j : 400 - j] for j in range(1, k + 1)])
        B = np.linalg.lstsq(X, T, rcond=None)[0]
        U = T - X @ B
        assert m.aic[k] == pytest.approx(398 * np.linalg.slogdet(U.T @ U / 398)[1] + 8 * k, rel=1e-9)


def test_forecast_hand_values():
    ar = VARModel(1, [np.array([[0.5]])], np.zeros(1), np.eye(1))
    assert forecast(ar, [[2.0]], 1) == pytest.approx([1.0])
    assert forecast(ar, [[2.0]], 2) == pytest.approx([0.5])
    var = VARModel(1, [0.6 * np.eye(2)], np.zeros(2), np.eye(2))
    np.testing.assert_allclose(forecast(var, [[1.0, -1.0]], 1), [0.6, -0.6])
    np.testing.assert_allclose(forecast(var, [[1.0, -1.0]], 2), [0.36, -0.36])


def test_forecast_accepts_ar_model(rng):
    y = rng.standard_normal(300).cumsum() * 0.1
    m = fit_ar(y, 2)
    expect = m.intercept + sum(c * y[-1 - k] for k, c in enumerate(m.coefficients))
    assert forecast(m, y, 1)[0] == pytest.approx(expect)


def test_forecast_errors():
    var = VARModel(2, [np.eye(1), np.eye(1)], np.zeros(1), np.eye(1))
    with pytest.raises(RangeError):
        forecast(var, [[1.0]], 1)
    with pytest.raises(RangeError):
        forecast(var, [[1.0], [2.0]], 0)


def test_two_step_companion_identity(rng):
    for _ in range(50):
        p, k = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        mats = [rng.uniform(-0.5, 0.5, (p, p)) for _ in range(k)]
        c = rng.standard_normal(p)
        m = VARModel(k, mats, c, np.eye(p))
        hist = rng.standard_normal((k + 3, p))
        C = m.companion()
        state = np.concatenate([hist[-j] for j in range(1, k + 1)])
        cvec = np.zeros(p * k)
        cvec[:p] = c
        two = (C @ C @ state + C @ cvec + cvec)[:p]
        np.testing.assert_allclose(forecast(m, hist, 2), two, atol=1e-10)


def test_restrict_extremes(rng):
    Y = simulate_var1(rng, np.array([[0.5, 0.0], [0.3, 0.4]]), 500)
    m = fit_var(Y, 2)
    same = restrict_var(m, Y, 0.0)
    for a, b in zip(same.coefficient_matrices, m.coefficient_matrices):
        np.testing.assert_allclose(a, b, atol=1e-10)
    np.testing.assert_allclose(same.intercept, m.intercept, atol=1e-10)
    none = restrict_var(m, Y, np.inf)
    assert all(np.all(A == 0) for A in none.coefficient_matrices)
    assert not none.mask.any()
    np.testing.assert_allclose(none.intercept, Y[m.sample_start :].mean(axis=0), atol=1e-12)


def test_restrict_mask_zero_entries(rng):
    Y = simulate_var1(rng, np.array([[0.5, 0.0], [0.3, 0.4]]), 500)
    r = restrict_var(fit_var(Y, 1), Y)
    for k, A in enumerate(r.coefficient_matrices):
        assert np.all(A[~r.mask[:, :, k]] == 0)


def test_restrict_sparse_power_and_size(rng):
    p = 4
    Phi = np.zeros((p, p))
    idx = rng.permutation(p * p)[: p * p // 2]
    Phi.flat[idx] = rng.choice([-0.3, 0.3], len(idx))
    while np.max(np.abs(np.linalg.eigvals(Phi))) >= 0.9:
        Phi *= 0.8
    zeros, nonzeros = Phi == 0, Phi != 0
    removed_zero = removed_nonzero = 0
    reps = 50
    for _ in range(reps):
        Y = simulate_var1(rng, Phi, 3000)
        m = fit_var(Y, 1)
        if m.order != 1:
            m = VARModel(1, [np.zeros((p, p))], m.intercept, m.sigma)
        r = restrict_var(fit_var(Y, 1) if m.order == 1 else m, Y)
        kept = r.mask[:, :, 0]
        removed_zero += np.sum(~kept & zeros)
        removed_nonzero += np.sum(~kept & nonzeros)
    assert removed_zero / (reps * zeros.sum()) >= 0.7
    assert removed_nonzero / (reps * nonzeros.sum()) <= 0.1


def test_report_from_errors():
    errs = {1: np.array([[1.0, 2.0], [1.0, 0.0]]), 2: np.zeros((2, 2))}
    r = ForecastReport.from_errors("var", errs)
    np.testing.assert_allclose(r.per_series_mse[1], [1.0, 2.0])
    assert r.mean_mse[1] == 1.5 and r.sd_mse[1] == pytest.approx(np.sqrt(0.5))
    assert r.mean_mse[2] == 0 and r.sd_mse[2] == 0


def test_rolling_constant_series():
    Y = np.ones((80, 3)) * [1.0, 2.0, -1.0]
    for r in rolling_compare(Y, 4):
        assert r.mean_mse[1] == 0 and r.mean_mse[2] == 0


def test_rolling_smoke_shapes(rng):
    y = np.zeros(150)
    e = rng.standard_normal(150)
    for t in range(1, 150):
        y[t] = 0.5 * y[t - 1] + e[t]
    Y = np.c_[y, rng.standard_normal(150)]
    reports = rolling_compare(Y, 2, methods=("var", "rvar", "segmentation"),
                              max_order=2)
    assert [r.method for r in reports] == ["var", "rvar", "segmentation"]
    for r in reports:
        assert set(r.per_series_mse) == {1, 2}
        assert all(v.shape == (2,) and np.all(np.isfinite(v)) and np.all(v >= 0)
                   for v in r.per_series_mse.values())
    text = reports_to_csv(reports, ["a", "b"])
    rows = text.strip().split("\n")
    assert rows[0] == "series,var_h1,var_h2,rvar_h1,rvar_h2,segmentation_h1,segmentation_h2"
    assert [row.split(",")[0] for row in rows[1:]] == ["a", "b", "mean", "sd"]
    assert json.loads(reports_to_json(reports))["reports"][0]["method"] == "var"


def test_rolling_method_order_irrelevant(rng):
    Y, _, _ = generate(EXAMPLE5, 300, 3)
    a = {r.method: r for r in rolling_compare(Y, 3, methods=("var", "segmentation"))}
    b = {r.method: r for r in rolling_compare(Y, 3, methods=("segmentation", "var"))}
    for k in a:
        assert a[k].mean_mse == b[k].mean_mse


def test_rolling_manual_window(rng):
    # first holdout point: one step from Y[:n-d], two step from Y[:n-d-1]
    Y = rng.standard_normal((100, 2))
    r = rolling_compare(Y, 2, methods=("var",), max_order=1)[0]
    e1 = [forecast(fit_var(Y[:T], 1), Y[:T], 1) - Y[T] for T in (98, 99)]
    e2 = [forecast(fit_var(Y[:T], 1), Y[:T], 2) - Y[T + 1] for T in (97, 98)]
    np.testing.assert_allclose(r.per_series_mse[1], np.mean(np.square(e1), axis=0), atol=1e-12)
    np.testing.assert_allclose(r.per_series_mse[2], np.mean(np.square(e2), axis=0), atol=1e-12)


def test_rolling_seasonal_inversion(rng):
    Y = np.tile(np.arange(4.0), 30)[:, None] * [1.0, -2.0] + 0.01 * rng.standard_normal((120, 2))
    r = rolling_compare(Y, 4, methods=("var",), seasonal_lag=4, max_order=1)[0]
    assert r.mean_mse[1] < 1e-3 and r.mean_mse[2] < 1e-3


def test_rolling_errors(rng):
    with pytest.raises(RangeError):
        rolling_compare(rng.standard_normal((50, 2)), 1)
    with pytest.raises(RangeError):
        rolling_compare(rng.standard_normal((50, 2)), 26)
