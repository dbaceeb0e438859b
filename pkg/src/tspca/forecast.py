"""VAR / restricted VAR fitting and the rolling post-sample forecast comparison."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConditioningError, RangeError, StageError, TSPCAError
from .prewhiten import ARModel, fit_ar
from .segmentation import SCHEMA_VERSION, SegmentConfig, segment
from .timeseries import as_array

log = logging.getLogger(__name__)

DEFAULT_T_THRESHOLD = 2.0
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class VARModel:
    """``y_t = intercept + sum_k coefficient_matrices[k-1] @ y_{t-k} + e_t``.

    ``mask[i, j, k]`` is False where the coefficient of ``y_{j, t-k-1}`` in
    equation ``i`` was removed by :func:`restrict_var`. ``sample_start`` is
    the first (0-based) time index used as a regression target.
    """

    order: int
    coefficient_matrices: list[np.ndarray]
    intercept: np.ndarray
    sigma: np.ndarray = field(repr=False)
    sample_start: int = 0
    mask: np.ndarray | None = field(default=None, repr=False)
    aic: np.ndarray | None = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return len(self.intercept)

    def companion(self) -> np.ndarray:
        p, k = self.p, self.order
        C = np.zeros((p * k, p * k))
        C[:p] = np.hstack(self.coefficient_matrices)
        C[p:, :-p] = np.eye(p * (k - 1))
        return C


def _var_design(Y: np.ndarray, order: int, start: int) -> np.ndarray:
    n = Y.shape[0]
    cols = [np.ones((n - start, 1))]
    cols += [Y[start - k : n - k] for k in range(1, order + 1)]
    return np.hstack(cols)


def _solve(X: np.ndarray, T: np.ndarray) -> np.ndarray:
    G = X.T @ X
    if X.shape[1] > 1:
        # condition number of the correlation form, so the scale of the
        # data and the intercept column do not matter
        d = np.sqrt(np.diag(G))
        if np.any(d == 0) or np.linalg.cond(G / np.outer(d, d)) > MAX_CONDITION:
            raise ConditioningError("regressor Gram matrix is near singular")
    beta, *_ = np.linalg.lstsq(X, T, rcond=None)
    return beta


def _unpack(beta: np.ndarray, p: int, order: int):
    intercept = beta[0].copy()
    mats = [beta[1 + k * p : 1 + (k + 1) * p].T.copy() for k in range(order)]
    return intercept, mats


def fit_var(Y, max_order: int = 5) -> VARModel:
    """Least-squares VAR with AIC order selection over ``0..max_order``.

    Every order is fitted on ``t = max_order..n-1`` and scored with
    ``n_eff * log det(Sigma) + 2 * p^2 * order``; ties go to the smaller
    order. Orders whose design is near singular get an infinite score;
    :class:`ConditioningError` is raised only if no order can be fitted.
    """
    Y = as_array(Y)
    n, p = Y.shape
    if max_order < 0:
        raise RangeError("max_order must be nonnegative")
    if n <= p * max_order + 10:
        raise RangeError(f"n={n} too small for VAR order {max_order} with p={p}")
    start = max_order
    T = Y[start:]
    n_eff = T.shape[0]
    X_full = _var_design(Y, max_order, start)
    aic = np.full(max_order + 1, np.inf)
    fits = []
    for order in range(max_order + 1):
        X = X_full[:, : 1 + p * order]
        try:
            beta = _solve(X, T)
        except ConditioningError:
            # lagged copies can make a long design exactly collinear; such
            # orders drop out of the selection
            if order == 0:
                raise
            fits.append(None)
            continue
        U = T - X @ beta
        sigma = U.T @ U / n_eff
        sign, logdet = np.linalg.slogdet(sigma)
        aic[order] = (n_eff * logdet if sign > 0 else -np.inf) + 2 * p * p * order
        fits.append((beta, sigma))
    best = int(np.argmin(aic))
    beta, sigma = fits[best]
    intercept, mats = _unpack(beta, p, best)
    return VARModel(best, mats, intercept, sigma, sample_start=start, aic=aic)


def restrict_var(model: VARModel, Y, t_threshold: float = DEFAULT_T_THRESHOLD) -> VARModel:
    """Zero lag coefficients with ``|t| < t_threshold`` and refit each
    equation by least squares on the surviving regressors.

    The intercept is always kept; an equation that loses every lag
    regressor becomes intercept-only.
    """
    Y = as_array(Y)
    p, order = model.p, model.order
    start = max(model.sample_start, order)
    if order == 0:
        return model
    T = Y[start:]
    X = _var_design(Y, order, start)
    n_eff, k = X.shape
    XtX_inv = np.linalg.pinv(X.T @ X)
    beta_full = np.vstack([model.intercept] + [A.T for A in model.coefficient_matrices])
    U = T - X @ beta_full
    dof = max(n_eff - k, 1)
    s2 = np.sum(U**2, axis=0) / dof
    se = np.sqrt(np.outer(np.diag(XtX_inv), s2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, np.abs(beta_full) / se, np.inf)
    keep = tstat >= t_threshold
    keep[0] = True

    beta = np.zeros_like(beta_full)
    for i in range(p):
        cols = np.flatnonzero(keep[:, i])
        beta[cols, i] = _solve(X[:, cols], T[:, i])
    U = T - X @ beta
    intercept, mats = _unpack(beta, p, order)
    mask = np.stack([keep[1 + j * p : 1 + (j + 1) * p].T for j in range(order)], axis=2)
    return VARModel(order, mats, intercept, U.T @ U / n_eff, sample_start=start, mask=mask)


def _as_var(model) -> VARModel:
    if isinstance(model, VARModel):
        return model
    if isinstance(model, ARModel):
        mats = [np.array([[c]]) for c in model.coefficients]
        return VARModel(model.order, mats, np.array([model.intercept]),
                        np.array([[model.noise_variance]]))
    raise TypeError(f"cannot forecast with {type(model).__name__}")


def forecast(model, history, horizon: int) -> np.ndarray:
    """Plug-in forecast ``horizon`` steps past the end of ``history``.

    Multi-step forecasts feed earlier forecasts back in as observations.
    """
    m = _as_var(model)
    hist = as_array(history)
    if m.p == 1 and hist.shape[1] != 1:
        hist = hist.reshape(-1, 1)
    if horizon < 1:
        raise RangeError("horizon must be at least 1")
    if hist.shape[0] < m.order:
        raise RangeError(f"history of length {hist.shape[0]} shorter than order {m.order}")
    lags = [hist[-k] for k in range(1, m.order + 1)]
    yhat = m.intercept
    for _ in range(horizon):
        yhat = m.intercept + sum((A @ y for A, y in zip(m.coefficient_matrices, lags)), np.zeros(m.p))
        lags = [yhat] + lags[:-1] if m.order else lags
    return yhat


@dataclass(frozen=True, eq=False)
class ForecastReport:
    method: str
    per_series_mse: dict[int, np.ndarray]
    mean_mse: dict[int, float]
    sd_mse: dict[int, float]

    @classmethod
    def from_errors(cls, method: str, errors: dict[int, np.ndarray]) -> "ForecastReport":
        per = {h: np.mean(e**2, axis=0) for h, e in errors.items()}
        mean = {h: float(np.mean(v)) for h, v in per.items()}
        sd = {h: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for h, v in per.items()}
        return cls(method, per, mean, sd)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_series_mse": {str(h): v.tolist() for h, v in self.per_series_mse.items()},
            "mean_mse": {str(h): v for h, v in self.mean_mse.items()},
            "sd_mse": {str(h): v for h, v in self.sd_mse.items()},
        }


class _Forecaster:
    """Fits one method on a training window and forecasts 1 and 2 steps."""

    def __init__(self, method: str, max_order: int, t_threshold: float, seg_cfg: SegmentConfig):
        self.method = method
        self.max_order = max_order
        self.t_threshold = t_threshold
        self.seg_cfg = seg_cfg

    def __call__(self, train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if np.all(np.ptp(train, axis=0) == 0):
            # no variation to model: every method reduces to the constant
            return train[-1].copy(), train[-1].copy()
        if self.method in ("var", "rvar"):
            model = fit_var(train, self.max_order)
            if self.method == "rvar":
                model = restrict_var(model, train, self.t_threshold)
            return forecast(model, train, 1), forecast(model, train, 2)
        if self.method == "segmentation":
            return self._segmented(train)
        raise ValueError(f"unknown method {self.method!r}")

    def _segmented(self, train: np.ndarray):
        seg = segment(train, self.seg_cfg)
        X = seg.transform(train)
        f1, f2 = np.empty(X.shape[1]), np.empty(X.shape[1])
        for block in seg.blocks:
            Xb = X[:, block]
            if Xb.shape[1] == 1:
                model = fit_ar(Xb[:, 0], self.max_order)
            else:
                model = fit_var(Xb, self.max_order)
            f1[block] = forecast(model, Xb, 1)
            f2[block] = forecast(model, Xb, 2)
        return seg.inverse_transform(f1[None])[0], seg.inverse_transform(f2[None])[0]


def _difference(Y: np.ndarray, lag: int) -> np.ndarray:
    return Y[lag:] - Y[:-lag]


def rolling_compare(Y, holdout_d: int, methods=("var", "rvar", "segmentation"),
                    seg_cfg: SegmentConfig | None = None, max_order: int = 5,
                    t_threshold: float = DEFAULT_T_THRESHOLD,
                    seasonal_lag: int | None = None) -> list[ForecastReport]:
    """Expanding-window one- and two-step forecast comparison.

    Each of the last ``holdout_d`` observations is forecast one step ahead
    from all data before it and two steps ahead from all data before its
    predecessor; every method is refitted on each window. With
    ``seasonal_lag`` the models are fitted to ``y_t - y_{t-L}`` and the
    forecasts are mapped back to levels.
    """
    Y = as_array(Y)
    n = Y.shape[0]
    if holdout_d < 2:
        raise RangeError("holdout_d must be at least 2")
    if 2 * holdout_d > n:
        raise RangeError(f"holdout_d={holdout_d} exceeds n/2 for n={n}")
    seg_cfg = seg_cfg or SegmentConfig()
    L = seasonal_lag or 0

    reports = []
    for method in methods:
        fc = _Forecaster(method, max_order, t_threshold, seg_cfg)
        errors = {1: np.empty((holdout_d, Y.shape[1])), 2: np.empty((holdout_d, Y.shape[1]))}
        # window ending at T (exclusive) forecasts y_T (h=1) and y_{T+1} (h=2)
        for T in range(n - holdout_d - 1, n):
            train = Y[:T]
            try:
                if L:
                    d1, d2 = fc(_difference(train, L))
                    y1 = d1 + Y[T - L]
                    y2 = d2 + (Y[T + 1 - L] if L > 1 else y1)
                else:
                    y1, y2 = fc(train)
            except (TSPCAError, np.linalg.LinAlgError) as exc:
                raise StageError(f"{method} window ending at {T}", exc) from exc
            if T >= n - holdout_d:
                errors[1][T - (n - holdout_d)] = y1 - Y[T]
            if T + 1 < n:
                errors[2][T + 1 - (n - holdout_d)] = y2 - Y[T + 1]
        reports.append(ForecastReport.from_errors(method, errors))
    return reports


def reports_to_csv(reports: list[ForecastReport], names=None) -> str:
    """Rows are series plus ``mean`` and ``sd``; columns ``method_h``."""
    p = len(next(iter(reports[0].per_series_mse.values())))
    names = list(names) if names is not None else [f"c{i + 1}" for i in range(p)]
    header = ["series"] + [f"{r.method}_h{h}" for r in reports for h in (1, 2)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, name in enumerate(names):
        w.writerow([name] + [repr(float(r.per_series_mse[h][i])) for r in reports for h in (1, 2)])
    w.writerow(["mean"] + [repr(r.mean_mse[h]) for r in reports for h in (1, 2)])
    w.writerow(["sd"] + [repr(r.sd_mse[h]) for r in reports for h in (1, 2)])
    return buf.getvalue()


def reports_to_json(reports: list[ForecastReport]) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "reports": [r.to_dict() for r in reports]}, indent=2)
