"""Univariate AR fitting with AIC order selection, used for prewhitening."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateSeriesError, RangeError, StageError
from .timeseries import TimeSeriesMatrix, as_array

DEFAULT_MAX_ORDER = 5


@dataclass(frozen=True, eq=False)
class ARModel:
    """``y_t = intercept + sum_k coefficients[k-1] * y_{t-k} + e_t``.

    ``residuals`` are the in-sample residuals on ``t = sample_start..n-1``
    (0-based), the sample shared by every candidate order during selection.
    """

    order: int
    coefficients: np.ndarray
    intercept: float
    noise_variance: float
    aic: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    sample_start: int = 0

    def predict_next(self, history) -> float:
        history = np.asarray(history, dtype=float)
        if len(history) < self.order:
            raise RangeError(f"need {self.order} past values, got {len(history)}")
        if self.order == 0:
            return self.intercept
        lags = history[::-1][: self.order]
        return float(self.intercept + self.coefficients @ lags)


def lag_design(y: np.ndarray, order: int, start: int) -> np.ndarray:
    """Regressors ``[1, y_{t-1}, ..., y_{t-order}]`` for ``t = start..n-1``."""
    n = len(y)
    cols = [np.ones(n - start)]
    cols += [y[start - k : n - k] for k in range(1, order + 1)]
    return np.column_stack(cols)


def fit_ar(y, max_order: int = DEFAULT_MAX_ORDER) -> ARModel:
    """Fit AR(0..max_order) by conditional least squares and keep the AIC
    minimizer.

    Every candidate is fitted on ``t = max_order..n-1`` so that the AIC
    values ``n_eff * log(sigma2) + 2 * order`` are comparable. Ties go to
    the smaller order.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if max_order < 0:
        raise RangeError("max_order must be nonnegative")
    if n <= 10 * max_order or n < 3:
        raise RangeError(f"series of length {n} too short for max AR order {max_order}")
    if np.var(y) <= 1e-24 * (1.0 + np.mean(y**2)):
        raise DegenerateSeriesError("series is constant; AR noise variance would be zero")

    start = max_order
    target = y[start:]
    n_eff = len(target)
    tiny = np.finfo(float).tiny
    X_full = lag_design(y, max_order, start)
    fits = []
    aic = np.empty(max_order + 1)
    for order in range(max_order + 1):
        X = X_full[:, : order + 1]
        beta, *_ = np.linalg.lstsq(X, target, rcond=None)
        resid = target - X @ beta
        sigma2 = max(float(resid @ resid) / n_eff, tiny)
        aic[order] = n_eff * np.log(sigma2) + 2 * order
        fits.append((beta, resid, sigma2))

    best = int(np.argmin(aic))
    beta, resid, sigma2 = fits[best]
    return ARModel(
        order=best,
        coefficients=beta[1:].copy(),
        intercept=float(beta[0]),
        noise_variance=sigma2,
        aic=aic,
        residuals=resid,
        sample_start=start,
    )


def prewhiten(Z, max_order: int = DEFAULT_MAX_ORDER) -> TimeSeriesMatrix:
    """Replace each column by its AR residuals.

    All columns share the residual window ``t = max_order..n-1`` so the
    result has ``n - max_order`` rows.
    """
    arr = as_array(Z)
    names = Z.names if isinstance(Z, TimeSeriesMatrix) else None
    out = np.empty((arr.shape[0] - max_order, arr.shape[1]))
    for i in range(arr.shape[1]):
        try:
            out[:, i] = fit_ar(arr[:, i], max_order).residuals
        except (DegenerateSeriesError, RangeError) as exc:
            raise StageError(f"prewhiten column {i}", exc) from exc
    return TimeSeriesMatrix(out, names or ())
