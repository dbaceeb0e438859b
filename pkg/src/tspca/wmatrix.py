"""Lag-aggregated autocovariance matrices.

Three estimators are provided:

* plug-in: ``I + sum_k S(k) S(k)'`` over lags ``1..k0``;
* thresholded: the same with each ``S(k)`` hard-thresholded entrywise,
  for settings where ``p`` is large relative to ``n``;
* volatility: sums of squared conditional second moments over a family of
  balls ``{u : |u| <= |y_s|}``, used to segment volatility processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import ContractError, RangeError
from .timeseries import as_array, autocov_matrices

Flavor = Literal["plugin", "thresholded", "volatility"]


@dataclass(frozen=True, eq=False)
class WMatrix:
    matrix: np.ndarray
    k0: int
    flavor: Flavor
    threshold_u: float | None = None

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ThresholdConfig:
    """How the entrywise threshold ``u`` is chosen.

    ``mode`` is one of

    ``"none"``
        no thresholding (``u = 0``);
    ``"fixed"``
        ``u = value``;
    ``"polynomial"``
        ``u = M * p**exponent / sqrt(n)``, for polynomial-tailed data where
        ``exponent`` stands in for ``2/l`` with ``l`` the tail index;
    ``"logarithmic"``
        ``u = M * sqrt(log(p) / n)``, for light-tailed data.
    """

    mode: Literal["none", "fixed", "polynomial", "logarithmic"] = "none"
    value: float = 0.0
    M: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "fixed", "polynomial", "logarithmic"):
            raise ContractError(f"unknown threshold mode {self.mode!r}")
        if self.value < 0:
            raise ContractError("threshold must be nonnegative")
        if self.mode in ("polynomial", "logarithmic") and self.M <= 0:
            raise ContractError("threshold constant M must be positive")

    @classmethod
    def fixed(cls, u: float) -> "ThresholdConfig":
        return cls("fixed", value=float(u))

    @classmethod
    def polynomial(cls, M: float, exponent: float) -> "ThresholdConfig":
        return cls("polynomial", M=float(M), exponent=float(exponent))

    @classmethod
    def logarithmic(cls, M: float) -> "ThresholdConfig":
        return cls("logarithmic", M=float(M))

    def resolve(self, n: int, p: int) -> float:
        if self.mode == "none":
            return 0.0
        if self.mode == "fixed":
            return self.value
        if self.mode == "polynomial":
            return self.M * p**self.exponent / np.sqrt(n)
        return self.M * np.sqrt(np.log(p) / n)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value, "M": self.M, "exponent": self.exponent}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdConfig":
        return cls(d["mode"], value=d["value"], M=d["M"], exponent=d["exponent"])

    @classmethod
    def parse(cls, text: str) -> "ThresholdConfig":
        """Parse ``none``, ``fixed:U``, ``log:M`` or ``poly:M,E``."""
        kind, _, arg = text.partition(":")
        try:
            if kind == "none" and not arg:
                return cls()
            if kind == "fixed":
                return cls.fixed(float(arg))
            if kind == "log":
                return cls.logarithmic(float(arg))
            if kind == "poly":
                M, E = arg.split(",")
                return cls.polynomial(float(M), float(E))
        except ValueError:
            pass
        raise ContractError(f"cannot parse threshold spec {text!r}")


def threshold_matrix(S, u: float) -> np.ndarray:
    """Zero every entry with ``|s_ij| < u``; entries equal to ``u`` are kept."""
    if u < 0:
        raise ContractError("threshold must be nonnegative")
    S = np.asarray(S, dtype=float)
    return np.where(np.abs(S) >= u, S, 0.0)


def _check_horizon(n: int, k0: int) -> None:
    if not 1 <= k0 < n:
        raise RangeError(f"lag horizon k0={k0} outside [1, {n - 1}]")


def _aggregate(autocovs, p: int) -> np.ndarray:
    W = np.eye(p)
    for S in autocovs:
        W = W + S @ S.T
    return (W + W.T) / 2


def build_w_plugin(Y, k0: int) -> WMatrix:
    """Plug-in estimator ``I_p + sum_{k=1}^{k0} S(k) S(k)'``.

    ``Y`` is expected to be standardized already; this is not checked.
    """
    arr = as_array(Y)
    n, p = arr.shape
    _check_horizon(n, k0)
    covs = autocov_matrices(arr, k0)[1:]
    return WMatrix(_aggregate(covs, p), k0, "plugin")


def build_w_thresholded(Y, k0: int, cfg: ThresholdConfig) -> WMatrix:
    """As :func:`build_w_plugin` but with every lagged autocovariance
    hard-thresholded at the level resolved from ``cfg``."""
    arr = as_array(Y)
    n, p = arr.shape
    _check_horizon(n, k0)
    u = cfg.resolve(n, p)
    covs = autocov_matrices(arr, k0)[1:]
    if u > 0:
        covs = [threshold_matrix(S, u) for S in covs]
    return WMatrix(_aggregate(covs, p), k0, "thresholded", threshold_u=float(u))


def build_w(Y, k0: int, cfg: ThresholdConfig | None = None) -> WMatrix:
    if cfg is None or cfg.mode == "none":
        return build_w_plugin(Y, k0)
    return build_w_thresholded(Y, k0, cfg)


def build_w_volatility(Y, k0: int) -> WMatrix:
    """Volatility variant: ``sum_B sum_k {(n-k)^{-1} sum_t y_t y_t' 1(y_{t-k} in B)}^2``.

    ``B`` ranges over the distinct balls ``{u : |u|_2 <= |y_s|_2}``,
    ``s = 1..n``. Second moments are uncentered: the series is assumed to
    be a martingale difference.
    """
    arr = as_array(Y)
    n, p = arr.shape
    _check_horizon(n, k0)
    norms = np.linalg.norm(arr, axis=1)
    radii = np.unique(norms)
    outer = arr[:, :, None] * arr[:, None, :]
    W = np.zeros((p, p))
    for k in range(1, k0 + 1):
        keys = norms[: n - k]
        order = np.argsort(keys, kind="stable")
        # partial sums of y_t y_t' over t sorted by |y_{t-k}|; a ball of
        # radius r collects every t whose key is <= r
        csum = np.concatenate([np.zeros((1, p, p)), np.cumsum(outer[k:][order], axis=0)])
        counts = np.searchsorted(keys[order], radii, side="right")
        M = csum[counts] / (n - k)
        W += np.einsum("bij,bjk->ik", M, M)
    return WMatrix((W + W.T) / 2, k0, "volatility")


def predictive_strength(W: WMatrix) -> float:
    """``tr(W) - p``: the lag-aggregated squared autocorrelation mass."""
    if W.flavor == "volatility":
        raise ContractError("predictive strength is defined for autocovariance W only")
    return float(np.trace(W.matrix) - W.p)
