"""Observation matrices, CSV ingestion and second-order sample statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DegenerateSeriesError, ParseError, RangeError
from .linalg import inv_sqrt


@dataclass(frozen=True, eq=False)
class TimeSeriesMatrix:
    """An ``n x p`` observation matrix; row ``t`` holds ``y_t``.

    ``values`` is copied and made read-only on construction.
    """

    values: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {values.shape}")
        n, p = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise ValueError("need at least one column")
        if not np.all(np.isfinite(values)):
            raise ValueError("observations must be finite")
        values.setflags(write=False)
        names = tuple(self.names) if self.names else tuple(f"c{i + 1}" for i in range(p))
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def with_values(self, values, names=None) -> "TimeSeriesMatrix":
        return TimeSeriesMatrix(values, self.names if names is None else names)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"TimeSeriesMatrix(n={self.n}, p={self.p}, names={list(self.names)!r})"


@dataclass(frozen=True, eq=False)
class LaggedCovariance:
    lag: int
    matrix: np.ndarray


def as_array(Y) -> np.ndarray:
    """Return the raw ``n x p`` float array behind ``Y``."""
    if isinstance(Y, TimeSeriesMatrix):
        return Y.values
    arr = np.asarray(Y, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def as_series(Y, names: Sequence[str] | None = None) -> TimeSeriesMatrix:
    if isinstance(Y, TimeSeriesMatrix):
        return Y
    return TimeSeriesMatrix(np.asarray(Y, dtype=float), tuple(names or ()))


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell.strip()!r} at row {row}, column {col}") from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite cell {cell.strip()!r} at row {row}, column {col}")
    return value


def _looks_numeric(row: list[str]) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def load_csv(path, has_header: bool | None = None) -> TimeSeriesMatrix:
    """Read a comma-separated file with rows in time order.

    With ``has_header=None`` the first row is taken as a header when any of
    its cells fails to parse as a number. Row and column numbers in error
    messages are 1-based and count the header line.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: no rows")

    if has_header is None:
        has_header = not _looks_numeric(rows[0])
    header = [c.strip() for c in rows[0]] if has_header else None
    body = rows[1:] if has_header else rows
    offset = 2 if has_header else 1
    if not body:
        raise ParseError(f"{path}: no rows")

    width = len(header) if header is not None else len(body[0])
    values = np.empty((len(body), width))
    for r, row in enumerate(body):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {r + offset} has {len(row)} fields, expected {width}"
            )
        for c, cell in enumerate(row):
            values[r, c] = _parse_float(cell, r + offset, c + 1)
    if values.shape[0] < 2:
        raise ParseError(f"{path}: need at least 2 rows, got {values.shape[0]}")
    return TimeSeriesMatrix(values, tuple(header) if header else ())


def save_csv(path, Y, names: Sequence[str] | None = None) -> None:
    arr = as_array(Y)
    if names is None:
        names = Y.names if isinstance(Y, TimeSeriesMatrix) else [f"c{i + 1}" for i in range(arr.shape[1])]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows([repr(float(v)) for v in row] for row in arr)


def centered(Y) -> np.ndarray:
    arr = as_array(Y)
    return arr - arr.mean(axis=0)


def autocov_matrices(Y, max_lag: int) -> list[np.ndarray]:
    """Sample autocovariances at lags ``0..max_lag`` (divisor ``n``)."""
    Yc = centered(Y)
    n = Yc.shape[0]
    if not 0 <= max_lag < n:
        raise RangeError(f"lag {max_lag} outside [0, {n - 1}]")
    return [Yc[k:].T @ Yc[: n - k] / n for k in range(max_lag + 1)]


def sample_autocov(Y, k: int) -> LaggedCovariance:
    """Sample autocovariance ``(1/n) sum_t (y_{t+k} - ybar)(y_t - ybar)'``.

    The divisor is ``n`` at every lag, which keeps the sequence of
    estimates positive semi-definite.
    """
    Yc = centered(Y)
    n = Yc.shape[0]
    if not 0 <= k < n:
        raise RangeError(f"lag {k} outside [0, {n - 1}]")
    S = Yc[k:].T @ Yc[: n - k] / n
    if k == 0:
        S = (S + S.T) / 2
    return LaggedCovariance(k, S)


def standardize(Y) -> tuple[TimeSeriesMatrix, np.ndarray]:
    """Center ``Y`` and rotate it to identity sample covariance.

    Returns the standardized series and the symmetric whitener
    ``Sigma_y(0)^{-1/2}``; ``Ystd = (Y - ybar) @ whitener``.

    Raises
    ------
    SingularCovarianceError
        If the smallest eigenvalue of the sample covariance is below
        ``1e-10`` times the largest.
    """
    Y = as_series(Y)
    S0 = sample_autocov(Y, 0).matrix
    whitener = inv_sqrt(S0)
    return Y.with_values(centered(Y) @ whitener), whitener


def cross_corr(Z, i: int, j: int, h: int) -> float:
    """Sample cross correlation of ``z_{i,t+h}`` with ``z_{j,t}``."""
    arr = as_array(Z)
    n = arr.shape[0]
    if abs(h) >= n:
        raise RangeError(f"|lag| {abs(h)} must be below n={n}")
    zi = arr[:, i] - arr[:, i].mean()
    zj = arr[:, j] - arr[:, j].mean()
    denom = np.sqrt(np.dot(zi, zi) * np.dot(zj, zj))
    if denom == 0.0:
        bad = i if not zi.any() else j
        raise DegenerateSeriesError(f"correlation undefined: column {bad} has zero variance")
    if h >= 0:
        num = np.dot(zi[h:], zj[: n - h])
    else:
        num = np.dot(zi[: n + h], zj[-h:])
    return float(np.clip(num / denom, -1.0, 1.0))


def cross_corr_matrices(Z, m: int) -> np.ndarray:
    """All sample cross correlations for lags ``-m..m``.

    Returns an array ``R`` of shape ``(2m+1, p, p)`` with
    ``R[h + m, i, j] = cross_corr(Z, i, j, h)``.
    """
    arr = as_array(Z)
    n, p = arr.shape
    if not 0 <= m < n:
        raise RangeError(f"max lag {m} outside [0, {n - 1}]")
    Zc = arr - arr.mean(axis=0)
    ss = np.einsum("ij,ij->j", Zc, Zc)
    if np.any(ss == 0.0):
        bad = int(np.flatnonzero(ss == 0.0)[0])
        raise DegenerateSeriesError(f"correlation undefined: column {bad} has zero variance")
    scale = np.sqrt(np.outer(ss, ss))
    R = np.empty((2 * m + 1, p, p))
    for h in range(m + 1):
        C = Zc[h:].T @ Zc[: n - h] / scale
        R[m + h] = C
        R[m - h] = C.T
    return np.clip(R, -1.0, 1.0)
