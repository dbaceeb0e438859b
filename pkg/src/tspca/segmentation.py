"""The segmentation pipeline.

standardize -> W matrix -> eigenvectors -> rotate -> prewhiten ->
pairwise tests -> partition -> permuted transformation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .exceptions import ContractError, RangeError, StageError, TSPCAError
from .grouping import (
    ConnectivityGraph,
    GroupPartition,
    PairStatistic,
    connectivity,
    default_max_lag,
    union_groups,
)
from .linalg import sym_eigen
from .prewhiten import DEFAULT_MAX_ORDER, prewhiten
from .timeseries import TimeSeriesMatrix, as_array, as_series, standardize
from .wmatrix import ThresholdConfig, WMatrix, build_w, build_w_volatility, predictive_strength

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SegmentConfig:
    k0: int = 5
    m: int | None = None
    method: Literal["ratio", "fdr"] = "ratio"
    c0: float = 0.75
    beta: float = 0.01
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    prewhiten_max_order: int = DEFAULT_MAX_ORDER
    n_edges: int | None = None

    def __post_init__(self):
        if self.method not in ("ratio", "fdr"):
            raise ContractError(f"unknown method {self.method!r}")
        if self.k0 < 1:
            raise RangeError("k0 must be at least 1")
        if self.m is not None and self.m < 1:
            raise RangeError("m must be at least 1")

    def max_lag(self, n: int, p: int) -> int:
        return self.m if self.m is not None else default_max_lag(n, p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["threshold"] = self.threshold.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentConfig":
        d = dict(d)
        d["threshold"] = ThresholdConfig.from_dict(d["threshold"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """Output of :func:`segment`.

    ``gamma`` holds the eigenvectors in eigenvalue order; ``order`` is the
    column permutation that makes each group contiguous, so that
    ``transform_B = gamma[:, order].T @ whitener`` and
    ``x_hat = Y @ transform_B.T``. Groups in ``partition`` index columns of
    ``gamma``; ``blocks`` gives the matching column ranges of ``x_hat``.
    """

    gamma: np.ndarray
    whitener: np.ndarray
    transform_B: np.ndarray
    eigenvalues: np.ndarray
    order: np.ndarray
    partition: GroupPartition
    graph: ConnectivityGraph
    config: SegmentConfig
    n_selected: int
    omega_y: float | None = None
    omega_x: float | None = None
    flavor: str = "plugin"
    x_hat: TimeSeriesMatrix | None = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return self.gamma.shape[0]

    @property
    def blocks(self) -> list[slice]:
        out, start = [], 0
        for size in self.partition.sizes:
            out.append(slice(start, start + size))
            start += size
        return out

    @property
    def a_hat(self) -> np.ndarray:
        """Permuted eigenvector matrix with group members contiguous."""
        return self.gamma[:, self.order]

    def group_bases(self) -> list[np.ndarray]:
        """Columns of ``gamma`` spanning each estimated group (standardized space)."""
        return [self.gamma[:, list(g)] for g in self.partition.groups]

    def transform(self, Y) -> np.ndarray:
        return as_array(Y) @ self.transform_B.T

    def inverse_transform(self, X) -> np.ndarray:
        return np.linalg.solve(self.transform_B, as_array(X).T).T

    def to_dict(self) -> dict:
        edges = set(self.graph.edges)
        pairs = [
            {"i": i, "j": j, "L": s.max_corr, "h_star": s.argmax_lag, "P": s.pvalue}
            for (i, j), s in sorted(self.graph.statistics.items())
        ]
        return {
            "schema_version": SCHEMA_VERSION,
            "flavor": self.flavor,
            "p": self.p,
            "gamma": self.gamma.tolist(),
            "whitener": self.whitener.tolist(),
            "transform_B": self.transform_B.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "order": self.order.tolist(),
            "groups": [list(g) for g in self.partition.groups],
            "m": self.graph.m,
            "n_selected": self.n_selected,
            "edges": [e for e in pairs if (e["i"], e["j"]) in edges],
            "pairs": pairs,
            "config": self.config.to_dict(),
            "omega": {"y": self.omega_y, "x": self.omega_x},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentationResult":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ContractError(f"unsupported schema_version {d.get('schema_version')!r}")
        p = d["p"]
        stats = {
            (e["i"], e["j"]): PairStatistic(e["L"], e["h_star"], e["P"]) for e in d["pairs"]
        }
        edges = tuple((e["i"], e["j"]) for e in d["edges"])
        return cls(
            gamma=np.array(d["gamma"], dtype=float).reshape(p, p),
            whitener=np.array(d["whitener"], dtype=float).reshape(p, p),
            transform_B=np.array(d["transform_B"], dtype=float).reshape(p, p),
            eigenvalues=np.array(d["eigenvalues"], dtype=float),
            order=np.array(d["order"], dtype=int),
            partition=GroupPartition(tuple(tuple(g) for g in d["groups"])),
            graph=ConnectivityGraph(p, edges, stats, m=d["m"]),
            config=SegmentConfig.from_dict(d["config"]),
            n_selected=d["n_selected"],
            omega_y=d["omega"]["y"],
            omega_x=d["omega"]["x"],
            flavor=d["flavor"],
        )

    @classmethod
    def from_json(cls, text: str) -> "SegmentationResult":
        return cls.from_dict(json.loads(text))


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except TSPCAError as exc:
        raise StageError(name, exc) from exc


def _check_sizes(n: int, p: int, cfg: SegmentConfig, m: int) -> None:
    need = max(4 * m, 10 * cfg.prewhiten_max_order, cfg.k0 + 1)
    if n <= need:
        raise RangeError(
            f"n={n} too small: need n > max(4m={4 * m}, "
            f"10*max_ar={10 * cfg.prewhiten_max_order}, k0+1={cfg.k0 + 1})"
        )


def _finish(Y, Ystd, whitener, W: WMatrix, cfg: SegmentConfig, squared: bool) -> SegmentationResult:
    n, p = Y.n, Y.p
    eig = _stage("eigen", sym_eigen, W.matrix)
    gamma = eig.eigenvectors
    m = cfg.max_lag(n, p)

    if p == 1:
        graph = ConnectivityGraph(1, (), {}, m=m)
        partition, r = GroupPartition(((0,),)), 0
    else:
        _check_sizes(n, p, cfg, m)
        Z = Ystd.values @ gamma
        if squared:
            Z = Z**2
        Zw = _stage("prewhiten", prewhiten, Z, cfg.prewhiten_max_order)
        graph, r = _stage(
            "cross-correlation", connectivity, Zw, m,
            method=cfg.method, c0=cfg.c0, beta=cfg.beta, n_edges=cfg.n_edges,
        )
        partition = union_groups(p, graph.edges)

    order = np.array([i for g in partition.groups for i in g], dtype=int)
    B = gamma[:, order].T @ whitener
    x_hat = TimeSeriesMatrix(Y.values @ B.T, tuple(f"x{i + 1}" for i in range(p)))

    omega_y = omega_x = None
    if W.flavor != "volatility":
        omega_y = predictive_strength(W)
        omega_x = predictive_strength(build_w(x_hat, cfg.k0, cfg.threshold))
        if abs(omega_y - omega_x) > 1e-6 * max(1.0, abs(omega_y)):
            log.warning("predictive strength differs between y (%g) and x_hat (%g)", omega_y, omega_x)
        else:
            log.debug("predictive strength %g (y) vs %g (x_hat)", omega_y, omega_x)

    return SegmentationResult(
        gamma=gamma,
        whitener=whitener,
        transform_B=B,
        eigenvalues=eig.eigenvalues,
        order=order,
        partition=partition,
        graph=graph,
        config=cfg,
        n_selected=r,
        omega_y=omega_y,
        omega_x=omega_x,
        flavor=W.flavor,
        x_hat=x_hat,
    )


def segment(Y, cfg: SegmentConfig | None = None) -> SegmentationResult:
    """Segment ``Y`` into groups of mutually uncorrelated components.

    Parameters
    ----------
    Y : TimeSeriesMatrix or array_like, shape (n, p)
    cfg : SegmentConfig, optional
        Defaults: ``k0=5``, ``m = round(10 log10(n/p))``, ratio rule with
        ``c0=0.75``, AR prewhitening up to order 5, no thresholding.

    Raises
    ------
    StageError
        Wrapping the failure of a pipeline stage; the stage name is in
        ``.stage`` and the original exception in ``.cause``.
    """
    cfg = cfg or SegmentConfig()
    Y = as_series(Y)
    Ystd, whitener = _stage("standardize", standardize, Y)
    W = _stage("build_w", build_w, Ystd, cfg.k0, cfg.threshold)
    return _finish(Y, Ystd, whitener, W, cfg, squared=False)


def segment_volatility(Y, cfg: SegmentConfig | None = None) -> SegmentationResult:
    """Segment a volatility process.

    The transformation comes from the eigenvectors of the ball-indicator
    matrix of :func:`build_w_volatility`; grouping tests cross correlations
    of the squared transformed components.
    """
    cfg = cfg or SegmentConfig()
    Y = as_series(Y)
    Ystd, whitener = _stage("standardize", standardize, Y)
    W = _stage("build_w", build_w_volatility, Ystd, cfg.k0)
    return _finish(Y, Ystd, whitener, W, cfg, squared=True)
