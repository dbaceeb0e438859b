"""Connectivity tests between transformed components and the resulting partition.

Two components are *connected* when their cross correlations over lags
``-m..m`` are jointly nonzero. Connected pairs are found either with the
ratio of successive sorted maximum cross correlations or with a
Simes/FDR multiple test, and the partition is the set of connected
components of the resulting graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .exceptions import ContractError, RangeError
from .timeseries import as_array, cross_corr, cross_corr_matrices

RATIO_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class PairStatistic:
    max_corr: float
    argmax_lag: int
    pvalue: float | None = None


@dataclass(frozen=True, eq=False)
class ConnectivityGraph:
    """Vertices ``0..p-1``, selected edges ``(i, j)`` with ``i < j``, and
    the test statistics of every pair.

    ``rho`` optionally holds the full ``(2m+1, p, p)`` cross-correlation
    array the statistics were computed from.
    """

    p: int
    edges: tuple[tuple[int, int], ...]
    statistics: dict[tuple[int, int], PairStatistic]
    m: int = 0
    rho: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for i, j in self.edges:
            if not 0 <= i < j < self.p:
                raise ContractError(f"invalid edge ({i}, {j}) for p={self.p}")


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups covering ``0..p-1``, ordered by smallest member."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups if len(g))
        groups = tuple(sorted(groups, key=lambda g: g[0]))
        members = [i for g in groups for i in g]
        if sorted(members) != list(range(len(members))):
            raise ContractError("groups must be disjoint and cover 0..p-1")
        object.__setattr__(self, "groups", groups)

    @property
    def p(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def q(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def labels(self) -> np.ndarray:
        out = np.empty(self.p, dtype=int)
        for k, g in enumerate(self.groups):
            out[list(g)] = k
        return out

    @classmethod
    def from_sizes(cls, sizes) -> "GroupPartition":
        bounds = np.cumsum([0, *sizes])
        return cls(tuple(tuple(range(a, b)) for a, b in zip(bounds[:-1], bounds[1:])))


def default_max_lag(n: int, p: int) -> int:
    """``10 * log10(n / p)`` rounded half-up, at least 1."""
    return max(1, int(math.floor(10 * math.log10(n / p) + 0.5)))


def _lag_search_order(m: int) -> np.ndarray:
    # 0, 1, -1, 2, -2, ...: the first maximizer in this order is the
    # smallest-|h| one, with h >= 0 preferred
    lags = [0]
    for h in range(1, m + 1):
        lags += [h, -h]
    return np.array(lags)


def max_cross_corr_stat(Zw, i: int, j: int, m: int) -> tuple[float, int]:
    """Maximum absolute cross correlation over lags ``|h| <= m`` and the
    lag attaining it."""
    n = as_array(Zw).shape[0]
    if not 0 <= m < n:
        raise RangeError(f"max lag {m} outside [0, {n - 1}]")
    best, best_h = -1.0, 0
    for h in _lag_search_order(m):
        r = abs(cross_corr(Zw, i, j, int(h)))
        if r > best:
            best, best_h = r, int(h)
    return best, best_h


def simes_combine(pvalues) -> float:
    """Simes combination ``min_j p_(j) K / j`` of ``K`` p-values, capped at 1."""
    ps = np.sort(np.asarray(pvalues, dtype=float))
    K = len(ps)
    return float(min(1.0, np.min(ps * K / np.arange(1, K + 1))))


def simes_pvalue(rhos, n: int) -> float:
    """P-value of "all cross correlations vanish" from lagged correlations
    of two (prewhitened) series of length ``n``.

    Each correlation is referred to ``N(0, 1/n)`` and the per-lag p-values
    are combined with :func:`simes_combine`.
    """
    rhos = np.asarray(rhos, dtype=float)
    return simes_combine(2 * norm.sf(np.sqrt(n) * np.abs(rhos)))


def ratio_select(L_sorted, c0: float = 0.75) -> int:
    """Number of leading pairs declared connected by the ratio rule.

    ``L_sorted`` holds the maximum cross correlations in descending order.
    Returns the smallest ``j`` in ``1..floor(c0 * p0)`` maximizing
    ``L_j / L_{j+1}``; denominators are floored at ``1e-12``.
    """
    L = np.asarray(L_sorted, dtype=float)
    p0 = len(L)
    if not 0 < c0 <= 1:
        raise ContractError(f"c0 must lie in (0, 1], got {c0}")
    if p0 == 0:
        raise ContractError("no pairs to rank")
    if p0 == 1:
        return 1
    upper = max(1, min(int(math.floor(c0 * p0 + 1e-12)), p0 - 1))
    ratios = L[:upper] / np.maximum(L[1 : upper + 1], RATIO_DENOM_FLOOR)
    return int(np.argmax(ratios)) + 1


def fdr_select(P_sorted, beta: float) -> int:
    """Largest ``k`` with ``P_(k) <= k * beta / p0``, or 0 if none."""
    if not 0 < beta < 1:
        raise ContractError(f"beta must lie in (0, 1), got {beta}")
    P = np.sort(np.asarray(P_sorted, dtype=float))
    p0 = len(P)
    if p0 == 0:
        return 0
    hits = np.flatnonzero(P <= np.arange(1, p0 + 1) * beta / p0)
    return int(hits[-1]) + 1 if len(hits) else 0


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller index as root
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo

    def components(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for a in range(len(self.parent)):
            out.setdefault(self.find(a), []).append(a)
        return list(out.values())


def union_groups(p: int, edges) -> GroupPartition:
    """Connected components of the graph on ``0..p-1`` with ``edges``."""
    uf = UnionFind(p)
    for i, j in edges:
        if not (0 <= i < p and 0 <= j < p):
            raise ContractError(f"edge ({i}, {j}) outside 0..{p - 1}")
        uf.union(i, j)
    return GroupPartition(tuple(tuple(c) for c in uf.components()))


def pair_statistics(Zw, m: int, with_pvalues: bool = True):
    """Statistics for every pair ``i < j`` of columns of ``Zw``.

    Returns ``(pairs, L, h_star, P, rho)`` where ``pairs`` lists ``(i, j)``
    in lexicographic order and ``rho`` is the cross-correlation array of
    :func:`cross_corr_matrices`.
    """
    arr = as_array(Zw)
    n, p = arr.shape
    rho = cross_corr_matrices(arr, m)
    iu, ju = np.triu_indices(p, k=1)
    pairs = list(zip(iu.tolist(), ju.tolist()))
    lags = _lag_search_order(m)
    absr = np.abs(rho[lags + m][:, iu, ju])  # (2m+1, p0), rows in search order
    first = np.argmax(absr, axis=0)
    L = absr[first, np.arange(len(pairs))]
    h_star = lags[first]
    P = None
    if with_pvalues and pairs:
        pk = np.sort(2 * norm.sf(np.sqrt(n) * absr), axis=0)
        K = pk.shape[0]
        P = np.minimum(1.0, np.min(pk * (K / np.arange(1, K + 1))[:, None], axis=0))
    return pairs, L, h_star, P, rho


def select_edges(pairs, L, P, method: str, c0: float = 0.75, beta: float = 0.01,
                 n_edges: int | None = None) -> tuple[list[tuple[int, int]], int]:
    """Pick connected pairs.

    ``ratio`` takes the pairs with the ``r`` largest maxima (``r`` from
    :func:`ratio_select` unless ``n_edges`` is given); ``fdr`` takes the
    ``d`` smallest Simes p-values. Ties keep lexicographic pair order.
    """
    if not pairs:
        return [], 0
    if method == "ratio":
        order = np.argsort(-np.asarray(L), kind="stable")
        r = ratio_select(np.asarray(L)[order], c0) if n_edges is None else int(n_edges)
    elif method == "fdr":
        if P is None:
            raise ContractError("fdr selection needs p-values")
        order = np.argsort(np.asarray(P), kind="stable")
        r = fdr_select(P, beta) if n_edges is None else int(n_edges)
    else:
        raise ContractError(f"unknown method {method!r}")
    if not 0 <= r <= len(pairs):
        raise RangeError(f"cannot select {r} of {len(pairs)} pairs")
    return sorted(pairs[k] for k in order[:r]), r


def connectivity(Zw, m: int, method: str = "ratio", c0: float = 0.75,
                 beta: float = 0.01, n_edges: int | None = None) -> tuple[ConnectivityGraph, int]:
    """Run the pairwise tests on prewhitened components and select edges."""
    p = as_array(Zw).shape[1]
    pairs, L, h_star, P, rho = pair_statistics(Zw, m)
    edges, r = select_edges(pairs, L, P, method, c0=c0, beta=beta, n_edges=n_edges)
    stats = {
        pr: PairStatistic(float(L[k]), int(h_star[k]), None if P is None else float(P[k]))
        for k, pr in enumerate(pairs)
    }
    return ConnectivityGraph(p, tuple(edges), stats, m=m, rho=rho), r
