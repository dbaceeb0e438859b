"""Symmetric eigendecomposition, inverse square roots and subspace distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ContractError, SingularCovarianceError, SpecificationError

EIGEN_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues in descending order; column ``i`` of ``eigenvectors``
    pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """A ``p x r`` matrix with orthonormal columns."""

    matrix: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=float)
        if H.ndim == 1:
            H = H[:, None]
        if np.max(np.abs(H.T @ H - np.eye(H.shape[1])), initial=0.0) >= 1e-8:
            raise ContractError("basis columns are not orthonormal")
        object.__setattr__(self, "matrix", H)

    @property
    def r(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def from_span(cls, H) -> "SubspaceBasis":
        """Orthonormal basis for the column span of a full-rank ``H``."""
        return cls(orthonormal_basis(H))


def _check_symmetric(S: np.ndarray) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {S.shape}")
    scale = np.max(np.abs(S), initial=0.0)
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-8 * scale:
        raise ContractError("matrix is not symmetric")


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry positive; near-ties (relative 1e-12) go to the
    # lowest index so that e.g. (1, -1)/sqrt(2) is stable under rounding.
    A = np.abs(V)
    top = A.max(axis=0)
    lead = np.argmax(A >= top * (1 - 1e-12), axis=0)
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(S) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive. Equal eigenvalues keep the backend's column order, so only
    the span of a repeated eigenvalue's eigenvectors is reproducible.
    """
    S = np.asarray(S, dtype=float)
    _check_symmetric(S)
    w, V = np.linalg.eigh((S + S.T) / 2)
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], _fix_signs(V[:, order]))


def inv_sqrt(S, floor: float = EIGEN_FLOOR) -> np.ndarray:
    """Symmetric inverse square root of a positive definite matrix.

    Raises ``SingularCovarianceError`` when the smallest eigenvalue is at or
    below ``floor`` times the largest.
    """
    S = np.asarray(S, dtype=float)
    w, V = sym_eigen(S)
    lam_max, lam_min = w[0], w[-1]
    if lam_max <= 0 or lam_min <= floor * lam_max:
        raise SingularCovarianceError(
            f"covariance matrix is singular: smallest eigenvalue {lam_min:.3e} "
            f"(largest {lam_max:.3e}, relative floor {floor:g})",
            eigenvalue=float(lam_min),
        )
    R = (V / np.sqrt(w)) @ V.T
    return (R + R.T) / 2


def orthonormal_basis(H) -> np.ndarray:
    """Orthonormal basis of ``span(H)``; ``H`` must have full column rank."""
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[1] == 0 or H.shape[1] > H.shape[0]:
        raise ContractError(f"cannot span a {H.shape[1]}-dim subspace of R^{H.shape[0]}")
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    if s[-1] <= 1e-10 * s[0]:
        raise ContractError("input does not have full column rank")
    return U


def distance_D(H1, H2) -> float:
    """Grassmann distance ``sqrt(1 - tr(H1 H1' H2 H2') / r)`` between two
    ``r``-dimensional subspaces given by orthonormal bases."""
    B1 = H1 if isinstance(H1, SubspaceBasis) else SubspaceBasis(H1)
    B2 = H2 if isinstance(H2, SubspaceBasis) else SubspaceBasis(H2)
    if B1.r != B2.r:
        raise ContractError(f"rank mismatch {B1.r} vs {B2.r}; use distance_D_general")
    return _residual_distance(B1.matrix, B2.matrix)


def distance_D_general(H1, H2) -> float:
    """Subspace discrepancy for spans of possibly different dimension.

    Zero iff one span contains the other, one iff they are orthogonal.
    Any full-column-rank bases may be passed.
    """
    Q1 = orthonormal_basis(H1.matrix if isinstance(H1, SubspaceBasis) else H1)
    Q2 = orthonormal_basis(H2.matrix if isinstance(H2, SubspaceBasis) else H2)
    return _residual_distance(Q1, Q2)


def _residual_distance(Q1: np.ndarray, Q2: np.ndarray) -> float:
    # r - tr(P1 P2) = ||(I - P_big) Q_small||_F^2; forming the residual
    # directly avoids cancellation when one span nearly contains the other
    small, big = (Q1, Q2) if Q1.shape[1] <= Q2.shape[1] else (Q2, Q1)
    R = small - big @ (big.T @ small)
    return float(np.sqrt(np.clip(np.sum(R**2) / small.shape[1], 0.0, 1.0)))


def match_subspaces(estimate: Sequence, truth: Sequence) -> list[tuple[int, int, float]]:
    """Pair each true subspace with an estimated one of equal rank.

    Within each rank class pairs are taken greedily by ascending
    discrepancy. Returns ``(truth_index, estimate_index, distance)`` sorted
    by truth index.
    """
    est = [orthonormal_basis(_raw(H)) for H in estimate]
    tru = [orthonormal_basis(_raw(H)) for H in truth]
    if len(est) != len(tru):
        raise SpecificationError(f"{len(est)} estimated groups vs {len(tru)} true groups")
    if sorted(H.shape[1] for H in est) != sorted(H.shape[1] for H in tru):
        raise SpecificationError("group ranks differ between estimate and truth")

    pairs = []
    for rank in sorted({H.shape[1] for H in tru}):
        ti = [i for i, H in enumerate(tru) if H.shape[1] == rank]
        ei = [i for i, H in enumerate(est) if H.shape[1] == rank]
        cand = sorted(
            (distance_D_general(tru[a], est[b]), a, b) for a in ti for b in ei
        )
        used_t, used_e = set(), set()
        for d, a, b in cand:
            if a in used_t or b in used_e:
                continue
            used_t.add(a)
            used_e.add(b)
            pairs.append((a, b, d))
    return sorted(pairs)


def mean_error_Dbar(estimate: Sequence, truth: Sequence) -> float:
    """Average matched discrepancy between estimated and true subspaces."""
    pairs = match_subspaces(estimate, truth)
    return float(np.mean([d for _, _, d in pairs]))


def _raw(H):
    return H.matrix if isinstance(H, SubspaceBasis) else H
