"""Simulation designs with a known latent segmentation and the Monte Carlo
runner that scores segmentation recovery."""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .exceptions import DesignError, StageError, TSPCAError
from .grouping import GroupPartition
from .linalg import match_subspaces, orthonormal_basis
from .segmentation import SegmentationResult, SegmentConfig, segment

log = logging.getLogger(__name__)

DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class ARMA:
    """``eta_t = sum ar[k] eta_{t-1-k} + e_t + sum ma[k] e_{t-1-k}``."""

    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()

    def spectral_radius(self) -> float:
        if not self.ar:
            return 0.0
        k = len(self.ar)
        companion = np.zeros((k, k))
        companion[0] = self.ar
        companion[1:, :-1] = np.eye(k - 1)
        return float(np.max(np.abs(np.linalg.eigvals(companion))))

    def simulate(self, eps: np.ndarray) -> np.ndarray:
        b = np.r_[1.0, self.ma]
        a = np.r_[1.0, -np.asarray(self.ar, dtype=float)]
        return lfilter(b, a, eps)


ETA1 = ARMA((0.5, 0.3), (-0.9, 0.3, 1.2, 1.3))
ETA2 = ARMA((0.8, -0.5), (1.0, 0.8, 1.8))
ETA3 = ARMA((-0.7, -0.5), (-1.0, -0.8))
ETA4 = ARMA((-0.4, 0.5), (1.0, 0.8, 1.5, 1.8))
ETA5 = ARMA((0.85, -0.3), (1.0, 0.5, 1.2))


@dataclass(frozen=True)
class LatentDesign:
    """Block ``j`` holds ``block_sizes[j]`` lead-shifted copies
    ``eta_{t}, eta_{t+1}, ...`` of the scalar process ``generators[j]``."""

    name: str
    block_sizes: tuple[int, ...]
    generators: tuple[ARMA, ...]
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if len(self.block_sizes) != len(self.generators):
            raise DesignError("one generator per block is required")
        if any(s < 1 for s in self.block_sizes):
            raise DesignError("block sizes must be positive")
        for g in self.generators:
            if g.spectral_radius() >= 1:
                raise DesignError(f"non-causal AR part {g.ar}")

    @property
    def p(self) -> int:
        return sum(self.block_sizes)

    @property
    def q(self) -> int:
        return len(self.block_sizes)

    def truth(self) -> GroupPartition:
        return GroupPartition.from_sizes(self.block_sizes)


EXAMPLE5 = LatentDesign("example5", (3, 2, 1), (ETA1, ETA2, ETA3))
EXAMPLE6 = LatentDesign("example6", (6, 5, 4, 3, 2), (ETA1, ETA4, ETA5, ETA2, ETA3))
DESIGNS = {"example5": EXAMPLE5, "example6": EXAMPLE6}


def generate(design: LatentDesign, n: int, seed) -> tuple[np.ndarray, np.ndarray, GroupPartition]:
    """Draw ``Y = X A'`` with mixing entries iid ``U(-3, 3)``.

    Returns ``(Y, A, truth)``. All randomness comes from ``seed``.
    """
    if n < 50:
        raise DesignError(f"n={n} below the minimum of 50")
    rng = np.random.default_rng(seed)
    p = design.p
    A = rng.uniform(-3.0, 3.0, size=(p, p))
    X = np.empty((n, p))
    col = 0
    for size, gen in zip(design.block_sizes, design.generators):
        length = design.burn_in + n + size - 1
        eta = gen.simulate(rng.standard_normal(length))[design.burn_in:]
        for i in range(size):
            X[:, col + i] = eta[i : i + n]
        col += size
    return X @ A.T, A, design.truth()


@dataclass(frozen=True)
class ReplicationOutcome:
    classification: str  # "correct" | "incomplete" | "other"
    q_hat: int
    dbar: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if (self.dbar is not None) != (self.classification == "correct"):
            raise ValueError("dbar is reported for correct segmentations only")


def _owners(est_bases: list[np.ndarray], truth_bases: list[np.ndarray]) -> list[int] | None:
    """Estimated group holding the majority of each true span, or None.

    ``share[g, j] = tr(P_g P_j) / p_j`` sums to one over ``g`` because the
    estimated groups split an orthonormal basis, so a share above one half
    identifies a unique owner.
    """
    owners = []
    for Q in truth_bases:
        share = np.array([np.sum((B.T @ Q) ** 2) for B in est_bases]) / Q.shape[1]
        g = int(np.argmax(share))
        if share[g] <= 0.5:
            return None
        owners.append(g)
    return owners


def classify(result: SegmentationResult, truth: GroupPartition, A_true, whitener=None) -> ReplicationOutcome:
    """Score an estimated segmentation against the known design.

    True group spans are taken in standardized coordinates,
    ``span(whitener @ A_j)``. The segmentation is *correct* when it has the
    true number of groups with matching ranks, and *incomplete* when it has
    fewer groups each made of whole true groups: every true span lies
    mostly (share above one half) in one estimated group, and each
    estimated group's rank equals the total rank of the true groups it
    holds. Anything else is *other*.
    """
    whitener = result.whitener if whitener is None else whitener
    A_true = np.asarray(A_true, dtype=float)
    truth_bases = [orthonormal_basis(whitener @ A_true[:, list(g)]) for g in truth.groups]
    est_bases = result.group_bases()
    q, q_hat = truth.q, result.partition.q

    if q_hat == q and sorted(truth.sizes) == sorted(result.partition.sizes):
        pairs = match_subspaces(est_bases, truth_bases)
        return ReplicationOutcome("correct", q_hat, float(np.mean([d for *_, d in pairs])))

    if q_hat < q:
        owners = _owners(est_bases, truth_bases)
        if owners is not None:
            held = np.zeros(q_hat, dtype=int)
            for j, g in enumerate(owners):
                held[g] += len(truth.groups[j])
            if all(held[g] == B.shape[1] for g, B in enumerate(est_bases)):
                return ReplicationOutcome("incomplete", q_hat)
    return ReplicationOutcome("other", q_hat)


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    design: str
    n: int
    reps: int
    q: int
    proportions: dict[str, float]
    dbar_quantiles: tuple[float, ...] | None
    qhat_histogram: dict[int, int]
    outcomes: list[ReplicationOutcome] = field(repr=False)

    def table_row(self) -> dict[str, float]:
        return {
            "correct": self.proportions["correct"],
            "incomplete": self.proportions["incomplete"],
            "incomplete_q_minus_1": self.proportions["incomplete_q_minus_1"],
            "other": self.proportions["other"],
        }

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "n": self.n,
            "reps": self.reps,
            "q": self.q,
            "proportions": self.proportions,
            "dbar_quantiles": list(self.dbar_quantiles) if self.dbar_quantiles else None,
            "qhat_histogram": {str(k): v for k, v in sorted(self.qhat_histogram.items())},
            "outcomes": [
                {"rep": i, "seed": o.seed, "classification": o.classification,
                 "q_hat": o.q_hat, "dbar": o.dbar}
                for i, o in enumerate(self.outcomes)
            ],
        }


def replication_seeds(master_seed: int, reps: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(reps)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def run_replication(design: LatentDesign, n: int, seed: int, cfg: SegmentConfig) -> ReplicationOutcome:
    Y, A, truth = generate(design, n, seed)
    result = segment(Y, cfg)
    o = classify(result, truth, A)
    return ReplicationOutcome(o.classification, o.q_hat, o.dbar, seed)


def _run_one(args):
    design, n, seed, cfg, rep = args
    try:
        return run_replication(design, n, seed, cfg)
    except (TSPCAError, StageError) as exc:
        raise TSPCAError(f"replication {rep} (seed {seed}): {exc}") from exc


def summarize(design: LatentDesign, n: int, outcomes: list[ReplicationOutcome]) -> MonteCarloReport:
    reps = len(outcomes)
    counts = Counter(o.classification for o in outcomes)
    q = design.q
    props = {
        "correct": counts["correct"] / reps,
        "incomplete": counts["incomplete"] / reps,
        "incomplete_q_minus_1": sum(
            1 for o in outcomes if o.classification == "incomplete" and o.q_hat == q - 1
        ) / reps,
        "other": counts["other"] / reps,
    }
    dbars = np.array([o.dbar for o in outcomes if o.dbar is not None])
    quant = tuple(float(v) for v in np.quantile(dbars, [0, 0.25, 0.5, 0.75, 1])) if len(dbars) else None
    hist = dict(sorted(Counter(o.q_hat for o in outcomes).items()))
    return MonteCarloReport(design.name, n, reps, q, props, quant, hist, list(outcomes))


def monte_carlo(design: LatentDesign, n: int, reps: int, cfg: SegmentConfig | None = None,
                master_seed: int = 0, n_jobs: int = 1) -> MonteCarloReport:
    """Replicate generate -> segment -> classify ``reps`` times.

    Replication ``i`` uses the ``i``-th child of ``SeedSequence(master_seed)``,
    so results do not depend on ``n_jobs``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    cfg = cfg or SegmentConfig()
    seeds = replication_seeds(master_seed, reps)
    tasks = [(design, n, s, cfg, i) for i, s in enumerate(seeds)]
    if n_jobs == 1:
        outcomes = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_run_one, tasks, chunksize=max(1, reps // (4 * n_jobs))))
    return summarize(design, n, outcomes)
