"""Nearest-prototype classifier with confidence-margin retraining.

Each class is represented by an integer class bundle (the superposition of
its training samples) and the binarized prototype derived from it. A query is
assigned to the class whose prototype has the highest similarity; ties go to
the lowest class index.

Training refines the bundles iteratively. Within one iteration every sample
is predicted against the prototypes frozen at iteration start; updates only
accumulate in the bundles and the bundles are re-binarized once, after the
pass. Two kinds of samples trigger an update:

* misclassified: the sample is bundled into the true class and bundled out
  of the wrongly predicted class;
* correctly classified but with a confidence margin below the threshold
  ``alpha_pct`` (in percentage points of similarity): the sample is bundled
  into the true class and bundled out of the runner-up class.

The confidence margin is the gap between the best and the second-best
similarity, which is never negative; with ``alpha_pct = 0`` the second rule
can never fire and training reduces exactly to error-driven updates.

Because predictions are frozen per iteration and bundle updates commute, the
whole pass is computed in vectorized form; the result is identical to a
sample-by-sample sweep in dataset order. Iteration accuracy is the fraction
of samples predicted correctly during the pass, i.e. measured against the
frozen prototypes, and the classifier kept at the end is the frozen prototype
set that attained the best iteration accuracy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bundler import Bundle, binarize_counts
from .encoder import stack_samples
from .hdvec import Hypervector, hamming_to_rows, n_words, pack_bits, unpack_bits

__all__ = [
    "AssociativeMemory",
    "TrainSchedule",
    "IterationStats",
    "TrainHistory",
    "build_prototypes",
    "predict",
    "predict_many",
    "confidence",
    "confidence_many",
    "train_iteration",
    "fit",
    "infer",
]

logger = logging.getLogger(__name__)

_UNPACK_CHUNK = 4096


@dataclass(frozen=True)
class TrainSchedule:
    """Iteration budget, early-stop cadence, and early-stop target."""

    max_iterations: int = 2500
    check_every: int = 100
    target_train_accuracy: float = 0.99

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")


@dataclass(frozen=True)
class IterationStats:
    accuracy: float
    error_updates: int
    lowconf_updates: int


@dataclass
class TrainHistory:
    """Per-iteration accuracy and update counts for one training run."""

    accuracy: list[float] = field(default_factory=list)
    error_updates: list[int] = field(default_factory=list)
    lowconf_updates: list[int] = field(default_factory=list)
    best_iteration: int = 0  # 1-based; 0 while empty

    @property
    def iterations(self) -> int:
        return len(self.accuracy)

    @property
    def best_accuracy(self) -> float:
        return max(self.accuracy) if self.accuracy else 0.0

    def record(self, stats: IterationStats) -> None:
        self.accuracy.append(stats.accuracy)
        self.error_updates.append(stats.error_updates)
        self.lowconf_updates.append(stats.lowconf_updates)


class AssociativeMemory:
    """Per-class bundles, net counts, and binarized prototypes.

    ``counts`` is None for inference-only snapshots, which carry just the
    prototype bits and net counts.
    """

    __slots__ = ("dim", "K", "counts", "n", "prototypes")

    def __init__(
        self,
        dim: int,
        K: int,
        counts: np.ndarray | None,
        n: np.ndarray,
        prototypes: np.ndarray,
    ):
        if K < 2:
            raise ValueError(f"need at least 2 classes, got {K}")
        self.dim = dim
        self.K = K
        self.counts = counts
        self.n = n
        self.prototypes = prototypes

    def bundle(self, label: int) -> Bundle:
        """Copy of one class bundle (for inspection; not a live view)."""
        if self.counts is None:
            raise ValueError("snapshot carries no bundles")
        return Bundle.from_counts(self.counts[label], int(self.n[label]))

    def prototype(self, label: int) -> Hypervector:
        return Hypervector(self.dim, self.prototypes[label])

    def rebinarize(self, rng: np.random.Generator) -> None:
        """Refresh all prototypes from the bundles, class by class."""
        if self.counts is None:
            raise ValueError("snapshot carries no bundles")
        degenerate = np.flatnonzero(self.n <= 0)
        for label in degenerate:
            logger.warning(
                "class %d bundle has net count %d; prototype is mostly tie noise",
                label,
                self.n[label],
            )
        protos = np.empty((self.K, n_words(self.dim)), dtype=np.uint64)
        for label in range(self.K):
            bits = binarize_counts(self.counts[label], int(self.n[label]), rng)
            protos[label] = pack_bits(bits)
        self.prototypes = protos

    def snapshot(self) -> AssociativeMemory:
        """Inference-only copy of the current prototypes and net counts."""
        return AssociativeMemory(
            self.dim, self.K, None, self.n.copy(), self.prototypes.copy()
        )

    def copy(self) -> AssociativeMemory:
        counts = None if self.counts is None else self.counts.copy()
        return AssociativeMemory(
            self.dim, self.K, counts, self.n.copy(), self.prototypes.copy()
        )


def _as_labels(labels, m: int, K: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (m,):
        raise ValueError(f"expected {m} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"labels must lie in [0, {K - 1}]")
    return labels


def _sum_bits(packed_rows: np.ndarray, dim: int) -> np.ndarray:
    """Column-wise bit sums of packed rows, unpacking in bounded chunks."""
    total = np.zeros(dim, dtype=np.int64)
    for start in range(0, packed_rows.shape[0], _UNPACK_CHUNK):
        chunk = packed_rows[start : start + _UNPACK_CHUNK]
        total += unpack_bits(chunk, dim).sum(axis=0, dtype=np.int64)
    return total


def build_prototypes(samples, labels, K: int, rng: np.random.Generator) -> AssociativeMemory:
    """Bundle all samples of each class and binarize into initial prototypes."""
    packed, dim = stack_samples(samples)
    labels = _as_labels(labels, packed.shape[0], K)
    counts = np.zeros((K, dim), dtype=np.int64)
    n = np.zeros(K, dtype=np.int64)
    for label in range(K):
        rows = np.flatnonzero(labels == label)
        if rows.size == 0:
            raise ValueError(f"class {label} has no samples; majority is undefined")
        counts[label] = _sum_bits(packed[rows], dim)
        n[label] = rows.size
    am = AssociativeMemory(dim, K, counts, n, np.empty((K, n_words(dim)), dtype=np.uint64))
    am.rebinarize(rng)
    return am


def predict(am: AssociativeMemory, q: Hypervector) -> tuple[int, np.ndarray]:
    """Most similar class for one query, plus all K similarities."""
    if q.dim != am.dim:
        raise ValueError(f"dimension mismatch: model {am.dim}, query {q.dim}")
    sims = 1.0 - hamming_to_rows(am.prototypes, q.words) / am.dim
    return int(np.argmax(sims)), sims


def predict_many(am: AssociativeMemory, samples) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized prediction: labels (m,) and similarity matrix (m, K)."""
    packed, dim = stack_samples(samples)
    if dim != am.dim:
        raise ValueError(f"dimension mismatch: model {am.dim}, samples {dim}")
    sims = np.empty((packed.shape[0], am.K), dtype=np.float64)
    for label in range(am.K):
        sims[:, label] = 1.0 - hamming_to_rows(packed, am.prototypes[label]) / dim
    return np.argmax(sims, axis=1), sims


def confidence(similarities) -> float:
    """Margin between the best and second-best similarity, as a fraction.

    Reported externally in percentage points (x100). Never negative.
    """
    sims = np.asarray(similarities, dtype=np.float64)
    if sims.shape[0] < 2:
        raise ValueError("confidence needs at least 2 classes")
    top = int(np.argmax(sims))
    rest = np.delete(sims, top)
    return float(sims[top] - rest.max())


def _runner_up(sims: np.ndarray, top: np.ndarray) -> np.ndarray:
    masked = sims.copy()
    masked[np.arange(sims.shape[0]), top] = -1.0
    return np.argmax(masked, axis=1)


def confidence_many(sims: np.ndarray) -> np.ndarray:
    """Vectorized margin for a similarity matrix (m, K)."""
    if sims.shape[1] < 2:
        raise ValueError("confidence needs at least 2 classes")
    top = np.argmax(sims, axis=1)
    rows = np.arange(sims.shape[0])
    return sims[rows, top] - sims[rows, _runner_up(sims, top)]


def train_iteration(
    am: AssociativeMemory,
    samples,
    labels,
    alpha_pct: float,
    rng: np.random.Generator,
) -> IterationStats:
    """One full pass over the training set against frozen prototypes.

    Misclassified samples are bundled into the true class and out of the
    predicted class; correct samples whose margin (in percentage points)
    falls strictly below ``alpha_pct`` are bundled into the true class and
    out of the runner-up class. Prototypes are re-binarized once at the end.
    """
    if alpha_pct < 0:
        raise ValueError(f"alpha_pct must be >= 0, got {alpha_pct}")
    packed, dim = stack_samples(samples)
    if dim != am.dim:
        raise ValueError(f"dimension mismatch: model {am.dim}, samples {dim}")
    labels = _as_labels(labels, packed.shape[0], am.K)

    predicted, sims = predict_many(am, samples)
    rows = np.arange(packed.shape[0])
    runner_up = _runner_up(sims, predicted)
    margin = sims[rows, predicted] - sims[rows, runner_up]

    wrong = predicted != labels
    lowconf = ~wrong & (margin * 100.0 < alpha_pct)
    update = wrong | lowconf
    update_rows = np.flatnonzero(update)
    into = labels[update_rows]
    outof = np.where(wrong, predicted, runner_up)[update_rows]

    for label in range(am.K):
        in_rows = update_rows[into == label]
        out_rows = update_rows[outof == label]
        if in_rows.size:
            am.counts[label] += _sum_bits(packed[in_rows], dim)
            am.n[label] += in_rows.size
        if out_rows.size:
            am.counts[label] -= _sum_bits(packed[out_rows], dim)
            am.n[label] -= out_rows.size
    am.rebinarize(rng)

    return IterationStats(
        accuracy=float(np.mean(~wrong)),
        error_updates=int(wrong.sum()),
        lowconf_updates=int(lowconf.sum()),
    )


def fit(
    am: AssociativeMemory,
    samples,
    labels,
    alpha_pct: float,
    schedule: TrainSchedule,
    rng: np.random.Generator,
) -> tuple[AssociativeMemory, TrainHistory]:
    """Iterate training passes, keeping the best-scoring frozen prototypes.

    Every ``check_every`` iterations, training stops early once the best
    iteration accuracy exceeds the schedule target. Returns an inference-only
    snapshot of the prototypes that attained the best accuracy, plus the full
    history. ``am`` itself is left in its final (post-pass) state.
    """
    history = TrainHistory()
    best_acc = -1.0
    best: AssociativeMemory | None = None
    for t in range(1, schedule.max_iterations + 1):
        frozen = am.snapshot()
        stats = train_iteration(am, samples, labels, alpha_pct, rng)
        history.record(stats)
        if stats.accuracy > best_acc:
            best_acc = stats.accuracy
            best = frozen
            history.best_iteration = t
        if t % schedule.check_every == 0 and best_acc > schedule.target_train_accuracy:
            break
    assert best is not None
    return best, history


def infer(am: AssociativeMemory, queries) -> np.ndarray:
    """Predicted labels for a batch of queries; no state is mutated."""
    predicted, _ = predict_many(am, queries)
    return predicted
