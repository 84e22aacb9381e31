"""Synthetic template/read datasets and scoring of recovered clusterings.

Random numbers come from numpy's PCG64 generator seeded explicitly, drawn in
a fixed order: templates, read sources, then error masks.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import ReadSet
from .types import Partition


@dataclass(frozen=True)
class SimConfig:
    template_count: int
    word_length: int
    read_count: int
    error_rate: float
    seed: int

    def __post_init__(self):
        for name in ("template_count", "word_length", "read_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.error_rate < 0.5:
            raise ValueError(f"error rate must lie in [0, 0.5), got {self.error_rate}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class SimDataset:
    config: SimConfig
    templates: np.ndarray  # (K, L) uint8
    source: np.ndarray  # (N,) template index of each read
    flips: np.ndarray  # (N, L) bool, bits flipped relative to the template
    reads: ReadSet
    truth: Partition

    @property
    def sampled_templates(self) -> int:
        return self.truth.n_blocks


def simulate(cfg: SimConfig) -> SimDataset:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    k, length, n = cfg.template_count, cfg.word_length, cfg.read_count
    templates = rng.integers(0, 2, size=(k, length), dtype=np.uint8)
    source = rng.integers(0, k, size=n)
    flips = rng.random((n, length)) < cfg.error_rate
    reads = templates[source] ^ flips.astype(np.uint8)
    # identical templates are indistinguishable, so they share a truth block
    _, template_class = np.unique(templates, axis=0, return_inverse=True)
    truth = Partition.from_labels(template_class.reshape(-1)[source].tolist())
    return SimDataset(cfg, templates, source, flips, ReadSet(reads), truth)


def write_truth(path, source: np.ndarray):
    Path(path).write_text("".join(f"{i}\t{t}\n" for i, t in enumerate(source.tolist())), encoding="utf-8")


@dataclass
class EvalReport:
    cluster_count_error: int
    misclassified_edges: int
    misclassified_by_distance: dict[int, int]
    pairs_by_distance: dict[int, int]


def _same_cluster(labels: np.ndarray) -> np.ndarray:
    return labels[:, None] == labels[None, :]


def edge_errors(predicted_blue: np.ndarray, truth: Partition, distances: np.ndarray | None = None) -> EvalReport:
    """Compare a blue-edge matrix (need not be transitive) with a truth partition."""
    n = truth.n
    if predicted_blue.shape != (n, n):
        raise ValueError(f"dimension mismatch: prediction {predicted_blue.shape}, truth n={n}")
    iu = np.triu_indices(n, 1)
    wrong = (predicted_blue != _same_cluster(truth.labels()))[iu]
    by_d: Counter = Counter()
    pairs: Counter = Counter()
    if distances is not None:
        d = np.asarray(distances)[iu]
        pairs.update(d.tolist())
        by_d.update(d[wrong].tolist())
    return EvalReport(0, int(wrong.sum()), dict(sorted(by_d.items())), dict(sorted(pairs.items())))


def evaluate(result, truth: Partition, distances: np.ndarray | None = None) -> EvalReport:
    """Score a recovered partition (or solver result) against the truth.

    ``cluster_count_error`` is recovered minus true block count.
    ``misclassified_by_distance`` bins wrong pairs by the Hamming distance of
    their reads when ``distances`` is given.
    """
    predicted = getattr(result, "partition", result)
    if predicted.n != truth.n:
        raise ValueError(f"dimension mismatch: result n={predicted.n}, truth n={truth.n}")
    report = edge_errors(_same_cluster(predicted.labels()), truth, distances)
    report.cluster_count_error = predicted.n_blocks - truth.n_blocks
    return report
