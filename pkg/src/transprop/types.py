"""Score matrices, hypothesis matrices, partitions and the clustering objective.

Edge colouring convention: ``h[i, j] == 0`` (blue) means i and j share a
cluster, ``h[i, j] == 1`` (red) means they do not. Scores are log-likelihood
ratios ``log f1 - log f0``, so a positive score favours red.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels


class Infeasible:
    """Objective value of a hypothesis that breaks transitivity.

    A singleton standing in for minus infinity. It deliberately supports no
    arithmetic, only ordering below every real number.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"

    def __str__(self):
        return "-inf"

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __reduce__(self):
        return (Infeasible, ())


INFEASIBLE = Infeasible()


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Symmetric matrix of pairwise log-likelihood ratios, diagonal zeroed."""

    delta_s: np.ndarray

    def __post_init__(self):
        s = np.array(self.delta_s, dtype=np.float64, copy=True)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError(f"score matrix must be square, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            i, j = np.argwhere(~np.isfinite(s))[0]
            raise ValueError(f"non-finite score at ({i}, {j})")
        np.fill_diagonal(s, 0.0)
        if not np.array_equal(s, s.T):
            i, j = np.argwhere(s != s.T)[0]
            raise ValueError(f"score matrix not symmetric at ({i}, {j})")
        object.__setattr__(self, "delta_s", _freeze(s))

    @property
    def n(self) -> int:
        return self.delta_s.shape[0]

    @classmethod
    def from_upper(cls, n: int, entries: dict[tuple[int, int], float]) -> ScoreMatrix:
        """Build from ``{(i, j): score}``; unspecified pairs score 0."""
        s = np.zeros((n, n))
        for (i, j), v in entries.items():
            s[i, j] = s[j, i] = v
        return cls(s)

    def relabel(self, perm: Sequence[int]) -> ScoreMatrix:
        """Scores after moving point ``p`` to position ``perm[p]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return ScoreMatrix(self.delta_s[np.ix_(inv, inv)])

    def __eq__(self, other):
        return isinstance(other, ScoreMatrix) and np.array_equal(self.delta_s, other.delta_s)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class HypothesisMatrix:
    """Symmetric 0/1 edge colouring. Need not be transitive."""

    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, copy=True)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"hypothesis matrix must be square, got shape {h.shape}")
        if not np.all((h == 0) | (h == 1)):
            raise ValueError("hypothesis entries must be 0 or 1")
        h = h.astype(np.uint8)
        np.fill_diagonal(h, 0)
        if not np.array_equal(h, h.T):
            raise ValueError("hypothesis matrix not symmetric")
        object.__setattr__(self, "h", _freeze(h))

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @classmethod
    def all_blue(cls, n: int) -> HypothesisMatrix:
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def all_red(cls, n: int) -> HypothesisMatrix:
        return cls(1 - np.eye(n, dtype=np.uint8))

    def __eq__(self, other):
        return isinstance(other, HypothesisMatrix) and np.array_equal(self.h, other.h)

    __hash__ = None


@dataclass(frozen=True)
class Partition:
    """A clustering of ``{0..n-1}`` in canonical form.

    Blocks are sorted by smallest member and members ascend, so two partitions
    are equal exactly when their ``blocks`` tuples are equal.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        seen = [b for block in blocks for b in block]
        if any(len(b) == 0 for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        if sorted(seen) != list(range(self.n)):
            raise ValueError("partition blocks must be disjoint and cover 0..n-1")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> Partition:
        blocks = [tuple(int(x) for x in b) for b in blocks]
        if n is None:
            n = sum(len(b) for b in blocks)
        return cls(n, tuple(blocks))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> Partition:
        """Group indices that share a label; label values are arbitrary."""
        groups: dict = {}
        for idx, lab in enumerate(labels):
            groups.setdefault(lab, []).append(idx)
        return cls(len(labels), tuple(tuple(g) for g in groups.values()))

    def labels(self) -> np.ndarray:
        """Dense cluster ids numbered from 0 in canonical block order."""
        out = np.empty(self.n, dtype=np.int64)
        for c, block in enumerate(self.blocks):
            out[list(block)] = c
        return out

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def blue_edges(self) -> int:
        return sum(len(b) * (len(b) - 1) // 2 for b in self.blocks)

    def relabel(self, perm: Sequence[int]) -> Partition:
        return Partition.from_blocks(([perm[x] for x in b] for b in self.blocks), self.n)


@dataclass(frozen=True)
class TripleVerdict:
    """Triples ``i < j < k`` carrying exactly one red edge."""

    violations: tuple[tuple[int, int, int], ...] = field(default=())

    @property
    def count(self) -> int:
        return len(self.violations)

    def __bool__(self):
        return self.count == 0


def check_transitivity(h: HypothesisMatrix) -> TripleVerdict:
    arr = h.h.astype(np.int64)
    count = _kernels.count_violations(arr)
    if count == 0:
        return TripleVerdict()
    rows = _kernels.list_violations(arr, count)
    return TripleVerdict(tuple(tuple(int(x) for x in r) for r in rows))


def is_transitive(h: HypothesisMatrix) -> bool:
    return _kernels.count_violations(h.h.astype(np.int64)) == 0


def partition_to_hypothesis(p: Partition) -> HypothesisMatrix:
    labels = p.labels()
    return HypothesisMatrix((labels[:, None] != labels[None, :]).astype(np.uint8))


def hypothesis_to_partition(h: HypothesisMatrix) -> tuple[Partition, TripleVerdict]:
    """Connected components of the blue graph, plus the transitivity report."""
    n = h.n
    if n == 0:
        return Partition(0, ()), TripleVerdict()
    blue = (h.h == 0).astype(np.int8)
    _, labels = connected_components(csr_matrix(blue), directed=False)
    return Partition.from_labels(labels.tolist()), check_transitivity(h)


def _red_sum(scores: ScoreMatrix, h: HypothesisMatrix) -> float:
    iu = np.triu_indices(scores.n, 1)
    return float(np.sum(scores.delta_s[iu] * h.h[iu]))


def objective(scores: ScoreMatrix, h: HypothesisMatrix) -> float | Infeasible:
    """Sum of scores over red edges, or INFEASIBLE if any triple is invalid."""
    if scores.n != h.n:
        raise ValueError(f"dimension mismatch: scores n={scores.n}, hypothesis n={h.n}")
    if not is_transitive(h):
        return INFEASIBLE
    return _red_sum(scores, h)


def partition_objective(scores: ScoreMatrix, p: Partition) -> float:
    if scores.n != p.n:
        raise ValueError(f"dimension mismatch: scores n={scores.n}, partition n={p.n}")
    return _red_sum(scores, partition_to_hypothesis(p))
