"""Exhaustive search over set partitions, for desk-scale ground truth.

Partitions are generated as restricted growth strings in lexicographic
order: ``a[0] = 0`` and ``a[i] <= 1 + max(a[:i])``. The string doubles as a
canonical label vector.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Iterator

import numpy as np

from .types import Partition, ScoreMatrix

MAX_N = 12


class OracleCapExceeded(ValueError):
    pass


def _check_cap(n: int, allow_large: bool):
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_N and not allow_large:
        raise OracleCapExceeded(f"n={n} exceeds the enumeration cap of {MAX_N}; pass allow_large=True to override")


def restricted_growth_strings(n: int) -> Iterator[list[int]]:
    """Yield every restricted growth string of length ``n`` (reused list; copy to keep)."""
    if n == 0:
        yield []
        return
    a = [0] * n
    b = [1] * n  # b[i] = 1 + max(a[:i])
    while True:
        yield a
        # find the rightmost position that can still be incremented
        i = n - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        nxt = b[i] + (a[i] == b[i])
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = nxt


def rgs_chunks(n: int, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """Restricted growth strings as ``(rows, n)`` int8 arrays, in order."""
    if n == 0:
        yield np.zeros((1, 0), dtype=np.int8)
        return
    buf = []
    for a in restricted_growth_strings(n):
        buf.append(tuple(a))
        if len(buf) == chunk:
            yield np.array(buf, dtype=np.int8).reshape(-1, n)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int8).reshape(-1, n)


def enumerate_partitions(n: int, allow_large: bool = False) -> Iterator[Partition]:
    _check_cap(n, allow_large)
    for a in restricted_growth_strings(n):
        yield Partition.from_labels(a)


def bell_numbers(limit: int) -> list[int]:
    """B_0..B_limit from the Bell triangle."""
    bells = [1]
    row = [1]
    for _ in range(limit):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
        bells.append(row[0])
    return bells


def brute_force_optimum(scores: ScoreMatrix, tol: float = 1e-12, allow_large: bool = False):
    """Best partition by exhaustive search.

    Returns ``(partition, objective, is_unique)``. Ties within ``tol`` go to
    the lexicographically first restricted growth string.
    """
    n = scores.n
    _check_cap(n, allow_large)
    iu, ju = np.triu_indices(n, 1)
    weights = scores.delta_s[iu, ju]
    best_val = -np.inf
    best_labels = None
    values = []
    for labels in rgs_chunks(n):
        red = labels[:, iu] != labels[:, ju]
        vals = red.astype(np.float64) @ weights if len(weights) else np.zeros(len(labels))
        values.append(vals)
        idx = int(np.argmax(vals))
        if vals[idx] > best_val + tol:
            best_val = float(vals[idx])
            best_labels = labels[idx].tolist()
    all_vals = np.concatenate(values)
    n_best = int(np.count_nonzero(all_vals >= best_val - tol))
    return Partition.from_labels(best_labels), best_val, n_best == 1


def partition_statistics(n: int, allow_large: bool = False) -> Counter:
    """Multiplicity of each (blue-edge count, block count) pair over all partitions."""
    _check_cap(n, allow_large)
    stats: Counter = Counter()
    for labels in rgs_chunks(n):
        if n == 0:
            stats[(0, 0)] += len(labels)
            continue
        sizes = np.stack([np.count_nonzero(labels == c, axis=1) for c in range(n)], axis=1)
        blue = (sizes * (sizes - 1) // 2).sum(axis=1)
        blocks = np.count_nonzero(sizes, axis=1)
        for key, cnt in Counter(zip(blue.tolist(), blocks.tolist())).items():
            stats[key] += cnt
    return stats


def blue_edge_histogram(n: int, allow_large: bool = False) -> dict[int, int]:
    hist: Counter = Counter()
    for (b, _), cnt in partition_statistics(n, allow_large).items():
        hist[b] += cnt
    return dict(sorted(hist.items()))


def brute_force_partition_sum(x, n: int, allow_large: bool = False):
    """Sum of ``x ** b(C)`` over all partitions C; exact for int or Fraction ``x``."""
    return sum(cnt * x**b for b, cnt in blue_edge_histogram(n, allow_large).items())


def brute_force_moments(x, n: int) -> dict[str, float]:
    """Prior-weighted averages of blue-edge and block counts, by enumeration.

    Accumulated in exact rational arithmetic so tiny variances survive.
    """
    x = Fraction(x)
    stats = partition_statistics(n)
    w = {key: c * x**key[0] for key, c in stats.items()}
    z = sum(w.values())
    mean_b = sum(v * b for (b, _), v in w.items()) / z
    mean_k = sum(v * k for (_, k), v in w.items()) / z
    var_k = sum(v * (k - mean_k) ** 2 for (_, k), v in w.items()) / z
    return {
        "z": float(z),
        "mean_blue": float(mean_b),
        "mean_clusters": float(mean_k),
        "var_clusters": float(var_k),
    }
