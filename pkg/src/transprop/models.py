"""Likelihood models that turn data into score matrices, and their file formats."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .types import ScoreMatrix

ASYMMETRY_TOL = 1e-9


class InputError(ValueError):
    """Malformed input file; the message carries ``file:line`` context."""


@dataclass(frozen=True)
class BinaryReadModel:
    """Reads of length L copied from random binary templates with per-bit error p_e.

    Two reads of one template disagree at a bit with probability
    ``x = 2 p_e (1 - p_e)``; reads of unrelated templates disagree with
    probability 1/2.
    """

    word_length: int
    error_rate: float

    def __post_init__(self):
        if self.word_length < 1:
            raise ValueError("word length must be positive")
        if not 0.0 < self.error_rate < 0.5:
            raise ValueError(f"error rate must lie in (0, 0.5), got {self.error_rate}")

    @property
    def x(self) -> float:
        return 2.0 * self.error_rate * (1.0 - self.error_rate)

    def log_f0(self, d):
        """Same-template log likelihood of distance ``d``, without the binomial factor."""
        d = np.asarray(d, dtype=np.float64)
        return d * math.log(self.x) + (self.word_length - d) * math.log1p(-self.x)

    def log_f1(self, d):
        """Different-template log likelihood, without the binomial factor."""
        return np.full(np.shape(d), -self.word_length * math.log(2.0))

    def threshold_distance(self) -> float:
        """Distance at which the score changes sign."""
        x = self.x
        return self.word_length * (math.log(2.0) + math.log1p(-x)) / math.log((1.0 - x) / x)


def delta_s_from_distance(model: BinaryReadModel, d):
    """Log-likelihood ratio ``log f1 - log f0`` at Hamming distance ``d``.

    The binomial coefficient common to both likelihoods cancels, so neither
    likelihood is formed explicitly. Accepts scalars or arrays.
    """
    d_arr = np.asarray(d)
    if np.any((d_arr < 0) | (d_arr > model.word_length)):
        raise ValueError(f"distance out of range [0, {model.word_length}]")
    out = model.log_f1(d_arr) - model.log_f0(d_arr)
    return float(out) if np.ndim(out) == 0 else out


class ReadSet:
    """Equal-length binary words, stored bit-packed."""

    def __init__(self, reads):
        bits = np.array(reads, dtype=np.uint8) if len(reads) else np.zeros((0, 0), dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("reads must all have the same length")
        if np.any(bits > 1):
            raise ValueError("reads must contain only 0 and 1")
        self.length = bits.shape[1]
        self.packed = np.packbits(bits, axis=1)

    @classmethod
    def from_strings(cls, words: Sequence[str]) -> ReadSet:
        lengths = {len(w) for w in words}
        if len(lengths) > 1:
            raise ValueError(f"reads have differing lengths {sorted(lengths)}")
        return cls([[1 if c == "1" else 0 for c in w] for w in words])

    def __len__(self):
        return self.packed.shape[0]

    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.length)

    def to_strings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.bits()]

    def hamming_matrix(self) -> np.ndarray:
        """All pairwise Hamming distances, by XOR and popcount on packed bytes."""
        x = self.packed
        out = np.zeros((len(self), len(self)), dtype=np.int64)
        for i in range(len(self)):
            out[i] = np.bitwise_count(x[i] ^ x).sum(axis=1)
        return out


def hamming(a: str, b: str) -> int:
    if len(a) != len(b):
        raise ValueError("hamming distance needs equal lengths")
    return sum(c1 != c2 for c1, c2 in zip(a, b))


def score_matrix_from_reads(model: BinaryReadModel, reads: ReadSet) -> ScoreMatrix:
    if len(reads) and reads.length != model.word_length:
        raise ValueError(f"read length {reads.length} does not match model word length {model.word_length}")
    d = reads.hamming_matrix()
    return ScoreMatrix(delta_s_from_distance(model, d))


def load_score_matrix(source, has_header: bool = False) -> ScoreMatrix:
    """Read an N x N CSV of scores.

    Pairs differing by more than ``ASYMMETRY_TOL`` are rejected; smaller
    differences are averaged away. The diagonal is ignored.
    """
    name = str(source)
    rows = []
    with open(source, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and has_header:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(f"{name}:{lineno}: column {col}: not a number: {cell.strip()!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"{name}:{lineno}: column {col}: non-finite value {cell.strip()!r}")
                values.append(v)
            rows.append((lineno, values))
    if not rows:
        raise InputError(f"{name}: no data points")
    n = len(rows)
    for lineno, values in rows:
        if len(values) != n:
            raise InputError(f"{name}:{lineno}: expected {n} columns, found {len(values)}")
    s = np.array([v for _, v in rows])
    gap = np.abs(s - s.T)
    np.fill_diagonal(gap, 0.0)
    if gap.max() > ASYMMETRY_TOL:
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise InputError(
            f"{name}:{rows[i][0]}: entry ({i}, {j}) differs from ({j}, {i}) by {gap[i, j]:.3g}"
        )
    return ScoreMatrix((s + s.T) / 2.0)


def load_reads(source) -> ReadSet:
    """One read per line of '0'/'1'; blank lines and '#' comments skipped."""
    name = str(source)
    words = []
    width = None
    with open(source, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            bad = set(word) - {"0", "1"}
            if bad:
                raise InputError(f"{name}:{lineno}: invalid characters {''.join(sorted(bad))!r}")
            if width is None:
                width = len(word)
            elif len(word) != width:
                raise InputError(f"{name}:{lineno}: read length {len(word)} differs from {width}")
            words.append(word)
    if not words:
        raise InputError(f"{name}: no data points")
    return ReadSet.from_strings(words)


def write_reads(path, reads: ReadSet):
    Path(path).write_text("".join(w + "\n" for w in reads.to_strings()), encoding="utf-8")
