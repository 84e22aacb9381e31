"""Transitive propagation: damped max-sum message passing for clustering.

The solver works on the message differences ``A[i, j, k]`` (red minus blue)
sent by the transitivity factor of triangle ``{i, j, k}`` to edge ``(i, j)``,
and on the field ``B = dS + sum_k A[:, :, k]``. Clusters are read off the
sign of ``B``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .types import (
    HypothesisMatrix,
    Infeasible,
    Partition,
    ScoreMatrix,
    TripleVerdict,
    hypothesis_to_partition,
    is_transitive,
    objective,
    partition_objective,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.5
    convergence_goal: int = 1000
    max_iterations: int = 10000
    epsilon_div: float = 1e-12
    fast_path: bool = True
    dtype: str = "float64"
    threads: int | None = None

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"dampening must lie in (0, 1), got {self.lam}")
        if self.convergence_goal < 1:
            raise ValueError("convergence goal must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.epsilon_div <= 0:
            raise ValueError("epsilon_div must be positive")
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"unsupported dtype {self.dtype!r}")


class MessageTensor:
    """Message differences ``A[i, j, k]`` for every triangle.

    Only the ``3 * C(n, 3)`` distinct values are stored (see ``_kernels``);
    ``dense()`` materialises the full symmetric ``n x n x n`` array, with
    entries where ``k`` repeats ``i`` or ``j`` held at zero.
    """

    def __init__(self, n: int, dtype="float64"):
        self.n = n
        self.offsets = _kernels.row_offsets(n)
        self.packed = np.zeros((int(self.offsets[-1]), 3), dtype=dtype)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> MessageTensor:
        a = np.asarray(a)
        n = a.shape[0]
        if a.shape != (n, n, n):
            raise ValueError(f"expected an n x n x n array, got {a.shape}")
        if not np.array_equal(a, a.transpose(1, 0, 2)):
            raise ValueError("message tensor must be symmetric in its first two indices")
        out = cls(n, dtype=a.dtype if a.dtype in (np.float32, np.float64) else "float64")
        _kernels.pack(a.astype(out.packed.dtype), out.packed)
        return out

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n,) * 3, dtype=self.packed.dtype)
        _kernels.unpack(self.packed, self.n, out)
        return out

    def copy(self) -> MessageTensor:
        out = MessageTensor.__new__(MessageTensor)
        out.n = self.n
        out.offsets = self.offsets
        out.packed = self.packed.copy()
        return out

    def __getitem__(self, idx):
        i, j, k = (int(x) for x in idx)
        if len({i, j, k}) < 3:
            return self.packed.dtype.type(0)
        # rotate (i, j, k) so the smallest vertex leads, remembering which slot
        lo, mid, hi = sorted((i, j, k))
        m = self.n - 1 - lo
        row = int(self.offsets[lo]) + _pair_index(m, mid - lo - 1, hi - lo - 1)
        if k == hi:
            slot = 0
        elif k == lo:
            slot = 1
        else:
            slot = 2
        return self.packed[row, slot]

    @property
    def nbytes(self) -> int:
        return self.packed.nbytes


def _pair_index(m: int, a: int, b: int) -> int:
    """Rank of pair ``a < b`` among lexicographic pairs drawn from ``range(m)``."""
    return a * m - a * (a + 1) // 2 + (b - a - 1)


@dataclass
class SolverResult:
    h_star: HypothesisMatrix
    partition: Partition
    violations: TripleVerdict
    iterations: int
    converged: bool
    objective_value: float | Infeasible
    repaired_objective: float
    b_final: np.ndarray
    margin: float
    m_final: float = math.inf
    history: list = field(default_factory=list, repr=False)


def threshold(b: np.ndarray) -> HypothesisMatrix:
    """Red where ``B >= 0``; a tie at exactly zero resolves to red."""
    h = (np.asarray(b) >= 0).astype(np.uint8)
    np.fill_diagonal(h, 0)
    return HypothesisMatrix(h)


def no_prior_solution(scores: ScoreMatrix) -> HypothesisMatrix:
    """Per-edge decision from the likelihood ratio alone: blue iff ``dS < 0``."""
    return threshold(scores.delta_s)


def triple_update(u: float, v: float) -> float:
    """Target message for an edge whose two triangle partners carry fields u, v.

    Returns ``max(u, v, u + v) - max(0, u + v)``, which is
    ``-min(|u|, |v|)`` when both are negative, ``+min(|u|, |v|)`` when the
    signs differ and 0 when both are non-negative.
    """
    return float(_kernels.triple_update(float(u), float(v)))


def delta_a(b: np.ndarray, a: MessageTensor, i: int, j: int, k: int) -> float:
    """Undamped update of ``A[i, j, k]`` given the field ``b``.

    The partner edges contribute their field minus what this triangle sent
    them: ``u = b[j, k] - A[j, k, i]`` and ``v = b[k, i] - A[k, i, j]``.
    """
    if len({i, j, k}) < 3:
        raise ValueError("triangle vertices must be distinct")
    return triple_update(b[j, k] - a[j, k, i], b[k, i] - a[k, i, j])


def compute_b(scores: ScoreMatrix, a: MessageTensor) -> np.ndarray:
    if scores.n != a.n:
        raise ValueError(f"dimension mismatch: scores n={scores.n}, messages n={a.n}")
    out = np.empty((a.n, a.n), dtype=a.packed.dtype)
    _kernels.field_matrix(scores.delta_s.astype(a.packed.dtype), a.packed, out)
    return out


def sign_change_estimate(b: np.ndarray, delta_b: np.ndarray, eps: float) -> float:
    """Fewest iterations until some ``B[i, j]`` reaches zero at the current rate.

    Only edges moving toward zero count; edges with ``|dB| < eps`` cannot
    flip. Returns ``inf`` if nothing is heading for a sign change.
    """
    iu = np.triu_indices(b.shape[0], 1)
    bv = b[iu].astype(np.float64)
    dv = delta_b[iu].astype(np.float64)
    moving = np.abs(dv) >= eps
    heading = moving & (bv * dv <= 0) & ~((bv == 0) & (dv > 0))
    if not heading.any():
        return math.inf
    return float(np.min(-bv[heading] / dv[heading]))


def iterate(scores: ScoreMatrix, a: MessageTensor, cfg: SolverConfig, b: np.ndarray | None = None):
    """One synchronous damped sweep over all triangles, in place.

    Returns ``(a, b_new, delta_b, m)``. ``b`` may be passed to skip
    recomputing the field from ``a``.
    """
    if b is None:
        b = compute_b(scores, a)
    _kernels.sweep(a.packed, b, a.packed.dtype.type(cfg.lam), a.offsets)
    b_new = compute_b(scores, a)
    delta_b = b_new - b
    return a, b_new, delta_b, sign_change_estimate(b_new, delta_b, cfg.epsilon_div)


def _finish(scores, b, iterations, converged, m, history) -> SolverResult:
    h_star = threshold(b)
    partition, verdict = hypothesis_to_partition(h_star)
    iu = np.triu_indices(scores.n, 1)
    margin = float(np.min(np.abs(b[iu]))) if scores.n > 1 else math.inf
    return SolverResult(
        h_star=h_star,
        partition=partition,
        violations=verdict,
        iterations=iterations,
        converged=converged,
        objective_value=objective(scores, h_star),
        repaired_objective=partition_objective(scores, partition),
        b_final=np.array(b, dtype=np.float64),
        margin=margin,
        m_final=m,
        history=history,
    )


def solve(scores: ScoreMatrix, cfg: SolverConfig | None = None, record: bool = False) -> SolverResult:
    """Run transitive propagation until the sign of B is stable.

    Stops once the projected number of iterations to the next sign flip
    reaches ``cfg.convergence_goal``, or after ``cfg.max_iterations``
    sweeps (then ``converged`` is False and the last H* is returned).
    With ``record=True`` the per-iteration (iteration, m, flips) triples are
    kept in ``result.history``.
    """
    cfg = cfg or SolverConfig()
    _kernels.set_threads(cfg.threads)
    history: list = []

    if cfg.fast_path:
        h0 = no_prior_solution(scores)
        if is_transitive(h0):
            return _finish(scores, scores.delta_s.copy(), 0, True, math.inf, history)

    a = MessageTensor(scores.n, dtype=cfg.dtype)
    b = compute_b(scores, a)
    m = math.nan
    for it in range(1, cfg.max_iterations + 1):
        prev_sign = b >= 0
        _, b, _, m = iterate(scores, a, cfg, b)
        if record:
            history.append((it, m, int(np.count_nonzero(prev_sign != (b >= 0)) // 2)))
        if m >= cfg.convergence_goal:
            return _finish(scores, b, it, True, m, history)
    log.warning("no convergence after %d iterations (m=%.3g)", cfg.max_iterations, m)
    return _finish(scores, b, cfg.max_iterations, False, m, history)
