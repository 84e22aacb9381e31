"""Partition functions of the blue-edge prior and the moments they generate.

``Z(x, N)`` sums ``x ** b(C)`` over partitions ``C`` of N points, where
``b(C)`` counts same-cluster pairs; ``Z_lam`` adds a factor ``lam ** n(C)``
for the number of clusters. Both obey the recurrence obtained by placing
point ``N + 1`` in a block with ``k`` of the first ``N`` points::

    Z(x, N + 1) = sum_k C(N, k) x ** (k (k + 1) / 2) Z(x, N - k)

Read as a mixture over ``k`` with weights proportional to the summands, the
same recurrence carries exact means and variances of ``b`` and ``n``: each
summand shifts ``b`` by ``k (k + 1) / 2`` and ``n`` by one. This is the
normalised form of differentiating the recurrence in ``x`` and ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln


@dataclass(frozen=True)
class PriorMoments:
    n: int
    x: float
    log_z: float
    mean_blue: float
    mean_clusters: float
    var_clusters: float

    @property
    def blue_fraction(self) -> float:
        edges = self.n * (self.n - 1) // 2
        return self.mean_blue / edges if edges else 0.0

    @property
    def sd_clusters(self) -> float:
        return math.sqrt(self.var_clusters)


@lru_cache(maxsize=256)
def _recurrence(x: float, n: int):
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    log_z = np.zeros(n + 1)
    mean_b = np.zeros(n + 1)
    mean_k = np.zeros(n + 1)
    var_k = np.zeros(n + 1)
    log_fact = gammaln(np.arange(n + 1) + 1.0)
    log_x = math.log(x) if x > 0 else -math.inf
    for m in range(n):
        k = np.arange(m + 1)
        edges = k * (k + 1) / 2.0
        with np.errstate(invalid="ignore"):
            log_w = np.where(edges > 0, edges * log_x, 0.0)
        rest = m - k
        terms = log_fact[m] - log_fact[k] - log_fact[rest] + log_w + log_z[rest]
        top = terms.max()
        w = np.exp(terms - top)
        total = w.sum()
        w /= total
        log_z[m + 1] = top + math.log(total)
        mean_b[m + 1] = np.dot(w, edges + mean_b[rest])
        mu = np.dot(w, mean_k[rest])
        mean_k[m + 1] = 1.0 + mu
        var_k[m + 1] = np.dot(w, var_k[rest] + (mean_k[rest] - mu) ** 2)
    return log_z, mean_b, mean_k, var_k


def prior_moments(x: float, n: int) -> PriorMoments:
    log_z, mean_b, mean_k, var_k = _recurrence(float(x), int(n))
    return PriorMoments(n, float(x), float(log_z[n]), float(mean_b[n]), float(mean_k[n]), float(var_k[n]))


def log_partition_function(x: float, n: int) -> float:
    """``log Z(x, n)`` evaluated with log-sum-exp."""
    return prior_moments(x, n).log_z


def partition_function(x, n: int):
    """``Z(x, n)``: exact when ``x`` is an int or Fraction, else a float (may overflow to inf)."""
    if isinstance(x, Rational):
        return partition_function_exact(x, n)
    return math.exp(log_partition_function(x, n))


def partition_function_exact(x, n: int):
    """``Z(x, n)`` in exact integer or rational arithmetic."""
    x = Fraction(x)
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    z = [Fraction(1)]
    for m in range(n):
        z.append(sum(math.comb(m, k) * x ** (k * (k + 1) // 2) * z[m - k] for k in range(m + 1)))
    out = z[n]
    return int(out) if out.denominator == 1 else out


def blue_edge_expectation(x: float, n: int) -> tuple[float, float]:
    """Prior mean of the blue-edge count, and that mean over ``n (n - 1) / 2``."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    mom = prior_moments(x, n)
    return mom.mean_blue, mom.blue_fraction


def cluster_count_moments(x: float, n: int) -> tuple[float, float]:
    """Prior mean and variance of the number of clusters."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    mom = prior_moments(x, n)
    return mom.mean_clusters, mom.var_clusters


@dataclass(frozen=True)
class PriorPolynomial:
    """``Z_lam(x, n)`` as a polynomial in ``lam``; ``coefficients[k]`` multiplies ``lam ** k``."""

    n: int
    x: object
    coefficients: tuple

    def __call__(self, lam):
        return sum(c * lam**k for k, c in enumerate(self.coefficients))

    @property
    def degree(self) -> int:
        return max((k for k, c in enumerate(self.coefficients) if c != 0), default=0)

    def mean(self):
        z = sum(self.coefficients)
        return sum(k * c for k, c in enumerate(self.coefficients)) / z

    def variance(self):
        z = sum(self.coefficients)
        mu = self.mean()
        return sum(c * (k - mu) ** 2 for k, c in enumerate(self.coefficients)) / z


def prior_polynomial(x, n: int) -> PriorPolynomial:
    """Coefficients of ``Z_lam(x, n)``, exact for rational ``x``.

    At ``x = 1`` they are the Stirling numbers of the second kind.
    """
    exact = isinstance(x, Rational)
    xv = Fraction(x) if exact else float(x)
    zero = Fraction(0) if exact else 0.0
    polys = [[Fraction(1) if exact else 1.0]]
    for m in range(n):
        acc = [zero] * (m + 2)
        for k in range(m + 1):
            weight = math.comb(m, k) * xv ** (k * (k + 1) // 2)
            for deg, c in enumerate(polys[m - k]):
                acc[deg + 1] += weight * c
        polys.append(acc)
    coeffs = polys[n]
    if exact:
        coeffs = [int(c) if c.denominator == 1 else c for c in coeffs]
    return PriorPolynomial(n, x, tuple(coeffs))


def critical_x_estimate(n: int) -> float:
    """Order-of-magnitude location of the ordering transition, ``1 + 2 ln(n) / n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return 1.0 + 2.0 * math.log(n) / n


def blue_fraction_crossing(n: int, level: float = 0.5, xtol: float = 1e-12) -> float:
    """The ``x`` at which the prior blue-edge fraction equals ``level``."""
    if n < 2:
        raise ValueError("n must be at least 2")

    def f(x):
        return blue_edge_expectation(x, n)[1] - level

    lo, hi = 0.5, 2.0
    while f(lo) > 0:
        lo /= 2
    while f(hi) < 0:
        hi *= 2
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
