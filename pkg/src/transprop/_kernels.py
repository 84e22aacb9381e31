"""Numba kernels for the O(N^3) message sweep.

Messages live in a packed ``(n_triangles, 3)`` array, one row per triangle
``i < j < k`` in lexicographic order::

    row[0] = A[i, j, k]   (edge ij, third vertex k)
    row[1] = A[j, k, i]   (edge jk, third vertex i)
    row[2] = A[k, i, j]   (edge ki, third vertex j)

The three entries of a triangle depend only on each other and on the B
snapshot, so rows can be rewritten in place without breaking the synchronous
sweep. Every row is owned by one thread and B is reduced serially in row
order, so parallel runs are bit-identical to serial ones.
"""

import warnings

import numba
import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)


@njit(cache=True)
def triple_update(u, v):
    """Red-minus-blue max-sum message from one transitivity factor.

    ``u`` and ``v`` are the cavity fields of the two other edges of the
    triangle. With the edge red the others may be (1,1), (1,0) or (0,1);
    with it blue they must be (0,0) or (1,1). The difference of the two
    maxima, ``max(u, v, u + v) - max(0, u + v)``, reduces to the branches
    below without rounding.
    """
    if u < 0.0 and v < 0.0:
        return u if u > v else v
    if u >= 0.0 and v >= 0.0:
        return 0.0 * u
    au = u if u >= 0.0 else -u
    av = v if v >= 0.0 else -v
    return au if au < av else av


@njit(cache=True)
def row_offsets(n):
    """Index of the first triangle whose smallest vertex is ``i``."""
    out = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        m = n - 1 - i
        out[i + 1] = out[i] + m * (m - 1) // 2
    return out


@njit(cache=True, parallel=True)
def sweep(msgs, b, lam, offsets):
    n = b.shape[0]
    keep = 1.0 - lam
    for i in prange(n):
        t = offsets[i]
        for j in range(i + 1, n):
            f_base_ij = b[i, j]
            for k in range(j + 1, n):
                old_ij = msgs[t, 0]
                old_jk = msgs[t, 1]
                old_ki = msgs[t, 2]
                f_ij = f_base_ij - old_ij
                f_jk = b[j, k] - old_jk
                f_ki = b[i, k] - old_ki
                msgs[t, 0] = keep * old_ij + lam * triple_update(f_jk, f_ki)
                msgs[t, 1] = keep * old_jk + lam * triple_update(f_ki, f_ij)
                msgs[t, 2] = keep * old_ki + lam * triple_update(f_ij, f_jk)
                t += 1


@njit(cache=True)
def field_matrix(delta_s, msgs, out):
    """out = delta_s + sum of incoming messages, reduced in row order."""
    n = delta_s.shape[0]
    for i in range(n):
        out[i, i] = 0.0
        for j in range(i + 1, n):
            out[i, j] = 0.0
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                out[i, j] += msgs[t, 0]
                out[j, k] += msgs[t, 1]
                out[i, k] += msgs[t, 2]
                t += 1
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] += delta_s[i, j]
            out[j, i] = out[i, j]


@njit(cache=True)
def unpack(msgs, n, dense):
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                dense[i, j, k] = msgs[t, 0]
                dense[j, i, k] = msgs[t, 0]
                dense[j, k, i] = msgs[t, 1]
                dense[k, j, i] = msgs[t, 1]
                dense[k, i, j] = msgs[t, 2]
                dense[i, k, j] = msgs[t, 2]
                t += 1


@njit(cache=True)
def pack(dense, out):
    n = dense.shape[0]
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                out[t, 0] = dense[i, j, k]
                out[t, 1] = dense[j, k, i]
                out[t, 2] = dense[k, i, j]
                t += 1


@njit(cache=True)
def count_violations(h):
    n = h.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            hij = h[i, j]
            for k in range(j + 1, n):
                if hij + h[j, k] + h[i, k] == 1:
                    count += 1
    return count


@njit(cache=True)
def list_violations(h, count):
    n = h.shape[0]
    out = np.empty((count, 3), dtype=np.int64)
    c = 0
    for i in range(n):
        for j in range(i + 1, n):
            hij = h[i, j]
            for k in range(j + 1, n):
                if hij + h[j, k] + h[i, k] == 1:
                    out[c, 0] = i
                    out[c, 1] = j
                    out[c, 2] = k
                    c += 1
    return out


def set_threads(threads):
    """Clamp a requested thread count to what numba was started with."""
    if threads is None:
        return
    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
