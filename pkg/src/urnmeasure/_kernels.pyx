# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled counting kernels.

Both functions mirror :mod:`urnmeasure._fallback` exactly; the test suite
checks the two backends against each other.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def at_least_counts(const int64_t[::1] urn, const int64_t[::1] starts,
                    const int64_t[::1] stops, const int64_t[::1] qptr,
                    const int64_t[::1] ks, Py_ssize_t n_urns):
    """Number of urns with at least ``ks[q]`` member balls, per query.

    Query ``q`` owns the half-open index ranges ``starts[r]:stops[r]`` for
    ``qptr[q] <= r < qptr[q + 1]`` (0-based positions into ``urn``).
    """
    cdef Py_ssize_t n_q = ks.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] out = np.zeros(n_q, dtype=np.int64)
    cdef int64_t[::1] counter = np.zeros(max(n_urns, 1), dtype=np.int64)
    cdef Py_ssize_t q, r, m, u
    cdef int64_t k, hits
    for q in range(n_q):
        k = ks[q]
        hits = 0
        for r in range(qptr[q], qptr[q + 1]):
            for m in range(starts[r], stops[r]):
                u = urn[m]
                counter[u] += 1
                if counter[u] == k:
                    hits += 1
        for r in range(qptr[q], qptr[q + 1]):
            for m in range(starts[r], stops[r]):
                counter[urn[m]] = 0
        out[q] = hits
    return out


def arc_distinct_table(const int64_t[::1] tokens, Py_ssize_t n_vocab, Py_ssize_t denom):
    """Distinct-token counts for every value window ``[i/D, j/D]`` on the doubled sequence.

    Position ``p`` in ``1..2n`` holds ``tokens[(p - 1) % n]`` at value ``p/n``.
    Entry ``[i, j]`` counts distinct tokens at positions with
    ``i/D <= p/n <= j/D``; it is exact whenever ``j - i <= D``.
    """
    cdef Py_ssize_t n = tokens.shape[0]
    cdef Py_ssize_t size = 2 * denom + 2
    cdef cnp.ndarray[int64_t, ndim=2] grid = np.zeros((size, size), dtype=np.int64)
    cdef int64_t[:, ::1] g2 = grid
    cdef int64_t[::1] last = np.zeros(max(n_vocab, 1), dtype=np.int64)
    cdef Py_ssize_t p, tok, prev, lo, hi, col, i, j
    cdef int64_t D = denom, nn = n
    for p in range(1, 2 * n + 1):
        tok = tokens[(p - 1) % n]
        prev = last[tok]
        last[tok] = p
        hi = (p * D) // nn
        col = (p * D + nn - 1) // nn
        if prev > 0:
            lo = (prev * D) // nn + 1
        else:
            lo = 0
        if hi > 2 * D:
            hi = 2 * D
        if lo <= hi:
            g2[lo, col] += 1
            g2[hi + 1, col] -= 1
    for i in range(1, size):
        for j in range(size):
            g2[i, j] += g2[i - 1, j]
    for i in range(size):
        for j in range(1, size):
            g2[i, j] += g2[i, j - 1]
    return grid[:size - 1, :size - 1]
