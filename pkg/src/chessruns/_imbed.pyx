# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Markov chain imbedding kernel; same interface as ``_imbed_py``."""

from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "cython"


cdef double _tail(const double* p, Py_ssize_t n, int k, double* state) nogil:
    cdef Py_ssize_t i
    cdef int s, last = k - 1
    cdef double absorbed = 0.0, alive, pi
    for s in range(k):
        state[s] = 0.0
    state[0] = 1.0
    for i in range(n):
        pi = p[i]
        absorbed += state[last] * pi
        alive = 0.0
        for s in range(k):
            alive += state[s]
        for s in range(last, 0, -1):
            state[s] = state[s - 1] * pi
        state[0] = alive * (1.0 - pi)
    return absorbed


cdef const double[::1] _as_array(probs):
    return np.ascontiguousarray(probs, dtype=np.float64)


def imbed_tail(probs, int k):
    """P(longest success run >= k) for independent trials with success probs."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cdef const double[::1] p = _as_array(probs)
    cdef double* state = <double*> malloc(k * sizeof(double))
    cdef double out
    if state == NULL:
        raise MemoryError()
    try:
        with nogil:
            out = _tail(&p[0] if p.shape[0] else NULL, p.shape[0], k, state)
    finally:
        free(state)
    return out


def longest_run_tails(probs, int kmax, double cutoff=0.0):
    """[P(L >= 1), ..., P(L >= kmax)], zero-filled once a tail drops to cutoff."""
    cdef const double[::1] p = _as_array(probs)
    cdef Py_ssize_t n = p.shape[0]
    cdef double* state
    cdef int k
    cdef double t
    tails = [0.0] * kmax
    if kmax < 1:
        return tails
    state = <double*> malloc(kmax * sizeof(double))
    if state == NULL:
        raise MemoryError()
    try:
        for k in range(1, kmax + 1):
            with nogil:
                t = _tail(&p[0] if n else NULL, n, k, state)
            tails[k - 1] = t
            if t <= cutoff:
                break
    finally:
        free(state)
    return tails
