# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Twin of ``_fallback.py``; results are bit-identical."""
import numpy as np

from libc.stdint cimport uint64_t, int64_t, uint8_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MULT = 0xD1B54A32D192ED03ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t trial_key(uint64_t base, uint64_t t) noexcept nogil:
    return mix64(base + (t + 1) * GOLDEN)


cdef inline double unit(uint64_t key, uint64_t j) noexcept nogil:
    return <double>(mix64(key + (j + 1) * GOLDEN) >> 11) * INV53


def stream_base(seed, stream):
    cdef uint64_t s = (<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef uint64_t st = (<uint64_t>(int(stream) & 0xFFFFFFFFFFFFFFFF))
    return int(mix64(s ^ (st * STREAM_MULT)))


def unit_draws(base, trials, j):
    cdef uint64_t[::1] tv = np.ascontiguousarray(trials, dtype=np.uint64)
    cdef Py_ssize_t n = tv.shape[0], k
    cdef uint64_t b = <uint64_t>base, jj = <uint64_t>j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for k in range(n):
            ov[k] = unit(trial_key(b, tv[k]), jj)
    return out


def message_trials(base, start, count, positions, line, intended, g, double u, double v):
    cdef int64_t[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef uint8_t[::1] ln = np.ascontiguousarray(line, dtype=np.uint8)
    cdef uint8_t[::1] want = np.ascontiguousarray(intended, dtype=np.uint8)
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    hist = np.zeros(ln.shape[0], dtype=np.int64)
    cdef int64_t[::1] hv = hist
    cdef uint64_t b = <uint64_t>base
    cdef uint64_t t0 = <uint64_t>start, t1 = <uint64_t>(start + count), t
    cdef Py_ssize_t npos = pos.shape[0], k
    cdef int64_t i
    cdef uint64_t key
    cdef long long successes = 0
    cdef int a, final, guess, failed
    cdef double p
    with nogil:
        t = t0
        while t < t1:
            key = trial_key(b, t)
            failed = 0
            for k in range(npos):
                i = pos[k]
                a = ln[i]
                guess = unit(key, <uint64_t>(2 * i)) < gv[i]
                final = a
                if guess != want[i]:
                    p = u if a == 1 else v
                    if unit(key, <uint64_t>(2 * i + 1)) < p:
                        final = 1 - a
                if final != want[i]:
                    hv[i] += 1
                    failed = 1
                    break
            if not failed:
                successes += 1
            t += 1
    return int(successes), hist


def latch_hysteresis(values, double v_h, double v_l, int initial):
    cdef double[::1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], k
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    cdef int state = initial
    with nogil:
        for k in range(n):
            if x[k] >= v_h:
                state = 1
            elif x[k] <= v_l:
                state = 0
            ov[k] = state
    return out
