# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Must stay bit-compatible with ``_kernels_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t FNV_OFFSET = 14695981039346656037ULL
cdef uint64_t FNV_PRIME = 1099511628211ULL


cdef inline uint64_t _fnv1a(const unsigned char* buf, Py_ssize_t n) noexcept nogil:
    cdef uint64_t h = FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(n):
        h ^= buf[i]
        h *= FNV_PRIME
    return h


def fnv1a64(bytes data):
    return _fnv1a(<const unsigned char*> data, len(data))


def hash_keys(list keys, uint64_t dim):
    cdef Py_ssize_t n = len(keys), i
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef bytes key
    for i in range(n):
        key = keys[i]
        out[i] = <int64_t>(_fnv1a(<const unsigned char*> key, len(key)) % dim)
    return out


def row_logits(const double[::1] weights, const int64_t[:, ::1] feats, double scale):
    cdef Py_ssize_t n = feats.shape[0], k = feats.shape[1], i, j
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(k):
                acc = acc + weights[feats[i, j]]
            out[i] = acc * scale
    return out


def segment_log_softmax(const double[::1] logits, const int64_t[::1] offsets):
    cdef Py_ssize_t nseg = offsets.shape[0] - 1, s, i, lo, hi
    cdef cnp.ndarray[double, ndim=1] out = np.empty(logits.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef double m, z, lse
    with nogil:
        for s in range(nseg):
            lo = offsets[s]
            hi = offsets[s + 1]
            m = logits[lo]
            for i in range(lo + 1, hi):
                if logits[i] > m:
                    m = logits[i]
            z = 0.0
            for i in range(lo, hi):
                z = z + exp(logits[i] - m)
            lse = m + log(z)
            for i in range(lo, hi):
                o[i] = logits[i] - lse
    return out


def scatter_rows(double[::1] out, const int64_t[:, ::1] feats, const double[::1] coef):
    cdef Py_ssize_t n = feats.shape[0], k = feats.shape[1], i, j
    cdef double c
    with nogil:
        for i in range(n):
            c = coef[i]
            if c == 0.0:
                continue
            for j in range(k):
                out[feats[i, j]] += c
