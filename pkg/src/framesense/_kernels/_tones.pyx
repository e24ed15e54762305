# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tone-synthesis kernel: sum-of-sinusoids over a sample block."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sin

cnp.import_array()

IMPLEMENTATION = "cython"


def synth_tones(freqs, amps, phases, t0, length, sample_rate, out=None):
    """Sum a bank of sinusoids over one sample block.

    Computes ``sum_l amps[l] * sin(2*pi*freqs[l]*(t0+t)/sample_rate + phases[l])``
    for ``t = 0..length-1``.  Accumulates into ``out`` when given.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(amps, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ph = np.ascontiguousarray(phases, dtype=np.float64)
    if out is None:
        out = np.zeros(length, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = out
    cdef Py_ssize_t n_lines = f.shape[0]
    cdef Py_ssize_t n = length
    cdef double fs = sample_rate
    cdef double start = t0
    cdef double two_pi = 6.283185307179586476925287
    cdef Py_ssize_t l, t
    cdef double w, p, amp
    with nogil:
        for l in range(n_lines):
            w = two_pi * f[l] / fs
            p = w * start + ph[l]
            amp = a[l]
            for t in range(n):
                acc[t] += amp * sin(w * t + p)
    return out
