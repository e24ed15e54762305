"""Vectorized numpy fallback for the tone-synthesis kernel."""

import numpy as np

IMPLEMENTATION = "numpy"


def synth_tones(freqs, amps, phases, t0, length, sample_rate, out=None):
    """Sum a bank of sinusoids over one sample block.

    Computes ``sum_l amps[l] * sin(2*pi*freqs[l]*(t0+t)/sample_rate + phases[l])``
    for ``t = 0..length-1``.  Accumulates into ``out`` when given.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    amps = np.asarray(amps, dtype=np.float64)
    phases = np.asarray(phases, dtype=np.float64)
    if out is None:
        out = np.zeros(length, dtype=np.float64)
    if freqs.size == 0:
        return out
    t = np.arange(t0, t0 + length, dtype=np.float64)
    omega = 2.0 * np.pi * freqs / sample_rate
    # (L, length) intermediate; L is 7 per engine so this stays small.
    out += amps @ np.sin(np.outer(omega, t) + phases[:, None])
    return out
