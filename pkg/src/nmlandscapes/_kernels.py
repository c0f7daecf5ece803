"""Compiled inner loop for binary GA fitness; numba is optional."""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

odd_sums = None

if njit is not None:

    @njit(cache=True, nogil=True)
    def odd_sums(term_masks, weights, neg_masks):
        """``out[p] = sum_t weights[t] * parity(term_masks[t] & neg_masks[p])``."""
        P = neg_masks.shape[0]
        out = np.zeros(P)
        for t in range(term_masks.shape[0]):
            tm = term_masks[t]
            w = weights[t]
            for p in range(P):
                x = tm & neg_masks[p]
                x ^= x >> 32
                x ^= x >> 16
                x ^= x >> 8
                x ^= x >> 4
                x ^= x >> 2
                x ^= x >> 1
                out[p] += w * (x & 1)
        return out
