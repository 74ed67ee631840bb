"""Smooth compactly supported cutoffs shared by data construction and scores.

All bumps are built from the classic exp(-1/t) glue, so they are C-infinity,
even, equal to 1 on an inner plateau and identically 0 outside the support.
"""

import numpy as np


def glue(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    f = np.exp(-1.0 / tm)
    g = np.exp(-1.0 / (1.0 - tm))
    out[mid] = f / (f + g)
    return out


def plateau(s, inner, outer):
    """Even bump: 1 on [-inner, inner], 0 outside (-outer, outer)."""
    return glue((outer - np.abs(np.asarray(s, dtype=float))) / (outer - inner))


def psi(s):
    """Projection-weight bump: 1 on [-1, 1], supported in (-2, 2)."""
    return plateau(s, 1.0, 2.0)


def chi(s):
    """Data cutoff: 1 on [-2, 2], supported in (-4, 4)."""
    return plateau(s, 2.0, 4.0)


def radial_near_weight(rho, r0):
    """Radial partition for near/far source splits: 1 inside r0, 0 beyond 2 r0."""
    return plateau(rho, r0, 2.0 * r0)
