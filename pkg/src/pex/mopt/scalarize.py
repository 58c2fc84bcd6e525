"""Augmented Chebyshev scalarization of oriented objectives."""

from __future__ import annotations

import numpy as np


def scalarize(
    objectives: np.ndarray,
    weights: np.ndarray,
    rho: float,
    normalization: tuple[np.ndarray, np.ndarray],
) -> np.ndarray:
    """Weighted max plus rho-weighted sum of normalized losses; smaller is better.

    Losses are g_j = (hi_j - f_j) / (hi_j - lo_j), so a point at the ideal
    corner (f_j = hi_j for all j) scalarizes to 0. Accepts a single
    objective vector or a batch (..., m) and returns the matching shape
    without the last axis.
    """
    f = np.asarray(objectives, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    lo, hi = (np.asarray(v, dtype=np.float64) for v in normalization)
    if w.ndim != 1 or f.shape[-1] != len(w):
        raise ValueError("weights must match the objective dimension")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-8:
        raise ValueError("weights must be nonnegative and sum to 1")
    if lo.shape != w.shape or hi.shape != w.shape:
        raise ValueError("normalization bounds must match the objective dimension")
    if np.any(hi <= lo):
        raise ValueError("degenerate normalization range (hi must exceed lo)")
    if rho <= 0:
        raise ValueError("rho must be > 0")
    g = (hi - f) / (hi - lo)
    wg = w * g
    return wg.max(axis=-1) + rho * wg.sum(axis=-1)
