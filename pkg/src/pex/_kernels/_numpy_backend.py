"""Pure-numpy implementations of the tree kernels.

This backend is the import-time fallback when the compiled extension is
unavailable. Both backends must produce bitwise-identical results: every
floating-point accumulation here (cumulative sums, per-element gain
formulas, prediction updates) mirrors the sequential order used by the C
loops in ``_ctree.pyx``.
"""

from __future__ import annotations

import numpy as np


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int):
    """Exact greedy variance-reduction split over sorted unique values.

    Scans every feature in index order and every boundary between
    consecutive distinct sorted values. A candidate is valid when both
    sides have at least ``min_samples_leaf`` rows. Ties keep the earliest
    (lowest feature index, then lowest threshold) candidate.

    Returns
    -------
    (feature, threshold, gain)
        ``feature`` is -1 when no valid split improves on the parent.
        ``gain`` is the per-row reduction in sum of squared error.
    """
    n, d = X.shape
    msl = max(1, int(min_samples_leaf))
    if n < 2 * msl:
        return -1, 0.0, 0.0

    best_feat = -1
    best_thresh = 0.0
    # Compare the proxy sum_L^2/n_L + sum_R^2/n_R across all candidates;
    # the parent term S^2/n is mathematically constant so it is left out
    # of the comparison and only folded into the reported gain.
    best_score = -np.inf
    parent_score = None

    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        cum = np.cumsum(ys)
        total = cum[-1]
        if parent_score is None:
            parent_score = total * total / n

        # Left sizes msl..n-msl, split only between distinct values.
        i = np.arange(msl - 1, n - msl)
        valid = xs[i] != xs[i + 1]
        if not valid.any():
            continue
        i = i[valid]
        n_left = (i + 1).astype(np.float64)
        s_left = cum[i]
        s_right = total - s_left
        score = s_left * s_left / n_left + s_right * s_right / (n - n_left)
        j = int(np.argmax(score))
        if score[j] > best_score:
            best_score = float(score[j])
            best_feat = f
            lo = xs[i[j]]
            hi = xs[i[j] + 1]
            thresh = 0.5 * (lo + hi)
            # Midpoints of adjacent floats can round up to the right
            # value; pin to the left one so `x <= thresh` reproduces the
            # counted partition exactly.
            if thresh >= hi:
                thresh = lo
            best_thresh = float(thresh)

    if best_feat < 0 or best_score <= parent_score:
        return -1, 0.0, 0.0
    return best_feat, best_thresh, float((best_score - parent_score) / n)


def predict_forest(
    features: np.ndarray,
    thresholds: np.ndarray,
    lefts: np.ndarray,
    rights: np.ndarray,
    values: np.ndarray,
    offsets: np.ndarray,
    X: np.ndarray,
    learning_rate: float,
    base: float,
) -> np.ndarray:
    """Sum of shrunk tree predictions over a stacked node array.

    ``offsets[t]`` is the root node index of tree ``t``; child indices are
    absolute. Rows descend left when ``x[feature] <= threshold``.
    """
    n = X.shape[0]
    out = np.full(n, base, dtype=np.float64)
    rows = np.arange(n)
    for t in range(len(offsets) - 1):
        node = np.full(n, offsets[t], dtype=np.int64)
        while True:
            feat = features[node]
            active = feat >= 0
            if not active.any():
                break
            an = node[active]
            go_left = X[rows[active], feat[active]] <= thresholds[an]
            node[active] = np.where(go_left, lefts[an], rights[an])
        out += learning_rate * values[node]
    return out
