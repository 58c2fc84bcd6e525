# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels: exact greedy split search and forest prediction.

Arithmetic mirrors `_numpy_backend` operation-for-operation so that both
backends grow identical trees and return bitwise-identical predictions.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def best_split(const double[:, ::1] X, const double[::1] y, Py_ssize_t min_samples_leaf):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t msl = min_samples_leaf if min_samples_leaf > 1 else 1
    if n < 2 * msl:
        return -1, 0.0, 0.0

    cdef Py_ssize_t best_feat = -1
    cdef double best_thresh = 0.0
    cdef double best_score = -np.inf
    cdef double parent_score = 0.0
    cdef bint have_parent = False

    cdef cnp.ndarray xcol = np.empty(n, dtype=np.float64)
    cdef double[::1] xv = xcol
    cdef double[::1] xs = np.empty(n, dtype=np.float64)
    cdef double[::1] ys = np.empty(n, dtype=np.float64)
    cdef long long[::1] order
    cdef Py_ssize_t f, i, k, best_i
    cdef double total, s_left, n_left, score, feat_best_score, lo, hi, thresh

    for f in range(d):
        for i in range(n):
            xv[i] = X[i, f]
        order = np.argsort(xcol, kind="stable").astype(np.int64)
        total = 0.0
        for i in range(n):
            k = order[i]
            xs[i] = xv[k]
            ys[i] = y[k]
        # Sequential accumulation, same order as np.cumsum.
        s_left = 0.0
        for i in range(n):
            s_left += ys[i]
        total = s_left
        if not have_parent:
            parent_score = total * total / n
            have_parent = True

        feat_best_score = -np.inf
        best_i = -1
        s_left = 0.0
        for i in range(n - 1):
            s_left += ys[i]
            if i + 1 < msl or i + 1 > n - msl:
                continue
            if xs[i] == xs[i + 1]:
                continue
            n_left = <double> (i + 1)
            score = s_left * s_left / n_left + (total - s_left) * (total - s_left) / (n - n_left)
            if score > feat_best_score:
                feat_best_score = score
                best_i = i
        if best_i < 0:
            continue
        if feat_best_score > best_score:
            best_score = feat_best_score
            best_feat = f
            lo = xs[best_i]
            hi = xs[best_i + 1]
            thresh = 0.5 * (lo + hi)
            if thresh >= hi:
                thresh = lo
            best_thresh = thresh

    if best_feat < 0 or best_score <= parent_score:
        return -1, 0.0, 0.0
    return best_feat, best_thresh, (best_score - parent_score) / n


def predict_forest(const int[::1] features, const double[::1] thresholds, const int[::1] lefts,
                   const int[::1] rights, const double[::1] values, const int[::1] offsets,
                   const double[:, ::1] X, double learning_rate, double base):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = offsets.shape[0] - 1
    cdef cnp.ndarray out_arr = np.full(n, base, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t, i
    cdef int node
    for t in range(n_trees):
        for i in range(n):
            node = offsets[t]
            while features[node] >= 0:
                if X[i, features[node]] <= thresholds[node]:
                    node = lefts[node]
                else:
                    node = rights[node]
            out[i] += learning_rate * values[node]
    return out_arr
