"""Weighted regression trees and squared-error gradient boosting.

Splits maximise the weighted variance reduction
``SSE(parent) - SSE(left) - SSE(right)``; a split sends ``x <= threshold``
left, with the threshold halfway between the two adjacent training values.
Predictions at training rows are therefore unchanged by any strictly
increasing transform of a feature column, and at arbitrary query rows by
any positive affine one.  Among equal gains the lowest feature index, then
the lowest split position, wins.

Feature columns are argsorted once per fit and every node scans that
order, so boosting rounds never re-sort.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True)
def _grow(X, order, y, w, active, max_depth, min_leaf,
          feature, threshold, left, right, value, gain, fitted):
    m, d = X.shape
    node_of = np.full(m, -1, dtype=np.int64)
    for i in range(m):
        if active[i]:
            node_of[i] = 0
    depth = np.zeros(feature.size, dtype=np.int64)
    n_nodes = 1
    node = 0
    while node < n_nodes:
        W = 0.0
        swy = 0.0
        cnt = 0
        ymin = np.inf
        ymax = -np.inf
        for i in range(m):
            if node_of[i] == node:
                W += w[i]
                swy += w[i] * y[i]
                cnt += 1
                ymin = min(ymin, y[i])
                ymax = max(ymax, y[i])
        mu = swy / W
        value[node] = mu
        feature[node] = LEAF
        left[node] = LEAF
        right[node] = LEAF
        gain[node] = 0.0
        threshold[node] = 0.0
        if depth[node] < max_depth and cnt >= 2 * min_leaf and ymin != ymax:
            parent_sse = 0.0
            for i in range(m):
                if node_of[i] == node:
                    parent_sse += w[i] * (y[i] - mu) ** 2
            best_g = -np.inf
            best_j = -1
            best_t = 0.0
            for j in range(d):
                cw = 0.0
                cwy = 0.0
                n_left = 0
                prev = 0.0
                for k in range(m):
                    r = order[k, j]
                    if node_of[r] != node:
                        continue
                    xr = X[r, j]
                    if n_left >= min_leaf and cnt - n_left >= min_leaf and xr > prev:
                        cr = W - cw
                        if cw > 0.0 and cr > 0.0:
                            g = cwy * cwy * (1.0 / cw + 1.0 / cr)
                            if g > best_g:
                                best_g = g
                                best_j = j
                                best_t = 0.5 * (prev + xr)
                    cw += w[r]
                    cwy += w[r] * (y[r] - mu)
                    n_left += 1
                    prev = xr
            if best_j >= 0 and best_g > 1e-12 * parent_sse:
                lo = n_nodes
                hi = n_nodes + 1
                n_nodes += 2
                feature[node] = best_j
                threshold[node] = best_t
                gain[node] = best_g
                left[node] = lo
                right[node] = hi
                depth[lo] = depth[node] + 1
                depth[hi] = depth[node] + 1
                for i in range(m):
                    if node_of[i] == node:
                        node_of[i] = lo if X[i, best_j] <= best_t else hi
        node += 1
    for i in range(m):
        if node_of[i] >= 0:
            fitted[i] = value[node_of[i]]
    return n_nodes


@njit(cache=True)
def _predict(X, feature, threshold, left, right, value, scale):
    n = X.shape[0]
    T = feature.shape[0]
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for t in range(T):
            k = 0
            while feature[t, k] != LEAF:
                if X[i, feature[t, k]] <= threshold[t, k]:
                    k = left[t, k]
                else:
                    k = right[t, k]
            s += value[t, k]
        out[i] = s * scale
    return out


@njit(cache=True)
def _boost(X, order, y, w, masks, n_rounds, learning_rate, max_depth, min_leaf,
           feature, threshold, left, right, value, gain):
    m = X.shape[0]
    base = 0.0
    W = 0.0
    for i in range(m):
        base += w[i] * y[i]
        W += w[i]
    base /= W
    F = np.full(m, base)
    resid = np.empty(m)
    fitted = np.empty(m)
    full = masks.shape[0] == 0
    all_rows = np.ones(m, dtype=np.bool_)
    for t in range(n_rounds):
        for i in range(m):
            resid[i] = y[i] - F[i]
        active = all_rows if full else masks[t]
        _grow(X, order, resid, w, active, max_depth, min_leaf,
              feature[t], threshold[t], left[t], right[t], value[t], gain[t], fitted)
        if full:
            for i in range(m):
                F[i] += learning_rate * fitted[i]
        else:
            F += learning_rate * _predict(X, feature[t:t + 1], threshold[t:t + 1], left[t:t + 1],
                                          right[t:t + 1], value[t:t + 1], 1.0)
    return base


def _alloc(n_trees: int, max_depth: int):
    size = 2 ** (max_depth + 1) - 1
    return (np.full((n_trees, size), LEAF, dtype=np.int64), np.zeros((n_trees, size)),
            np.full((n_trees, size), LEAF, dtype=np.int64), np.full((n_trees, size), LEAF, dtype=np.int64),
            np.zeros((n_trees, size)), np.zeros((n_trees, size)))


class _TreeEnsemble:
    def __init__(self, arrays, n_features: int, scale: float = 1.0, base: float = 0.0):
        self.feature, self.threshold, self.left, self.right, self.value, self.gain = arrays
        self.n_features = n_features
        self.scale = scale
        self.base = base

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        if self.feature.shape[0] == 0:
            return np.full(X.shape[0], self.base)
        return self.base + _predict(X, self.feature, self.threshold, self.left, self.right, self.value, self.scale)

    def split_nodes(self) -> list[tuple[int, float]]:
        """(feature, purity gain) for every internal node of every tree."""
        internal = self.feature != LEAF
        return list(zip(self.feature[internal].tolist(), self.gain[internal].tolist()))

    def importance(self) -> np.ndarray:
        """Unnormalised per-feature sum of purity gains."""
        out = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(out, self.feature[internal], self.gain[internal])
        return out


class RegressionTree(_TreeEnsemble):
    @property
    def n_leaves(self) -> int:
        used = np.zeros_like(self.feature, dtype=bool)
        used[0, 0] = True
        kids = self.left[self.feature != LEAF], self.right[self.feature != LEAF]
        used[0, np.concatenate(kids)] = True
        return int(np.sum(used & (self.feature == LEAF)))


class GradientBoostedTrees(_TreeEnsemble):
    """``base + learning_rate * sum(tree_r(x))``."""

    @property
    def learning_rate(self) -> float:
        return self.scale

    @property
    def n_rounds(self) -> int:
        return self.feature.shape[0]


def _clean(X, y, w):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float).ravel()
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    keep = w > 0
    if not keep.any():
        raise ValueError("all weights are zero")
    X, y, w = X[keep], y[keep], w[keep]
    # canonical row order: gain sums, and so near-tie resolution, cannot depend on input order
    canon = np.lexsort((w, y, *X.T[::-1]))
    X = np.ascontiguousarray(X[canon])
    return X, np.ascontiguousarray(y[canon]), np.ascontiguousarray(w[canon]), np.argsort(X, axis=0, kind="stable")


def fit_tree(X, y, w=None, max_depth: int = 6, min_samples_leaf: int = 1) -> RegressionTree:
    X, y, w, order = _clean(X, y, w)
    arrays = _alloc(1, max_depth)
    fitted = np.empty(X.shape[0])
    _grow(X, order, y, w, np.ones(X.shape[0], dtype=bool), max_depth, max(1, min_samples_leaf),
          *(a[0] for a in arrays), fitted)
    return RegressionTree(arrays, X.shape[1])


def fit_gbt(X, y, w=None, n_rounds: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
            subsample: float = 1.0, min_samples_leaf: int = 1, seed=None) -> GradientBoostedTrees:
    """Squared-error boosting started from the weighted mean of ``y``.

    With ``subsample < 1`` each round grows its tree on a fresh random
    subset of rows drawn without replacement from ``seed``.
    """
    X, y, w, order = _clean(X, y, w)
    m = X.shape[0]
    if subsample < 1.0:
        rng = np.random.default_rng(seed)
        size = max(1, int(round(subsample * m)))
        masks = np.zeros((n_rounds, m), dtype=bool)
        for t in range(n_rounds):
            masks[t, rng.choice(m, size=size, replace=False)] = True
    else:
        masks = np.zeros((0, m), dtype=bool)
    arrays = _alloc(n_rounds, max_depth)
    base = _boost(X, order, y, w, masks, n_rounds, learning_rate, max_depth, max(1, min_samples_leaf), *arrays)
    return GradientBoostedTrees(arrays, X.shape[1], learning_rate, base)
