"""Explanations of a fitted local model at its target point.

Every explainer only needs ``model.predict(X) -> (m,)``; ``tree_importance``
additionally needs ``model.importance()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_SHAPLEY_FEATURES = 15


class EnumerationLimitError(ValueError):
    pass


@dataclass
class ShapleyAttribution:
    values: np.ndarray
    baseline: float
    prediction: float


@dataclass
class LimeAttribution:
    slopes: np.ndarray
    intercept: float


@dataclass
class PDCurve:
    feature: int
    grid: np.ndarray
    means: np.ndarray


def _subset_masks(d: int) -> np.ndarray:
    codes = np.arange(1 << d)
    return ((codes[:, None] >> np.arange(d)) & 1).astype(bool)


def shapley_weights(d: int) -> np.ndarray:
    """``|S|! (d-|S|-1)! / d!`` indexed by ``|S|``."""
    return np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) for s in range(d)])


def shapley_exact(model, x, background, bw=None) -> ShapleyAttribution:
    """Exact Shapley values by enumerating all ``2^d`` coalitions.

    Features outside a coalition are set to the ``bw``-weighted mean of the
    background column.
    """
    x = np.asarray(x, dtype=float).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=float))
    d = x.size
    if d > MAX_SHAPLEY_FEATURES:
        raise EnumerationLimitError(f"exact Shapley enumeration is limited to {MAX_SHAPLEY_FEATURES} features, got {d}")
    if background.shape[0] == 0:
        raise ValueError("background must be nonempty")
    ref = np.average(background, axis=0, weights=bw)

    masks = _subset_masks(d)
    v = np.asarray(model.predict(np.where(masks, x, ref)), dtype=float)
    wts = shapley_weights(d)
    sizes = masks.sum(axis=1)
    phi = np.zeros(d)
    for j in range(d):
        without = ~masks[:, j]
        codes = np.flatnonzero(without)
        phi[j] = np.sum(wts[sizes[codes]] * (v[codes | (1 << j)] - v[codes]))
    return ShapleyAttribution(phi, float(v[0]), float(v[-1]))


def lime_explain(model, x, local_X, seed=None, n_samples: int = 1000,
                 kernel_width: float | None = None, ridge: float = 1e-3) -> LimeAttribution:
    """Weighted linear surrogate fitted on Gaussian perturbations around ``x``.

    Perturbations use the per-feature standard deviation of ``local_X``; a
    feature with zero spread stays at ``x_j`` and gets slope 0.
    """
    x = np.asarray(x, dtype=float).ravel()
    local_X = np.atleast_2d(np.asarray(local_X, dtype=float))
    if local_X.shape[0] < 2:
        raise ValueError("need at least 2 local rows")
    d = x.size
    s = local_X.std(axis=0)
    active = s > 0
    width = 0.75 * math.sqrt(d) if kernel_width is None else kernel_width

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, d))
    noise[:, ~active] = 0.0
    dz = noise * s
    fz = np.asarray(model.predict(x + dz), dtype=float)
    prox = np.exp(-np.sum(noise * noise, axis=1) / width ** 2)

    k = int(active.sum())
    A = np.column_stack([dz[:, active], np.ones(n_samples)])
    Aw = A * prox[:, None]
    G = A.T @ Aw
    G[np.arange(k), np.arange(k)] += ridge
    beta = np.linalg.solve(G, Aw.T @ fz)
    slopes = np.zeros(d)
    slopes[active] = beta[:k]
    return LimeAttribution(slopes, float(beta[-1]))


def tree_importance(model) -> np.ndarray:
    """Per-feature sum of split purity gains, normalised to 1 (zeros if nothing split)."""
    raw = np.asarray(model.importance(), dtype=float)
    total = raw.sum()
    if total <= 0:
        return np.zeros_like(raw)
    return raw / total


def pd_grid(values, bins: int = 20, binning: str = "percentile") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if binning == "percentile":
        grid = np.quantile(values, (np.arange(bins) + 0.5) / bins)
    elif binning == "uniform":
        lo, hi = values.min(), values.max()
        grid = lo + (hi - lo) * (np.arange(bins) + 0.5) / bins
    else:
        raise ValueError(f"unknown binning {binning!r}")
    grid = np.unique(grid)
    if grid.size < 2:
        raise ValueError("feature is constant over the local rows; partial dependence undefined")
    return grid


def partial_dependence(model, local_X, feature: int, bins: int = 20, binning: str = "percentile",
                       grid=None) -> PDCurve:
    """Average prediction over ``local_X`` with one feature overridden at each grid value.

    ``grid`` overrides the binning so curves from different local models can
    share abscissae.
    """
    local_X = np.atleast_2d(np.asarray(local_X, dtype=float))
    if local_X.shape[0] == 0:
        raise ValueError("local_X is empty")
    if grid is None:
        grid = pd_grid(local_X[:, feature], bins, binning)
    grid = np.asarray(grid, dtype=float)
    m = local_X.shape[0]
    stacked = np.tile(local_X, (grid.size, 1))
    stacked[:, feature] = np.repeat(grid, m)
    means = np.asarray(model.predict(stacked), dtype=float).reshape(grid.size, m).mean(axis=1)
    return PDCurve(feature, grid, means)
