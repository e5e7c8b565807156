"""Weighted learners behind one ``fit(X, y, w)`` entry point.

Two ways of handing spatial weights to a learner:

* ``sqrt_transform`` scales each row of ``[X | 1]`` and the response by
  ``sqrt(w)`` and fits unweighted.  For least squares this is exactly the
  weighted objective.
* ``sample_weight`` passes ``w`` to the learner's own weighted loss.

``auto`` picks the first for linear/ridge and the second for everything
else.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .trees import fit_gbt, fit_tree

KINDS = ("linear", "ridge", "tree", "gbt", "knn")
WEIGHTING_MODES = ("auto", "sqrt_transform", "sample_weight")


class SingularFitError(ValueError):
    """Weighted normal equations have no unique solution."""


class EmptyNeighborhoodError(ValueError):
    """Every weight is zero."""


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "gbt"
    ridge_lambda: float = 1e-6
    max_depth: int | None = None
    n_rounds: int = 100
    learning_rate: float = 0.1
    subsample: float = 1.0
    k_model: int = 5
    min_samples_leaf: int = 1
    weighting_mode: str = "auto"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.weighting_mode not in WEIGHTING_MODES:
            raise ValueError(f"unknown weighting mode {self.weighting_mode!r}")
        if self.max_depth is None:
            object.__setattr__(self, "max_depth", 6 if self.kind == "tree" else 3)
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if self.max_depth < 1 or self.n_rounds < 0 or self.k_model < 1 or self.min_samples_leaf < 1:
            raise ValueError("max_depth, k_model and min_samples_leaf must be >= 1; n_rounds >= 0")
        if not 0.0 < self.learning_rate or not 0.0 < self.subsample <= 1.0:
            raise ValueError("learning_rate must be > 0 and subsample in (0, 1]")

    @property
    def resolved_weighting(self) -> str:
        if self.weighting_mode != "auto":
            return self.weighting_mode
        return "sqrt_transform" if self.kind in ("linear", "ridge") else "sample_weight"

    @property
    def tree_based(self) -> bool:
        return self.kind in ("tree", "gbt")

    def as_dict(self) -> dict:
        return asdict(self)


class LinearModel:
    def __init__(self, coef: np.ndarray, intercept: float | None):
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = intercept

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = X @ self.coef
        if self.intercept is not None:
            out = out + self.intercept
        return out

    def coefficients(self) -> np.ndarray:
        """Slopes followed by the intercept (when fitted)."""
        if self.intercept is None:
            return self.coef.copy()
        return np.append(self.coef, self.intercept)


class KNNModel:
    """Weighted mean of the response over the nearest training rows in feature space."""

    def __init__(self, X, y, w, k: int):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        if k > X.shape[0]:
            raise ValueError(f"k_model={k} exceeds the {X.shape[0]} training rows")
        # canonical row order makes distance ties independent of input order
        canon = np.lexsort((*X.T[::-1], y))
        self.X, self.y, self.w, self.k = X[canon], y[canon], w[canon], k

    def predict(self, Xq) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        d2 = ((Xq[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        nn = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        ww = self.w[nn]
        return (ww * self.y[nn]).sum(axis=1) / ww.sum(axis=1)


class SqrtAugmentedModel:
    """A model fitted on sqrt-weighted ``[X | 1]`` rows, queried at unit weight."""

    def __init__(self, inner, n_features: int):
        self.inner = inner
        self.n_features = n_features

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.inner.predict(np.column_stack([X, np.ones(X.shape[0])]))

    def importance(self) -> np.ndarray:
        return self.inner.importance()[: self.n_features]

    def split_nodes(self):
        return [(f, g) for f, g in self.inner.split_nodes() if f < self.n_features]


def _as_arrays(X, y, w):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float).ravel()
    if X.shape[0] != y.size or w.size != y.size:
        raise ValueError("X, y and w must have the same number of rows")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return X, y, w


def apply_weighting(X, y, w, mode: str):
    """Return ``(X', y', w')`` after dropping zero-weight rows.

    ``sqrt_transform`` appends the intercept column before scaling, so
    ``X'`` has one more column than ``X``.
    """
    X, y, w = _as_arrays(X, y, w)
    keep = w > 0
    if not keep.any():
        raise EmptyNeighborhoodError("all weights are zero")
    X, y, w = X[keep], y[keep], w[keep]
    if mode == "sqrt_transform":
        s = np.sqrt(w)
        Xa = np.column_stack([X, np.ones(X.shape[0])]) * s[:, None]
        return Xa, y * s, np.ones_like(w)
    if mode == "sample_weight":
        return X, y, w
    raise ValueError(f"unknown weighting mode {mode!r}")


def _penalty(p: int, lam: float, free: int | None) -> np.ndarray:
    pen = np.full(p, lam)
    if free is not None:
        pen[free] = 0.0
    return pen


def fit_linear_wls(X, y, w=None, lam: float = 0.0, intercept: bool = True) -> LinearModel:
    """Minimise ``sum w_i (y_i - x_i.beta)^2 + lam * |beta|^2`` through the normal equations.

    The intercept, when present, is not penalised.
    """
    X, y, w = _as_arrays(X, y, w)
    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    A = np.column_stack([X, np.ones(X.shape[0])]) if intercept else X
    p = A.shape[1]
    if X.shape[0] < p and lam == 0:
        raise SingularFitError(f"{X.shape[0]} weighted rows cannot determine {p} coefficients")
    Aw = A * w[:, None]
    G = A.T @ Aw
    G[np.diag_indices(p)] += _penalty(p, lam, p - 1 if intercept else None)
    if lam == 0 and np.linalg.cond(G) > 1e13:
        raise SingularFitError("weighted normal equations are singular")
    try:
        beta = np.linalg.solve(G, Aw.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(str(exc)) from None
    if intercept:
        return LinearModel(beta[:-1], float(beta[-1]))
    return LinearModel(beta, None)


def fit_linear_sqrt(X, y, w=None, lam: float = 0.0) -> LinearModel:
    """Same objective as ``fit_linear_wls`` (with intercept), solved as unweighted
    least squares on sqrt-weighted rows via an orthogonal factorisation."""
    Xa, ya, _ = apply_weighting(X, y, w, "sqrt_transform")
    p = Xa.shape[1]
    if lam > 0:
        pen = np.sqrt(_penalty(p, lam, p - 1))
        Xa = np.vstack([Xa, np.diag(pen)])
        ya = np.concatenate([ya, np.zeros(p)])
    beta, _, rank, sv = np.linalg.lstsq(Xa, ya, rcond=None)
    if rank < p or (lam == 0 and sv[-1] <= sv[0] * 1e-13 ** 0.5):
        raise SingularFitError("sqrt-weighted design matrix is rank deficient")
    return LinearModel(beta[:-1], float(beta[-1]))


def fit_knn(X, y, w=None, k_model: int = 5) -> KNNModel:
    X, y, w = _as_arrays(X, y, w)
    keep = w > 0
    if k_model > int(keep.sum()):
        raise ValueError(f"k_model={k_model} exceeds the {int(keep.sum())} weighted training rows")
    return KNNModel(X[keep], y[keep], w[keep], k_model)


def fit(cfg: LearnerConfig, X, y, w=None, seed=None):
    """Fit the configured learner on weighted rows; zero-weight rows are ignored."""
    X, y, w = _as_arrays(X, y, w)
    if not np.any(w > 0):
        raise EmptyNeighborhoodError("all weights are zero")
    mode = cfg.resolved_weighting
    lam = 0.0 if cfg.kind == "linear" else cfg.ridge_lambda

    if cfg.kind in ("linear", "ridge"):
        if mode == "sqrt_transform":
            return fit_linear_sqrt(X, y, w, lam)
        return fit_linear_wls(X, y, w, lam)

    if mode == "sqrt_transform":
        Xa, ya, wa = apply_weighting(X, y, w, mode)
        return SqrtAugmentedModel(_fit_nonlinear(cfg, Xa, ya, wa, seed), X.shape[1])
    return _fit_nonlinear(cfg, X, y, w, seed)


def _fit_nonlinear(cfg: LearnerConfig, X, y, w, seed):
    if cfg.kind == "tree":
        return fit_tree(X, y, w, cfg.max_depth, cfg.min_samples_leaf)
    if cfg.kind == "gbt":
        return fit_gbt(X, y, w, cfg.n_rounds, cfg.learning_rate, cfg.max_depth,
                       cfg.subsample, cfg.min_samples_leaf, seed)
    return fit_knn(X, y, w, cfg.k_model)
