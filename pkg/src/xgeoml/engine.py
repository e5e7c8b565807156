"""Per-point local models: leave-one-out evaluation, bandwidth scans,
the explanation pass, the GWR baseline and recovery metrics.

Each target point is an independent task.  Its learner and explainer
seeds derive from ``(run seed, point index)`` only, so results do not
depend on how points are scheduled across worker processes.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import learners
from .explain import lime_explain, partial_dependence, pd_grid, shapley_exact, tree_importance
from .kernels import KernelSpec, weights_for
from .learners import LearnerConfig
from .spatial import DistanceIndex, SpatialDataset, UndefinedCorrelationError, pearson_correlation

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.05
EXPLAINERS = ("shap", "lime", "importance")

_LEARNER_STREAM, _LIME_STREAM = 0, 1


class EngineError(RuntimeError):
    """A run could not produce a usable result."""


@dataclass(frozen=True)
class ExplainConfig:
    shap: bool = True
    lime: bool = True
    importance: bool = True
    lime_samples: int = 1000
    lime_kernel_width: float | None = None
    pd_features: tuple[int, ...] = ()
    pd_bins: int = 20
    pd_binning: str = "percentile"


@dataclass
class LOOResult:
    predictions: np.ndarray
    r2: float
    failures: dict[int, str] = field(default_factory=dict)


@dataclass
class AttributionField:
    """Row ``i`` of every matrix comes from the local model at point ``i``; failed rows are NaN."""

    predictions: np.ndarray
    shap: np.ndarray | None = None
    shap_base: np.ndarray | None = None
    lime: np.ndarray | None = None
    lime_intercept: np.ndarray | None = None
    importance: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    pd: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    loo: np.ndarray | None = None
    failures: dict[int, str] = field(default_factory=dict)

    def explainer_fields(self) -> dict[str, np.ndarray]:
        out = {}
        for name in EXPLAINERS:
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    def pd_curve(self, feature: int) -> tuple[np.ndarray, np.ndarray]:
        """Shared grid and the point-averaged partial dependence curve."""
        grid, per_point = self.pd[feature]
        return grid, np.nanmean(per_point, axis=0)


@dataclass
class ScanResult:
    kernel: KernelSpec
    bandwidths: list
    r2: np.ndarray
    correlations: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def chosen(self):
        r2 = np.where(np.isnan(self.r2), -np.inf, self.r2)
        best = r2.max()
        return min(b for b, r in zip(self.bandwidths, r2) if r == best)


@dataclass
class Recovery:
    correlations: np.ndarray
    degenerate: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.correlations))


def r2_score(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    ok = np.isfinite(yhat)
    y, yhat = y[ok], yhat[ok]
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def point_seed(run_seed: int, i: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(run_seed, spawn_key=(i, stream))


# --------------------------------------------------------------------------
# per-point task scheduling

_CTX: dict | None = None


def _run_chunk(args):
    fn, indices = args
    out = []
    for i in indices:
        try:
            out.append((True, fn(_CTX, i)))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append((False, f"{type(exc).__name__}: {exc}"))
    return out


def available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def map_points(fn: Callable, ctx: dict, n: int, threads: int = 1) -> list:
    """Run ``fn(ctx, i)`` for every point; returns ``(ok, value_or_message)`` in index order.

    Worker count is ``threads`` capped at the usable CPUs; oversubscribing
    only adds fork and pickling overhead.  Output never depends on it.
    """
    global _CTX
    _CTX = ctx
    threads = min(threads, available_cpus())
    try:
        if threads <= 1 or n < 2:
            return _run_chunk((fn, range(n)))
        chunks = [c.tolist() for c in np.array_split(np.arange(n), min(n, threads * 4))]
        with ProcessPoolExecutor(threads, mp_context=mp.get_context("fork")) as ex:
            parts = list(ex.map(_run_chunk, [(fn, c) for c in chunks]))
        return [r for part in parts for r in part]
    finally:
        _CTX = None


def _check_failures(failures: dict, n: int, what: str):
    if failures:
        log.warning("%s: %d of %d points failed", what, len(failures), n)
    if len(failures) > MAX_FAILURE_RATE * n:
        first = next(iter(failures.items()))
        raise EngineError(f"{what}: {len(failures)} of {n} points failed (limit {MAX_FAILURE_RATE:.0%}); "
                          f"first failure at point {first[0]}: {first[1]}")


# --------------------------------------------------------------------------
# leave-one-out

def _loo_point(ctx, i):
    ds, d = ctx["ds"], ctx["ds"].d
    w = weights_for(ctx["index"], ctx["kernel"], i)
    w[i] = 0.0
    rows = np.flatnonzero(w > 0)
    if rows.size < d + 2:
        raise ValueError(f"only {rows.size} weighted neighbours after leaving the target out (need {d + 2})")
    X = ds.features
    model = learners.fit(ctx["learner"], X[rows], ds.response[rows], w[rows],
                         seed=point_seed(ctx["seed"], i, _LEARNER_STREAM))
    return float(model.predict(X[i:i + 1])[0])


def loo_evaluate(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec, learner: LearnerConfig,
                 seed: int = 0, threads: int = 1) -> LOOResult:
    """Predict each point from a local model that never saw it.

    The adaptive radius is measured on the full dataset; only the training
    rows exclude the target.
    """
    ctx = dict(ds=ds, index=index, kernel=kernel, learner=learner, seed=seed)
    results = map_points(_loo_point, ctx, ds.n, threads)
    pred = np.full(ds.n, np.nan)
    failures = {}
    for i, (ok, val) in enumerate(results):
        if ok:
            pred[i] = val
        else:
            failures[i] = val
    _check_failures(failures, ds.n, f"LOO {kernel.label()} bw={kernel.bandwidth}")
    return LOOResult(pred, r2_score(ds.response, pred), failures)


def holdout_evaluate(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec, learner: LearnerConfig,
                     seed: int = 0, test_fraction: float = 0.2, threads: int = 1) -> tuple[float, float]:
    """Train/test R2 with a random point holdout; test points never enter any local fit."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    test = np.zeros(ds.n, dtype=bool)
    test[rng.permutation(ds.n)[: int(round(test_fraction * ds.n))]] = True
    ctx = dict(ds=ds, index=index, kernel=kernel, learner=learner, seed=seed, test=test)
    results = map_points(_holdout_point, ctx, ds.n, threads)
    pred = np.array([v if ok else np.nan for ok, v in results])
    failures = {i: v for i, (ok, v) in enumerate(results) if not ok}
    _check_failures(failures, ds.n, "holdout")
    return r2_score(ds.response[~test], pred[~test]), r2_score(ds.response[test], pred[test])


def _holdout_point(ctx, i):
    ds = ctx["ds"]
    w = weights_for(ctx["index"], ctx["kernel"], i)
    w[ctx["test"]] = 0.0
    rows = np.flatnonzero(w > 0)
    if rows.size < ds.d + 2:
        raise ValueError("too few training neighbours")
    model = learners.fit(ctx["learner"], ds.features[rows], ds.response[rows], w[rows],
                         seed=point_seed(ctx["seed"], i, _LEARNER_STREAM))
    return float(model.predict(ds.features[i:i + 1])[0])


# --------------------------------------------------------------------------
# explanation pass

def _explain_point(ctx, i):
    ds, cfg, learner = ctx["ds"], ctx["explain"], ctx["learner"]
    X = ds.features
    w = weights_for(ctx["index"], ctx["kernel"], i)
    rows = np.flatnonzero(w > 0)
    if rows.size < ds.d + 2:
        raise ValueError(f"only {rows.size} weighted neighbours (need {ds.d + 2})")
    local_X, local_w = X[rows], w[rows]
    model = learners.fit(learner, local_X, ds.response[rows], local_w,
                         seed=point_seed(ctx["seed"], i, _LEARNER_STREAM))
    x = X[i]
    out = {"pred": float(model.predict(x[None, :])[0])}
    if cfg.shap:
        att = shapley_exact(model, x, local_X, local_w)
        out["shap"], out["shap_base"] = att.values, att.baseline
    if cfg.lime:
        att = lime_explain(model, x, local_X, seed=point_seed(ctx["seed"], i, _LIME_STREAM),
                           n_samples=cfg.lime_samples, kernel_width=cfg.lime_kernel_width)
        out["lime"], out["lime_intercept"] = att.slopes, att.intercept
    if cfg.importance and hasattr(model, "importance"):
        out["importance"] = tree_importance(model)
    if hasattr(model, "coefficients"):
        out["coefficients"] = model.coefficients()
    if cfg.pd_features:
        out["pd"] = {j: partial_dependence(model, local_X, j, grid=ctx["pd_grids"][j]).means
                     for j in cfg.pd_features}
    return out


def explain_all(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec, learner: LearnerConfig,
                explain: ExplainConfig = ExplainConfig(), seed: int = 0, threads: int = 1) -> AttributionField:
    """Fit every local model on its full weighted neighbourhood and explain it at its target.

    Partial dependence curves share one grid per feature, binned over the
    whole dataset, so the per-point curves can be averaged.
    """
    n, d = ds.n, ds.d
    pd_grids = {j: pd_grid(ds.features[:, j], explain.pd_bins, explain.pd_binning) for j in explain.pd_features}
    ctx = dict(ds=ds, index=index, kernel=kernel, learner=learner, seed=seed, explain=explain, pd_grids=pd_grids)
    results = map_points(_explain_point, ctx, n, threads)

    fld = AttributionField(predictions=np.full(n, np.nan))
    if explain.shap:
        fld.shap, fld.shap_base = np.full((n, d), np.nan), np.full(n, np.nan)
    if explain.lime:
        fld.lime, fld.lime_intercept = np.full((n, d), np.nan), np.full(n, np.nan)
    if explain.importance and learner.tree_based:
        fld.importance = np.full((n, d), np.nan)
    if learner.kind in ("linear", "ridge"):
        fld.coefficients = np.full((n, d + 1), np.nan)
    for j, grid in pd_grids.items():
        fld.pd[j] = (grid, np.full((n, grid.size), np.nan))

    for i, (ok, out) in enumerate(results):
        if not ok:
            fld.failures[i] = out
            continue
        fld.predictions[i] = out["pred"]
        for key in ("shap", "shap_base", "lime", "lime_intercept", "importance", "coefficients"):
            target = getattr(fld, key)
            if target is not None and key in out:
                target[i] = out[key]
        for j, means in out.get("pd", {}).items():
            fld.pd[j][1][i] = means
    _check_failures(fld.failures, n, "explain")
    return fld


# --------------------------------------------------------------------------
# GWR baseline and smoothing

def gwr_coefficient_surface(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec,
                            ridge_lambda: float = 0.0) -> np.ndarray:
    """Classical GWR: per-point weighted least squares slopes, intercept in the last column."""
    n, d = ds.n, ds.d
    coef = np.full((n, d + 1), np.nan)
    failures = {}
    for i in range(n):
        try:
            w = weights_for(index, kernel, i)
            model = learners.fit_linear_wls(ds.features, ds.response, w, ridge_lambda)
            coef[i] = model.coefficients()
        except ValueError as exc:
            failures[i] = str(exc)
    _check_failures(failures, n, "GWR")
    return coef


def gwr_smooth_attributions(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec,
                            values: np.ndarray) -> np.ndarray:
    """Turn a per-point attribution field into a coefficient surface.

    At each point, feature ``j``'s attributions over the weighted
    neighbourhood are regressed on the weight-centred ``x_j`` plus an
    intercept; the local slope is the smoothed coefficient.
    """
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    X = ds.features
    out = np.full((n, d), np.nan)
    failures = {}
    for i in range(n):
        w = weights_for(index, kernel, i)
        for j in range(d):
            ok = (w > 0) & np.isfinite(values[:, j])
            wj, xj, pj = w[ok], X[ok, j], values[ok, j]
            if xj.size < 2 or np.ptp(xj) == 0:
                failures[(i, j)] = "locally constant feature"
                continue
            xc = xj - np.average(xj, weights=wj)
            # with a weight-centred regressor the intercept decouples from the slope
            out[i, j] = float(np.sum(wj * xc * pj) / np.sum(wj * xc * xc))
    _check_failures(failures, n * d, "SHAP smoothing")
    return out


def recovery_metrics(values: np.ndarray, truth) -> Recovery:
    """Pearson correlation of each field column with the matching true coefficient surface.

    A zero-variance column scores 0 and is flagged.  Rows with NaN in the
    field are skipped.
    """
    values = np.asarray(values, dtype=float)
    T = truth.matrix() if hasattr(truth, "matrix") else np.asarray(truth, dtype=float)
    if T.shape[0] != values.shape[0]:
        raise ValueError("field and truth have different point counts")
    d = min(values.shape[1], T.shape[1])
    corr = np.zeros(d)
    flags = np.zeros(d, dtype=bool)
    for j in range(d):
        ok = np.isfinite(values[:, j])
        try:
            corr[j] = pearson_correlation(values[ok, j], T[ok, j])
        except (UndefinedCorrelationError, ValueError):
            flags[j] = True
            log.warning("feature %d: zero-variance field, correlation recorded as 0", j)
    return Recovery(corr, flags)


def field_recovery(fld: AttributionField, truth) -> dict[str, Recovery]:
    out = {name: recovery_metrics(v, truth) for name, v in fld.explainer_fields().items()}
    if fld.coefficients is not None:
        out["coefficients"] = recovery_metrics(fld.coefficients[:, :-1], truth)
    return out


def headline_explainer(learner: LearnerConfig, available: Sequence[str]) -> str:
    """Explainer behind the single 'average correlation' figure of a run."""
    for name in (("importance", "lime", "shap") if learner.tree_based else ("lime", "shap", "coefficients")):
        if name in available:
            return name
    return available[0]


# --------------------------------------------------------------------------
# bandwidth scan

def default_grid(mode: str) -> list:
    if mode == "fixed":
        return [float(b) for b in range(2, 41, 2)]
    return list(range(20, 901, 30))


def scan_bandwidth(ds: SpatialDataset, index: DistanceIndex, kernel: KernelSpec, learner: LearnerConfig,
                   grid: Sequence | None = None, seed: int = 0, threads: int = 1,
                   truth=None, explain: ExplainConfig | None = None) -> ScanResult:
    """LOO R2 over a bandwidth grid; with ``truth``, also recovery correlations per explainer."""
    grid = list(default_grid(kernel.mode) if grid is None else grid)
    if not grid:
        raise EngineError("empty bandwidth grid")
    r2 = np.full(len(grid), np.nan)
    corr: dict[str, np.ndarray] = {}
    for g, bw in enumerate(grid):
        spec = kernel.with_bandwidth(bw)
        if spec.mode == "adaptive" and spec.bandwidth > ds.n:
            log.warning("bandwidth %s exceeds n=%d; skipped", bw, ds.n)
            continue
        try:
            r2[g] = loo_evaluate(ds, index, spec, learner, seed, threads).r2
            if truth is not None:
                fld = explain_all(ds, index, spec, learner, explain or ExplainConfig(), seed, threads)
                for name, rec in field_recovery(fld, truth).items():
                    corr.setdefault(name, np.full((len(grid), rec.correlations.size), np.nan))[g] = rec.correlations
        except EngineError as exc:
            log.warning("bandwidth %s failed: %s", bw, exc)
    if np.all(np.isnan(r2)):
        raise EngineError(f"every bandwidth in the grid failed for {kernel.label()}")
    return ScanResult(kernel, grid, r2, corr)


def ols_fit(ds: SpatialDataset) -> tuple[learners.LinearModel, float]:
    """Global unweighted least squares with intercept and its in-sample R2."""
    model = learners.fit_linear_wls(ds.features, ds.response)
    return model, r2_score(ds.response, model.predict(ds.features))


def ols_loo_r2(ds: SpatialDataset) -> float:
    """Exact LOO R2 of the global OLS fit through the hat-matrix shortcut."""
    A = np.column_stack([ds.features, np.ones(ds.n)])
    H = A @ np.linalg.solve(A.T @ A, A.T)
    resid = ds.response - H @ ds.response
    loo_resid = resid / (1.0 - np.diag(H))
    return 1.0 - float(np.sum(loo_resid ** 2)) / float(np.sum((ds.response - ds.response.mean()) ** 2))


