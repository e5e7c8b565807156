import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xgeoml.explain import (EnumerationLimitError, lime_explain, partial_dependence, pd_grid, shapley_exact,
                            shapley_weights, tree_importance)
from xgeoml.learners import LearnerConfig, LinearModel, fit


class FnModel:
    def __init__(self, fn):
        self.fn = fn

    def predict(self, X):
        return np.apply_along_axis(self.fn, 1, np.atleast_2d(X))


class RandomPoly:
    """Random sparse polynomial with pairwise and triple interactions."""

    def __init__(self, d, rng):
        self.d = d
        self.terms = []
        for _ in range(int(rng.integers(2, 7))):
            size = int(rng.integers(1, min(d, 3) + 1))
            idx = rng.choice(d, size=size, replace=False)
            pw = rng.integers(1, 3, size=size)
            self.terms.append((rng.standard_normal(), idx, pw))
        self.c = rng.standard_normal()

    def predict(self, X):
        X = np.atleast_2d(X)
        out = np.full(X.shape[0], self.c)
        for a, idx, pw in self.terms:
            out += a * np.prod(X[:, idx] ** pw, axis=1)
        return out


def permutation_shapley(model, x, ref):
    """Average marginal contribution over all d! feature orderings."""
    d = len(x)
    phi = np.zeros(d)
    perms = list(itertools.permutations(range(d)))
    for order in perms:
        z = ref.copy()
        prev = model.predict(z[None])[0]
        for j in order:
            z[j] = x[j]
            cur = model.predict(z[None])[0]
            phi[j] += cur - prev
            prev = cur
    return phi / len(perms)


def random_model(rng, d):
    if rng.random() < 0.5:
        return RandomPoly(d, rng)
    X = rng.standard_normal((60, d))
    y = np.sin(X @ rng.standard_normal(d)) + X[:, 0] * X[:, -1]
    return fit(LearnerConfig(kind=str(rng.choice(["tree", "gbt"])), n_rounds=15), X, y)


def test_shapley_weights_sum_over_subsets():
    for d in range(1, 9):
        w = shapley_weights(d)
        # weights over all subsets of the other d-1 features sum to 1
        assert sum(math.comb(d - 1, s) * w[s] for s in range(d)) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(30))
def test_exact_matches_permutation_oracle(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    model = random_model(rng, d)
    x = rng.standard_normal(d)
    bg = rng.standard_normal((25, d))
    bw = rng.uniform(0.1, 1.0, 25)
    att = shapley_exact(model, x, bg, bw)
    ref = np.average(bg, axis=0, weights=bw)
    np.testing.assert_allclose(att.values, permutation_shapley(model, x, ref), atol=1e-9)


def test_linear_model_closed_form():
    rng = np.random.default_rng(0)
    coef = rng.standard_normal(4)
    model = LinearModel(coef, 1.5)
    x, bg = rng.standard_normal(4), rng.standard_normal((40, 4))
    att = shapley_exact(model, x, bg)
    np.testing.assert_allclose(att.values, coef * (x - bg.mean(axis=0)), atol=1e-12)


def test_axioms_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        d = int(rng.integers(2, 6))
        x, bg = rng.standard_normal(d), rng.standard_normal((15, d))
        f, g = RandomPoly(d, rng), RandomPoly(d, rng)
        a = shapley_exact(f, x, bg)
        # efficiency
        assert a.values.sum() == pytest.approx(a.prediction - a.baseline, abs=1e-9)
        assert a.prediction == pytest.approx(f.predict(x[None])[0], abs=1e-12)
        # linearity
        h = FnModel(lambda z: 2.0 * f.predict(z[None])[0] - 0.5 * g.predict(z[None])[0])
        b = shapley_exact(g, x, bg)
        np.testing.assert_allclose(shapley_exact(h, x, bg).values, 2.0 * a.values - 0.5 * b.values, atol=1e-9)
        # dummy: a feature the model ignores gets zero
        dummy = int(rng.integers(0, d))
        fd = FnModel(lambda z, k=dummy: f.predict(np.where(np.arange(d) == k, 0.0, z)[None])[0])
        assert shapley_exact(fd, x, bg).values[dummy] == pytest.approx(0.0, abs=1e-12)
        # symmetry: swapping two features in a symmetric model swaps nothing
        i, j = rng.choice(d, size=2, replace=False)
        sym = FnModel(lambda z, i=i, j=j: np.sin(z[i] + z[j]) + z[i] * z[j] + np.sum(z))
        xs = x.copy()
        bs = bg.copy()
        bs[:, j] = bs[:, i]
        xs[j] = xs[i]
        s = shapley_exact(sym, xs, bs).values
        assert s[i] == pytest.approx(s[j], abs=1e-9)


def test_enumeration_limit():
    model = LinearModel(np.ones(16), 0.0)
    with pytest.raises(EnumerationLimitError):
        shapley_exact(model, np.zeros(16), np.zeros((3, 16)))
    assert shapley_exact(LinearModel(np.ones(15), 0.0), np.ones(15), np.zeros((2, 15))).values.sum() == pytest.approx(15)


# ---------------------------------------------------------------- LIME

def lime_relative_error(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 7))
    coef = rng.uniform(0.5, 3.0, d) * rng.choice([-1, 1], d)
    model = LinearModel(coef, rng.standard_normal())
    local = rng.standard_normal((80, d)) * rng.uniform(0.5, 2, d)
    att = lime_explain(model, rng.standard_normal(d), local, seed=seed)
    return float(np.max(np.abs(att.slopes - coef) / np.abs(coef)))


def test_lime_recovers_linear_slopes():
    errs = [lime_relative_error(s) for s in range(20)]
    assert np.median(errs) <= 0.05
    assert max(errs) < 0.01


def test_lime_seeded_and_frozen_features():
    rng = np.random.default_rng(1)
    local = rng.standard_normal((30, 3))
    local[:, 1] = 2.0
    model = LinearModel(np.array([1.0, 5.0, -2.0]), 0.0)
    a = lime_explain(model, local[0], local, seed=5)
    b = lime_explain(model, local[0], local, seed=5)
    np.testing.assert_array_equal(a.slopes, b.slopes)
    assert a.slopes[1] == 0.0
    with pytest.raises(ValueError):
        lime_explain(model, local[0], local[:1])


def test_lime_local_linearisation_of_quadratic():
    model = FnModel(lambda z: z[0] ** 2)
    local = np.random.default_rng(3).standard_normal((200, 1)) * 0.05
    att = lime_explain(model, np.array([1.0]), local, seed=0, n_samples=4000)
    assert att.slopes[0] == pytest.approx(2.0, rel=0.02)


# ---------------------------------------------------------------- importance and PD

def test_tree_importance_normalised_or_zero():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 3))
    imp = tree_importance(fit(LearnerConfig(kind="gbt"), X, X[:, 0] + X[:, 2] ** 2))
    assert imp.sum() == pytest.approx(1.0)
    assert np.all(imp >= 0)
    flat = tree_importance(fit(LearnerConfig(kind="tree"), X, np.ones(50)))
    np.testing.assert_array_equal(flat, 0.0)


def test_pd_grid_percentiles():
    v = np.arange(100.0)
    g = pd_grid(v, bins=4)
    np.testing.assert_allclose(g, np.quantile(v, [0.125, 0.375, 0.625, 0.875]))
    u = pd_grid(v, bins=4, binning="uniform")
    np.testing.assert_allclose(u, [12.375, 37.125, 61.875, 86.625])
    with pytest.raises(ValueError):
        pd_grid(np.ones(10))
    with pytest.raises(ValueError):
        pd_grid(v, bins=1)


def test_pd_of_additive_model_is_component_plus_mean():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 3))
    model = FnModel(lambda z: z[0] ** 3 + np.cos(z[1]) + 2 * z[2])
    curve = partial_dependence(model, X, 0, bins=10)
    offset = np.mean(np.cos(X[:, 1]) + 2 * X[:, 2])
    np.testing.assert_allclose(curve.means, curve.grid ** 3 + offset, atol=1e-12)


def test_pd_shared_grid():
    X = np.random.default_rng(3).standard_normal((30, 2))
    grid = np.linspace(-1, 1, 7)
    curve = partial_dependence(LinearModel(np.array([2.0, 0.0]), 1.0), X, 0, grid=grid)
    np.testing.assert_allclose(curve.means, 2 * grid + 1)


@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_efficiency_property(seed, d):
    rng = np.random.default_rng(seed)
    model = RandomPoly(d, rng)
    x, bg = rng.standard_normal(d), rng.standard_normal((10, d))
    a = shapley_exact(model, x, bg, rng.uniform(0.1, 1, 10))
    assert a.values.sum() == pytest.approx(a.prediction - a.baseline, abs=1e-9)
