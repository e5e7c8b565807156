import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from xgeoml.kernels import DegenerateNeighborhoodError, KernelSpec, weight_matrix, weights_for
from xgeoml.spatial import build_index
from xgeoml.synth import grid_coords

from conftest import make_dataset


def index_for(coords):
    n = len(coords)
    return build_index(make_dataset(coords, np.zeros((n, 1)), np.zeros(n)))


GRID30 = index_for(grid_coords(30))
LINE = index_for([(float(x), 0.0) for x in range(12)])


def test_gaussian_shape_fixed():
    w = weights_for(LINE, KernelSpec.fixed("gaussian", 3.0), 0)
    assert w[0] == 1.0
    assert w[3] == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert np.all(w > 0)


def test_gaussian_adaptive_sigma_is_kth_distance():
    # 4 nearest of point 0 on a line: 0,1,2,3 -> r = 3
    w = weights_for(LINE, KernelSpec.adaptive("gaussian", 4), 0)
    assert w[3] == pytest.approx(math.exp(-0.5))


def test_binary_adaptive_150_on_grid():
    spec = KernelSpec.adaptive("binary", 150)
    for i in (0, 29, 435, 899):
        w = weights_for(GRID30, spec, i)
        assert np.count_nonzero(w) == 150
        assert set(np.unique(w)) == {0.0, 1.0}


def test_gaussian_binary_truncation():
    pts = [(0.0, 0.0), (9.0, 0.0), (9.01, 0.0), (4.0, 0.0)]
    w = weights_for(index_for(pts), KernelSpec.fixed("gaussian_binary", 9.0), 0)
    assert w[1] == pytest.approx(math.exp(-4.5), abs=1e-12)
    assert w[1] == pytest.approx(0.011109, abs=1e-6)
    assert w[2] == 0.0


def test_binary_fixed_radius_inclusive():
    w = weights_for(LINE, KernelSpec.fixed("binary", 2.0), 5)
    np.testing.assert_array_equal(np.flatnonzero(w), [3, 4, 5, 6, 7])


def test_degenerate_fixed_bandwidth():
    with pytest.raises(DegenerateNeighborhoodError):
        weights_for(LINE, KernelSpec.fixed("binary", 0.5), 4)


def test_adaptive_k_larger_than_n():
    with pytest.raises(ValueError):
        weights_for(LINE, KernelSpec.adaptive("binary", 13), 0)


@pytest.mark.parametrize("kw", [dict(kind="box"), dict(mode="nearest"), dict(mode="adaptive", bandwidth=1),
                                dict(mode="adaptive", bandwidth=2.5), dict(mode="fixed", bandwidth=0.0),
                                dict(sigma_multiplier=0.0)])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        KernelSpec(**kw)


def test_weight_matrix_rows():
    spec = KernelSpec.adaptive("gaussian_binary", 4)
    W = weight_matrix(LINE, spec)
    assert W.shape == (12, 12)
    for i in range(12):
        np.testing.assert_array_equal(W[i], weights_for(LINE, spec, i))


specs = st.one_of(
    st.builds(KernelSpec.fixed, st.sampled_from(["gaussian", "binary", "gaussian_binary"]), st.floats(1.0, 20.0)),
    st.builds(KernelSpec.adaptive, st.sampled_from(["gaussian", "binary", "gaussian_binary"]), st.integers(2, 900)),
)


@given(specs, st.integers(0, 899))
def test_weight_invariants_on_grid(spec, i):
    w = weights_for(GRID30, spec, i)
    d = GRID30.dist[i]
    assert np.all((w >= 0) & (w <= 1))
    assert w[i] == 1.0
    if spec.mode == "adaptive" and spec.kind == "binary":
        assert np.count_nonzero(w) == spec.bandwidth
    if spec.kind != "gaussian":
        r = spec.bandwidth if spec.mode == "fixed" else GRID30.kth_distance(i, spec.bandwidth)
        assert np.all(w[d > r] == 0)
    if spec.kind != "binary":
        nz = w > 0
        order = np.argsort(d[nz], kind="stable")
        assert np.all(np.diff(w[nz][order]) <= 1e-15)


@given(arrays(np.float64, (15, 2), elements=st.floats(-50, 50, allow_nan=False, width=32)),
       st.floats(0.1, 10), st.floats(2.0, 30.0), st.sampled_from(["gaussian", "binary", "gaussian_binary"]))
def test_scaling_coords_and_fixed_bandwidth(coords, c, b, kind):
    base = index_for(coords)
    scaled = index_for(coords * c)
    for i in range(0, 15, 4):
        try:
            w0 = weights_for(base, KernelSpec.fixed(kind, b), i)
        except DegenerateNeighborhoodError:
            continue
        w1 = weights_for(scaled, KernelSpec.fixed(kind, b * c), i)
        # membership can flip only for points sitting on the radius up to rounding
        on_edge = np.isclose(base.dist[i], b, rtol=1e-9)
        np.testing.assert_allclose(w0[~on_edge], w1[~on_edge], rtol=1e-9, atol=1e-12)


@given(st.integers(2, 900), st.integers(0, 899))
def test_gaussian_binary_below_gaussian_with_same_sigma(k, i):
    gb = weights_for(GRID30, KernelSpec.adaptive("gaussian_binary", k), i)
    # plain gaussian with the same sigma (r/3)
    g = weights_for(GRID30, KernelSpec.adaptive("gaussian", k, sigma_multiplier=1 / 3), i)
    assert np.all(gb <= g + 1e-15)
    inside = gb > 0
    np.testing.assert_allclose(gb[inside], g[inside], rtol=1e-12)
