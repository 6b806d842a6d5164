import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import pinned_map
from sgdrf.errors import ConfigError
from sgdrf.features import FeatureMap, FeatureMapSpec, build, exact_gram, exact_kernel


def test_build_is_deterministic():
    spec = FeatureMapSpec("fourier-gaussian", 100, 4, 1.3, seed=5)
    a, b = build(spec), build(spec)
    assert a.W.tobytes() == b.W.tobytes()
    assert a.q.tobytes() == b.q.tobytes()


def test_prefix_matches_smaller_build():
    big = build(FeatureMapSpec("relu", 300, 3, seed=2))
    small = build(FeatureMapSpec("relu", 70, 3, seed=2))
    np.testing.assert_array_equal(big.prefix(70).W, small.W)


def test_fourier_single_feature_bounded():
    fm = build(FeatureMapSpec("fourier-gaussian", 1, 1))
    xs = np.linspace(-50, 50, 1001)[:, None]
    assert np.all(np.abs(fm.transform(xs)) <= math.sqrt(2) + 1e-15)
    assert fm.kappa == pytest.approx(math.sqrt(2))


def test_linear_sketch_identity_rows():
    fm = pinned_map("linear-sketch", np.eye(3))
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(fm.map(x), x / math.sqrt(3))


def test_fourier_zero_parameters():
    fm = pinned_map("fourier-gaussian", np.zeros((4, 2)), np.zeros(4))
    np.testing.assert_allclose(fm.map([0.3, -1.0]), np.full(4, math.sqrt(2) / 2))


def test_relu_negative_projection_is_zero():
    fm = pinned_map("relu", [[1.0, 0.0]])
    assert fm.map([-1.0, 3.0])[0] == 0.0


def test_fourier_hand_example():
    fm = pinned_map("fourier-gaussian", [[1.0], [2.0]], [0.0, math.pi / 2])
    # oracle: (1/sqrt 2) * (sqrt2 cos 0, sqrt2 cos(pi/2)) = (1, 0)
    np.testing.assert_allclose(fm.map([0.0]), [1.0, 0.0], atol=1e-15)


def test_transform_rows_match_single_maps():
    fm = build(FeatureMapSpec("fourier-gaussian", 50, 3, seed=1))
    X = np.random.default_rng(0).normal(size=(7, 3))
    Phi = fm.transform(X)
    for i in range(7):
        assert Phi[i].tobytes() == fm.map(X[i]).tobytes()


def test_transform_dimension_mismatch():
    fm = build(FeatureMapSpec("relu", 5, 3))
    with pytest.raises(ValueError):
        fm.transform(np.zeros((2, 4)))


def test_linear_sketch_converges_to_inner_product():
    M = 100_000
    fm = build(FeatureMapSpec("linear-sketch", M, 3, seed=11))
    x, x2 = np.array([1.0, 0, 0]), np.array([0.6, 0.8, 0])
    assert abs(fm.approx_kernel(x, x2) - 0.6) <= 3 / math.sqrt(M)


def test_fourier_diagonal_concentrates_at_one():
    x = np.array([0.4, -0.2])
    errs = []
    for M in (100, 10_000):
        vals = [build(FeatureMapSpec("fourier-gaussian", M, 2, seed=s)).approx_kernel(x, x) for s in range(30)]
        errs.append(np.mean(np.abs(np.array(vals) - 1)))
    assert errs[1] < errs[0] / 5


def test_relu_monte_carlo_matches_limit():
    # Monte-Carlo oracle for E[max(<w,x>,0) max(<w,y>,0)], w ~ N(0, I)
    rng = np.random.default_rng(3)
    x, y = np.array([1.0, 0.5]), np.array([-0.3, 1.2])
    w = rng.standard_normal((400_000, 2))
    mc = np.mean(np.maximum(w @ x, 0) * np.maximum(w @ y, 0))
    assert exact_kernel("relu", 1.0, x, y) == pytest.approx(mc, rel=0.01)
    fm = build(FeatureMapSpec("relu", 200_000, 2, seed=4))
    assert fm.approx_kernel(x, y) == pytest.approx(mc, rel=0.02)


def test_relu_kernel_diagonal():
    x = np.array([3.0, 4.0])
    # theta = 0: |x|^2 / (2 pi) * pi = |x|^2 / 2
    assert exact_kernel("relu", 1.0, x, x) == pytest.approx(12.5)


def test_gaussian_kernel_values():
    assert exact_kernel("fourier-gaussian", 0.7, [1.0, 2.0], [1.0, 2.0]) == 1.0
    sigma = 0.7
    x2 = np.array([sigma * math.sqrt(2), 0.0])
    assert exact_kernel("fourier-gaussian", sigma, [0.0, 0.0], x2) == pytest.approx(math.exp(-1), abs=1e-15)
    assert exact_kernel("linear-sketch", 1.0, [1.0, 0.0], [0.0, 1.0]) == 0.0


def test_unscaled_fourier_halves_kernel():
    fm = build(FeatureMapSpec("fourier-gaussian", 20000, 2, seed=0, scaled=False))
    x = np.array([0.2, 0.1])
    assert fm.approx_kernel(x, x) == pytest.approx(0.5, abs=0.02)
    assert fm.limit_kernel(x, x) == 0.5


def test_unknown_kind():
    with pytest.raises(ConfigError):
        FeatureMapSpec("poly", 2, 2)
    with pytest.raises(ConfigError):
        exact_kernel("poly", 1.0, [0.0], [0.0])


def test_sidecar_round_trip(tmp_path):
    fm = build(FeatureMapSpec("fourier-gaussian", 9, 3, 0.37, seed=8))
    fm.save(tmp_path / "fm.txt")
    back = FeatureMap.load(tmp_path / "fm.txt")
    assert back.spec == fm.spec
    assert back.W.tobytes() == fm.W.tobytes() and back.q.tobytes() == fm.q.tobytes()


finite_rows = arrays(np.float64, (5, 3), elements=st.floats(-3, 3))


@settings(max_examples=30, deadline=None)
@given(X=finite_rows, kind=st.sampled_from(["fourier-gaussian", "relu", "linear-sketch"]), seed=st.integers(0, 50))
def test_approximate_gram_is_symmetric_psd(X, kind, seed):
    fm = build(FeatureMapSpec(kind, 16, 3, seed=seed))
    G = fm.gram(X)
    np.testing.assert_allclose(G, G.T, atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-9 * max(1.0, np.abs(G).max())
    for i in range(5):
        assert fm.approx_kernel(X[i], X[i]) >= 0


@settings(max_examples=30, deadline=None)
@given(X=finite_rows, kind=st.sampled_from(["fourier-gaussian", "relu", "linear-sketch"]))
def test_exact_gram_is_symmetric_psd(X, kind):
    K = exact_gram(kind, 1.0, X)
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * max(1.0, np.abs(K).max())
