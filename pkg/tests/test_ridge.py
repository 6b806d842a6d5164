import math

import numpy as np
import pytest

from conftest import basis_map, pinned_map
from sgdrf.data import SyntheticSpec, from_arrays, generate_synthetic
from sgdrf.errors import ConfigError
from sgdrf.features import FeatureMapSpec, build
from sgdrf.ridge import _spd_solve, filter_gap, gd_filter, gd_ridge_gap, krr_fit, rf_ridge_fit, ridge_filter


def test_krr_single_point():
    c, lam = 2.5, 0.3
    data = from_arrays([[0.1, 0.2]], [c])
    sol = krr_fit(data, "fourier-gaussian", 1.0, lam)
    assert sol.coefficients[0] == pytest.approx(c / (1 + lam))
    assert sol.predict([[0.1, 0.2]])[0] == pytest.approx(c / (1 + lam))


def test_krr_two_point_hand_solve():
    sigma = 0.8
    data = from_arrays([[0.0, 0.0], [sigma * math.sqrt(2), 0.0]], [1.0, 0.0])
    sol = krr_fit(data, "fourier-gaussian", sigma, 0.5)
    e1, e2 = math.exp(-1), math.exp(-2)
    np.testing.assert_allclose(sol.coefficients, [2 / (4 - e2), -e1 / (4 - e2)], rtol=1e-13)
    assert sol.info["jitter"] == 0.0


def test_krr_large_lambda_shrinks_to_zero():
    data = generate_synthetic(SyntheticSpec(n=30, D=3, noise_sd=0.1, seed=0))
    sol = krr_fit(data, "fourier-gaussian", 1.0, 1e12)
    assert np.abs(sol.predict(data.inputs)).max() < 1e-10
    assert np.all(krr_fit(data, "linear-sketch", 1.0, math.inf).coefficients == 0)


def test_krr_size_cap():
    data = from_arrays(np.zeros((5, 1)), np.zeros(5))
    with pytest.raises(ConfigError, match="cap"):
        krr_fit(data, "linear-sketch", 1.0, 0.1, cap=4)


def test_singular_system_gets_jitter_once():
    info = {}
    sol = _spd_solve(np.ones((2, 2)), np.array([1.0, 1.0]), info)
    assert info["jitter"] == pytest.approx(1e-10)
    assert np.isfinite(sol).all()


def test_rf_ridge_orthonormal_design():
    n, M, lam = 8, 3, 0.25
    Q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(n, M)))
    X = math.sqrt(n) * Q  # Phi = X for the pinned map below, Phi^T Phi / n = I
    fm = pinned_map("linear-sketch", math.sqrt(M) * np.eye(M))
    y = np.arange(n, dtype=float)
    sol = rf_ridge_fit(from_arrays(X, y), fm, lam)
    np.testing.assert_allclose(sol.coefficients, X.T @ y / n / (1 + lam), rtol=1e-12)


def test_rf_ridge_hand_fixture():
    fm = basis_map(2)
    # phi rows (1,0), (0,1), (1,1); lam = 1/3 gives [[1,1/3],[1/3,1]] w = (4/3, 5/3)
    data = from_arrays([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 2.0, 3.0])
    sol = rf_ridge_fit(data, fm, 1 / 3)
    np.testing.assert_allclose(sol.coefficients, [7 / 8, 11 / 8], rtol=1e-13)


def test_rf_ridge_large_lambda():
    data = generate_synthetic(SyntheticSpec(n=20, D=2, seed=2))
    fm = build(FeatureMapSpec("relu", 10, 2))
    assert np.abs(rf_ridge_fit(data, fm, 1e14).coefficients).max() < 1e-12


def test_filters_against_direct_formulas():
    gamma, T = 0.1, 250
    for c in (1e-3, 0.05, 0.5, 1.0):
        assert gd_filter(c, gamma, T) == pytest.approx(1 - (1 - gamma * c) ** T, rel=1e-14)
        assert ridge_filter(c, 1 / (gamma * T)) == pytest.approx(c / (c + 1 / (gamma * T)), rel=1e-14)
    cs = np.logspace(-3, 0, 2001)
    direct = max(abs((1 - (1 - gamma * c) ** T) - c / (c + 1 / (gamma * T))) for c in cs)
    assert filter_gap(cs, gamma, T) == pytest.approx(direct, rel=1e-12)
    assert filter_gap(cs, gamma, 0) == 0.0


def test_filter_gap_does_not_grow():
    cs = np.logspace(-3, 0, 4001)
    gaps = [filter_gap(cs, 0.1, T) for T in (100, 1000, 10_000)]
    assert gaps[2] <= gaps[1] <= gaps[0]


def test_gap_one_feature_closed_form():
    # x = 1 gives phi = 1, x = 0 gives phi = 0, so c = 2/5
    fm = basis_map(1)
    y = np.array([1.0, 3.0, 5.0, -1.0, 2.0])
    data = from_arrays([[1.0], [1.0], [0.0], [0.0], [0.0]], y)
    gamma, T = 0.3, 7
    c, s = 2 / 5, (1.0 + 3.0) / 5
    expected = abs(s / c) * abs(gd_filter(c, gamma, T) - ridge_filter(c, 1 / (gamma * T)))
    test = from_arrays([[1.0]], [0.0])
    assert gd_ridge_gap(data, fm, gamma, T, test=test) == pytest.approx(expected, rel=1e-12)


def test_gap_zero_iterations_and_step_check():
    data = generate_synthetic(SyntheticSpec(n=40, D=3, seed=1))
    fm = build(FeatureMapSpec("fourier-gaussian", 20, 3))
    assert gd_ridge_gap(data, fm, 0.1, 0) == 0.0
    with pytest.raises(ConfigError, match="lambda_max"):
        gd_ridge_gap(data, fm, 100.0, 10)


def test_gap_decreases_on_fixture():
    # few features, so the covariance spectrum sits above 1/(gamma T) for the
    # larger T and both estimators approach least squares
    data = generate_synthetic(SyntheticSpec(n=200, D=2, noise_sd=0.2, seed=3))
    test = generate_synthetic(SyntheticSpec(n=100, D=2, noise_sd=0.2, seed=40))
    fm = build(FeatureMapSpec("fourier-gaussian", 5, 2, seed=0))
    gaps = [gd_ridge_gap(data, fm, 0.1, T, test=test) for T in (100, 1000, 10_000)]
    assert gaps[0] > gaps[1] > gaps[2]
