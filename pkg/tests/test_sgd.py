import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import basis_map, pinned_map
from sgdrf.data import SyntheticSpec, from_arrays, generate_synthetic
from sgdrf.errors import ConfigError, DivergenceError, NonFiniteError
from sgdrf.features import FeatureMapSpec, build
from sgdrf.sgd import Model, SgdConfig, batch_gd, passes, predict, sampling_trace, step_size, train


def hand_sgd(phi, y, draws, gamma, theta=0.0):
    """Plain-loop oracle for the mini-batch update."""
    w = np.zeros(phi.shape[1])
    for t, idx in enumerate(draws, start=1):
        g = np.zeros_like(w)
        for i in idx:
            g += (w @ phi[i] - y[i]) * phi[i]
        w = w - gamma * t ** (-theta) / len(idx) * g
    return w


def small_problem(n=20, D=3, M=5, seed=0):
    data = generate_synthetic(SyntheticSpec(n=n, D=D, noise_sd=0.1, seed=seed))
    fm = build(FeatureMapSpec("fourier-gaussian", M, D, seed=seed))
    return data, fm


def test_zero_iterations_give_zero_model():
    data, fm = small_problem()
    model = train(data, fm, SgdConfig(T=0))
    np.testing.assert_array_equal(model.w, 0)
    np.testing.assert_array_equal(model.predict(data.inputs), 0)


def test_single_point_single_step():
    fm = build(FeatureMapSpec("fourier-gaussian", 8, 2, seed=3))
    x, yv, gamma = np.array([0.3, -0.4]), 1.7, 0.2
    data = from_arrays([x], [yv])
    model = train(data, fm, SgdConfig(b=1, gamma=gamma, T=1))
    np.testing.assert_allclose(model.w, gamma * yv * fm.map(x), rtol=1e-14)
    assert predict(model, x) == pytest.approx(gamma * yv * fm.map(x) @ fm.map(x), rel=1e-14)


def test_two_step_hand_example():
    fm = basis_map(2)
    data = from_arrays(np.eye(2), [1.0, 2.0])
    draws = np.array([[0, 1], [1, 1]])
    model = train(data, fm, SgdConfig(b=2, gamma=0.5, T=2), index_blocks=draws)
    # by hand: w2 = (0.25, 0.5); second batch hits point 2 twice with
    # residual -1.5, so w3 = (0.25, 0.5 + 0.25 * 3)
    np.testing.assert_allclose(model.w, [0.25, 1.25], rtol=0, atol=1e-15)
    np.testing.assert_allclose(model.w, hand_sgd(np.eye(2), [1.0, 2.0], draws, 0.5))


def test_basis_weights_predict_coordinates():
    data, fm = small_problem()
    for j in range(fm.M):
        model = Model(np.eye(fm.M)[j], fm)
        np.testing.assert_allclose(model.predict(data.inputs), fm.transform(data.inputs)[:, j])


def test_matches_loop_oracle_with_decay():
    data, fm = small_problem(n=15, M=4)
    cfg = SgdConfig(b=3, gamma=0.7, theta=0.3, T=40, sampling_seed=9)
    model = train(data, fm, cfg)
    draws = sampling_trace(cfg, data.n)
    oracle = hand_sgd(fm.transform(data.inputs), data.targets, draws, 0.7, 0.3)
    np.testing.assert_allclose(model.w, oracle, rtol=1e-12, atol=1e-14)


def test_stream_and_precompute_are_bit_identical():
    data, fm = small_problem(n=300, D=4, M=70, seed=2)
    base = dict(b=7, gamma=0.5, T=400, sampling_seed=4, checkpoint_every=100)
    a = train(data, fm, SgdConfig(memory_mode="precompute", **base), holdout=data)
    b = train(data, fm, SgdConfig(memory_mode="stream", **base), holdout=data)
    assert a.w.tobytes() == b.w.tobytes()
    assert [c.row() for c in a.history] == [c.row() for c in b.history]


def test_replaying_the_trace_reproduces_training():
    data, fm = small_problem()
    cfg = SgdConfig(b=4, gamma=0.3, T=25, sampling_seed=1)
    trace = sampling_trace(cfg, data.n)
    assert trace.shape == (25, 4)
    assert trace.min() >= 0 and trace.max() < data.n
    np.testing.assert_array_equal(trace, sampling_trace(cfg, data.n))
    a = train(data, fm, cfg)
    b = train(data, fm, cfg, index_blocks=trace)
    assert a.w.tobytes() == b.w.tobytes()


def test_trace_prefix_is_stable_across_chunks():
    cfg = SgdConfig(b=3, gamma=1, T=30000)
    full = sampling_trace(cfg, 50)
    np.testing.assert_array_equal(sampling_trace(cfg, 50, upto_t=25000), full[:25000])


def test_sgd_mean_equals_batch_gd():
    data, fm = small_problem(n=20, M=5, seed=6)
    Phi = fm.transform(data.inputs)
    T, reps = 10, 400
    ws = np.array([train(data, fm, SgdConfig(b=1, gamma=0.5, T=T, sampling_seed=s), features=Phi).w for s in range(reps)])
    v = batch_gd(data, fm, 0.5, 0.0, T, features=Phi).w
    se = ws.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.linalg.norm(ws.mean(axis=0) - v) <= 5 * np.linalg.norm(se)


def test_batch_gd_diagonal_closed_form():
    # features are basis vectors; coordinate k sees c_k = count_k / n
    labels = np.array([0, 0, 1, 2, 2, 2])
    y = np.array([1.0, 3.0, -2.0, 0.5, 1.5, 1.0])
    n, M, gamma, T = len(y), 3, 0.4, 17
    fm = basis_map(M)
    data = from_arrays(np.eye(M)[labels], y)
    v = batch_gd(data, fm, gamma, 0.0, T).w
    c = np.bincount(labels) / n
    ybar = np.array([y[labels == k].mean() for k in range(M)])
    np.testing.assert_allclose(v, ybar * (1 - (1 - gamma * c) ** T), rtol=1e-13)


def test_batch_gd_single_point_matches_sgd():
    fm = build(FeatureMapSpec("relu", 6, 2, seed=1))
    data = from_arrays([[0.5, 1.0]], [2.0])
    a = batch_gd(data, fm, 0.1, 0.0, 12)
    b = train(data, fm, SgdConfig(b=1, gamma=0.1, T=12))
    np.testing.assert_allclose(a.w, b.w, rtol=1e-14)


def test_checkpoints_and_passes():
    data, fm = small_problem(n=10)
    model = train(data, fm, SgdConfig(b=2, gamma=0.1, T=12, checkpoint_every=5), holdout=data, evaluate_on_train=True)
    assert [c.t for c in model.history] == [0, 5, 10, 12]
    assert model.history[-1].passes == pytest.approx(12 / 5)
    assert {"holdout_mse", "holdout_excess_risk", "train_mse"} <= set(model.history[-1].metrics)
    assert passes(10, 10, 3) == 2.5


def test_step_size_decay():
    assert step_size(2.0, 0.5, 4) == 1.0
    with pytest.raises(ValueError):
        step_size(1.0, 0.0, 0)


def test_divergence_is_reported():
    data, fm = small_problem()
    with pytest.raises(DivergenceError, match="iteration"):
        train(data, fm, SgdConfig(b=1, gamma=50.0, T=5000))


def test_non_finite_gradient_is_reported():
    fm = pinned_map("linear-sketch", [[np.inf]])
    data = from_arrays([[0.0]], [1.0])
    with pytest.raises(NonFiniteError, match="iteration 1"):
        train(data, fm, SgdConfig(T=3))


@pytest.mark.parametrize(
    "kwargs", [dict(b=0), dict(gamma=0), dict(theta=1.0), dict(T=-1), dict(memory_mode="disk")]
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SgdConfig(**kwargs)


def test_dimension_mismatch():
    data, _ = small_problem(D=3)
    fm = build(FeatureMapSpec("relu", 4, 5))
    with pytest.raises(ValueError, match="dimension"):
        train(data, fm, SgdConfig(T=1))


def test_model_round_trip(tmp_path):
    data, fm = small_problem()
    model = train(data, fm, SgdConfig(b=2, gamma=0.3, T=20))
    model.save(tmp_path / "m.npz")
    back = Model.load(tmp_path / "m.npz")
    assert back.w.tobytes() == model.w.tobytes()
    np.testing.assert_array_equal(back.predict(data.inputs), model.predict(data.inputs))


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(1, 12),
    b=st.integers(1, 5),
    T=st.integers(0, 15),
    gamma=st.floats(0.01, 0.5),
    seed=st.integers(0, 1000),
)
def test_train_agrees_with_loop_oracle(n, b, T, gamma, seed):
    rng = np.random.default_rng(seed)
    data = from_arrays(rng.normal(size=(n, 2)), rng.normal(size=n))
    fm = build(FeatureMapSpec("fourier-gaussian", 3, 2, seed=seed))
    cfg = SgdConfig(b=b, gamma=gamma, T=T, sampling_seed=seed)
    model = train(data, fm, cfg)
    oracle = hand_sgd(fm.transform(data.inputs), data.targets, sampling_trace(cfg, n), gamma)
    np.testing.assert_allclose(model.w, oracle, rtol=1e-10, atol=1e-12)
