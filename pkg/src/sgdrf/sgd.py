"""Mini-batch SGD with replacement sampling over random features.

Starting from ``w_1 = 0``, iteration ``t`` draws ``b`` indices i.i.d. uniform
on the training set and takes

    w_{t+1} = w_t - gamma_t / b * sum_i (<w_t, phi(x_{j_i})> - y_{j_i}) phi(x_{j_i})

with ``gamma_t = gamma * t**(-theta)``. Any ``kappa**-2`` normalisation is
expected to be folded into ``gamma`` already.

Two memory modes give bit-identical iterates: ``precompute`` materialises the
``n x M`` feature matrix once, ``stream`` recomputes the ``b`` feature rows
of each mini-batch (``O(Mb)`` memory).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from sgdrf import _rng
from sgdrf.data import Dataset
from sgdrf.errors import ConfigError, DivergenceError, NonFiniteError
from sgdrf.features import FeatureMap
from sgdrf.metrics import metrics_from_predictions

MEMORY_MODES = ("precompute", "stream")
DIVERGENCE_NORM = 1e12
# Index draws are made this many at a time; the chunking is part of the
# sampling contract shared by train() and sampling_trace().
DRAWS_PER_CHUNK = 1 << 16


@dataclass(frozen=True)
class SgdConfig:
    b: int = 1
    gamma: float = 1.0
    theta: float = 0.0
    T: int = 0
    memory_mode: str = "precompute"
    sampling_seed: int = 0
    checkpoint_every: int = 0  # 0: final iterate only

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 1:
            raise ConfigError(f"batch size b must be a positive integer, got {self.b}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not 0 <= self.theta < 1:
            raise ConfigError(f"theta must lie in [0, 1), got {self.theta}")
        if int(self.T) != self.T or self.T < 0:
            raise ConfigError(f"T must be a non-negative integer, got {self.T}")
        if self.memory_mode not in MEMORY_MODES:
            raise ConfigError(f"memory_mode must be one of {MEMORY_MODES}, got {self.memory_mode!r}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if self.sampling_seed < 0:
            raise ConfigError("sampling_seed must be non-negative")

    def step(self, t: int) -> float:
        """Step size at iteration ``t >= 1``."""
        return step_size(self.gamma, self.theta, t)


def step_size(gamma: float, theta: float, t: int) -> float:
    if t < 1:
        raise ValueError(f"iterations are numbered from 1, got {t}")
    return gamma if theta == 0 else gamma * t ** (-theta)


def passes(T: int, n: int, b: int) -> float:
    """Passes over the data: one per ``ceil(n / b)`` iterations."""
    return T / math.ceil(n / b)


@dataclass(frozen=True)
class Checkpoint:
    t: int
    passes: float
    gamma_t: float
    metrics: dict
    elapsed_ms: float

    def row(self) -> dict:
        return {"t": self.t, "pass": self.passes, "gamma_t": self.gamma_t, **self.metrics}


@dataclass(eq=False)
class Model:
    """Linear predictor ``f(x) = <w, phi_M(x)>``."""

    w: np.ndarray
    fm: FeatureMap
    history: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return self.fm.transform(X) @ self.w

    @classmethod
    def zero(cls, fm: FeatureMap) -> "Model":
        return cls(np.zeros(fm.M), fm)

    def save(self, path) -> None:
        """Store weights and feature parameters in one ``.npz`` file."""
        s = self.fm.spec
        np.savez(
            path,
            w=self.w,
            W=self.fm.W,
            q=np.empty(0) if self.fm.q is None else self.fm.q,
            spec=np.array([s.kind, s.M, s.D, repr(s.sigma), s.seed, int(s.scaled)], dtype=object),
        )

    @classmethod
    def load(cls, path) -> "Model":
        from sgdrf.features import FeatureMapSpec

        with np.load(path, allow_pickle=True) as z:
            kind, M, D, sigma, seed, scaled = z["spec"].tolist()
            spec = FeatureMapSpec(kind, int(M), int(D), float(sigma), int(seed), bool(int(scaled)))
            q = z["q"] if kind == "fourier-gaussian" else None
            return cls(np.array(z["w"]), FeatureMap(spec, z["W"], q))


def predict(model: Model, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes one input vector; use Model.predict for matrices")
    return float(np.dot(model.fm.map(x), model.w))


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def _index_blocks(seed: int, n: int, b: int, T: int) -> Iterator[np.ndarray]:
    """Yield one length-``b`` index array per iteration."""
    rng = _rng.generator(seed, _rng.SAMPLING)
    per_chunk = max(1, DRAWS_PER_CHUNK // b)
    done = 0
    while done < T:
        k = min(per_chunk, T - done)
        chunk = rng.integers(0, n, size=(k, b))
        yield from chunk
        done += k


def sampling_trace(cfg: SgdConfig, n: int, upto_t: Optional[int] = None) -> np.ndarray:
    """The ``(upto_t, b)`` array of 0-based indices :func:`train` consumes."""
    upto_t = cfg.T if upto_t is None else upto_t
    if not 0 <= upto_t <= cfg.T:
        raise ValueError(f"upto_t must lie in [0, T={cfg.T}], got {upto_t}")
    blocks = list(_index_blocks(cfg.sampling_seed, n, cfg.b, upto_t))
    return np.array(blocks, dtype=np.int64).reshape(upto_t, cfg.b)


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


def _check_inputs(data: Dataset, fm: FeatureMap) -> None:
    if data.D != fm.D:
        raise ValueError(f"dimension mismatch: data has D={data.D}, feature map expects D={fm.D}")


class _Recorder:
    def __init__(self, fm: FeatureMap, cfg: SgdConfig, data: Dataset, holdout, on_train: bool, holdout_features):
        self.fm, self.cfg = fm, cfg
        self.every, self.T, self.n, self.b = cfg.checkpoint_every, cfg.T, data.n, cfg.b
        self.eval_sets = []
        if holdout is not None:
            if holdout.D != fm.D:
                raise ValueError(f"holdout dimension {holdout.D} != D={fm.D}")
            Phi = fm.transform(holdout.inputs) if holdout_features is None else holdout_features
            self.eval_sets.append(("holdout", holdout, Phi))
        if on_train:
            self.eval_sets.append(("train", data, None))
        self.history: list[Checkpoint] = []
        self.t0 = time.perf_counter()

    def due(self, t: int) -> bool:
        return t == self.T or (self.every > 0 and t % self.every == 0)

    def record(self, t: int, w: np.ndarray, Phi_train: Optional[np.ndarray]) -> None:
        metrics = {}
        for name, ds, Phi in self.eval_sets:
            if Phi is None:
                Phi = Phi_train if Phi_train is not None else self.fm.transform(ds.inputs)
            for key, val in metrics_from_predictions(Phi @ w, ds).items():
                metrics[f"{name}_{key}"] = val
        gamma_t = self.cfg.step(t) if t >= 1 else self.cfg.gamma
        self.history.append(
            Checkpoint(t, passes(t, self.n, self.b), gamma_t, metrics, 1e3 * (time.perf_counter() - self.t0))
        )


def train(
    data: Dataset,
    fm: FeatureMap,
    cfg: SgdConfig,
    *,
    holdout: Optional[Dataset] = None,
    evaluate_on_train: bool = False,
    index_blocks=None,
    features: Optional[np.ndarray] = None,
    holdout_features: Optional[np.ndarray] = None,
) -> Model:
    """Run exactly ``cfg.T`` mini-batch SGD iterations from ``w = 0``.

    ``index_blocks`` replaces the seeded sampler with a fixed ``(T, b)``
    array of 0-based indices (golden traces, replay). Checkpoints are
    recorded every ``cfg.checkpoint_every`` iterations and at ``T``.
    ``features``/``holdout_features`` pass already-computed feature
    matrices (precompute mode only) so sweeps can reuse them.

    Raises
    ------
    NonFiniteError
        A gradient contains NaN/inf; the message names the iteration.
    DivergenceError
        ``|w|`` exceeded ``1e12``; the step size is too large.
    """
    _check_inputs(data, fm)
    n, b, T = data.n, cfg.b, cfg.T
    if T * b > np.iinfo(np.int64).max:
        raise ConfigError(f"T*b = {T * b} sampling draws overflow the index type")
    if index_blocks is not None:
        index_blocks = np.asarray(index_blocks, dtype=np.int64)
        if index_blocks.shape != (T, b):
            raise ValueError(f"index_blocks must have shape {(T, b)}, got {index_blocks.shape}")
        if index_blocks.size and (index_blocks.min() < 0 or index_blocks.max() >= n):
            raise ValueError(f"index_blocks entries must lie in [0, {n})")
        blocks = iter(index_blocks)
    else:
        blocks = _index_blocks(cfg.sampling_seed, n, b, T)

    X, y = data.inputs, data.targets
    if cfg.memory_mode == "precompute":
        Phi = fm.transform(X) if features is None else features
        if Phi.shape != (n, fm.M):
            raise ValueError(f"features must have shape {(n, fm.M)}, got {Phi.shape}")
    else:
        if features is not None:
            raise ConfigError("stream mode recomputes features; do not pass a feature matrix")
        Phi = None
    rec = _Recorder(fm, cfg, data, holdout, evaluate_on_train, holdout_features)
    w = np.zeros(fm.M)
    if cfg.checkpoint_every > 0:
        rec.record(0, w, Phi)

    for t, idx in enumerate(blocks, start=1):
        P = Phi[idx] if Phi is not None else fm.transform(X[idx])
        resid = np.einsum("bm,m->b", P, w) - y[idx]
        grad = np.einsum("bm,b->m", P, resid)
        w = w - (cfg.step(t) / b) * grad
        # a NaN/inf gradient always shows up in |w|, so one test covers both
        if not np.dot(w, w) <= DIVERGENCE_NORM**2:
            if not np.isfinite(grad).all():
                raise NonFiniteError(f"non-finite gradient at iteration {t}")
            raise DivergenceError(
                f"|w| exceeded {DIVERGENCE_NORM:g} at iteration {t}; use a smaller step size "
                f"(gamma={cfg.gamma:g})"
            )
        if rec.due(t):
            rec.record(t, w, Phi)
    if T == 0 and cfg.checkpoint_every == 0:
        rec.record(0, w, Phi)

    info = {"n": n, "b": b, "T": T, "passes": passes(T, n, b), "memory_mode": cfg.memory_mode}
    return Model(w, fm, rec.history, info)


def batch_gd(
    data: Dataset,
    fm: FeatureMap,
    gamma: float,
    theta: float = 0.0,
    T: int = 0,
    *,
    features: Optional[np.ndarray] = None,
) -> Model:
    """Full-gradient descent ``v_{t+1} = v_t - gamma_t (C v_t - S* y)``.

    Deterministic counterpart of :func:`train`: its iterate is the
    expectation of the SGD iterate over the index draws.
    """
    SgdConfig(b=1, gamma=gamma, theta=theta, T=T)  # validation only
    _check_inputs(data, fm)
    Phi = fm.transform(data.inputs) if features is None else features
    n = data.n
    C = Phi.T @ Phi / n
    s = Phi.T @ data.targets / n
    v = np.zeros(fm.M)
    for t in range(1, T + 1):
        grad = C @ v - s
        if not np.isfinite(grad).all():
            raise NonFiniteError(f"non-finite gradient at iteration {t}")
        v = v - step_size(gamma, theta, t) * grad
        if np.dot(v, v) > DIVERGENCE_NORM**2:
            raise DivergenceError(f"|v| exceeded {DIVERGENCE_NORM:g} at iteration {t}; reduce gamma")
    return Model(v, fm, [], {"n": n, "T": T, "full_batch": True})
