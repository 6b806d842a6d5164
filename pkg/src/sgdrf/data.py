"""Datasets: synthetic generation with controlled capacity/source exponents,
CSV and LIBSVM ingestion, and seeded train/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from sgdrf import _rng
from sgdrf.errors import ConfigError, DataFormatError

TASKS = ("regression", "binary-classification")


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable ``n x D`` inputs with targets and, for synthetic data, the
    noiseless regression function evaluated at each input.

    ``info`` carries provenance: generator parameters, standardization
    statistics, dropped constant columns.
    """

    inputs: np.ndarray
    targets: np.ndarray
    truth: Optional[np.ndarray] = None
    task: str = "regression"
    source: str = "memory"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        X = _frozen(self.inputs)
        if X.ndim == 1:
            X = _frozen(X[:, None])
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"inputs must be a non-empty 2-d array, got shape {X.shape}")
        y = _frozen(self.targets)
        if y.shape != (X.shape[0],):
            raise ValueError(f"targets length {y.size} does not match n={X.shape[0]}")
        truth = None
        if self.truth is not None:
            truth = _frozen(self.truth)
            if truth.shape != y.shape:
                raise ValueError(f"truth length {truth.size} does not match n={X.shape[0]}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.task == "binary-classification":
            bad = sorted(set(np.unique(y).tolist()) - {-1.0, 1.0})
            if bad:
                raise ValueError(f"binary-classification targets must be in {{-1, +1}}; found {bad}")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "info", dict(self.info))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def D(self) -> int:
        return self.inputs.shape[1]

    @property
    def meta(self) -> dict:
        return {"n": self.n, "D": self.D, "task": self.task, "source": self.source, **self.info}

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            self.inputs[rows],
            self.targets[rows],
            None if self.truth is None else self.truth[rows],
            task=self.task,
            source=self.source,
            info=self.info,
        )


# --------------------------------------------------------------------------
# synthetic data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Linear-kernel model with covariance spectrum ``i**(-1/alpha)`` and a
    regression function of smoothness ``r``.

    ``alpha`` is the capacity exponent, ``r`` the source exponent.
    """

    n: int
    D: int
    alpha: float = 1.0
    r: float = 0.5
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.r < 0.5:
            raise ConfigError(f"r must be >= 1/2, got {self.r}")
        if self.noise_sd < 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.D < 2:
            raise ConfigError(
                f"D must be >= 2 for a non-degenerate spectrum, got {self.D}"
            )


def covariance_eigenvalues(alpha: float, D: int) -> np.ndarray:
    """``mu_i = i**(-1/alpha)`` for ``i = 1..D``."""
    return np.arange(1, D + 1, dtype=np.float64) ** (-1.0 / alpha)


def source_vector(D: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector with random signs and magnitudes proportional to
    ``i**(-1/2)``.

    The profile keeps the source condition tight: ``g`` has no excess
    smoothness, so the approximation error decays no faster than the source
    exponent allows.
    """
    signs = rng.choice(np.array([-1.0, 1.0]), size=D)
    g = signs / np.sqrt(np.arange(1, D + 1, dtype=np.float64))
    return g / np.linalg.norm(g)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw ``spec.n`` samples ``x ~ N(0, diag(mu))`` with
    ``f(x) = <mu**(r - 1/2) * g, x>`` and ``y = f(x) + noise``.

    For the linear kernel the integral operator's spectrum is ``mu`` and
    ``f = L^r g``, so both exponents are exact (down to ``lambda ~ mu_D``).
    """
    if not isinstance(spec, SyntheticSpec):
        raise TypeError("spec must be a SyntheticSpec")
    rng = _rng.generator(spec.seed, _rng.DATA)
    mu = covariance_eigenvalues(spec.alpha, spec.D)
    g = source_vector(spec.D, rng)
    coef = mu ** (spec.r - 0.5) * g
    X = rng.standard_normal((spec.n, spec.D)) * np.sqrt(mu)
    f = X @ coef
    if spec.noise_sd == 0:
        y = f.copy()
    else:
        y = f + spec.noise_sd * rng.standard_normal(spec.n)
    info = {
        "generator": "linear-spectrum",
        "alpha": spec.alpha,
        "r": spec.r,
        "noise_sd": spec.noise_sd,
        "seed": spec.seed,
        "eigenvalues": mu,
        "coefficients": coef,
        "standardized": False,
    }
    return Dataset(X, y, f, task="regression", source="synthetic", info=info)


# --------------------------------------------------------------------------
# file loaders
# --------------------------------------------------------------------------


def _map_binary(labels: np.ndarray, where: str) -> np.ndarray:
    values = set(np.unique(labels).tolist())
    if values <= {0.0, 1.0}:
        return np.where(labels > 0, 1.0, -1.0)
    if values <= {-1.0, 1.0}:
        return labels.astype(np.float64)
    bad = sorted(values - {0.0, 1.0, -1.0})
    raise DataFormatError(f"{where}: non-binary labels in classification mode: {bad}")


def load_csv(
    path,
    target_column: int,
    has_header: bool = False,
    task: str = "regression",
) -> Dataset:
    """Read a comma-separated file of reals; one column is the target.

    Errors cite 1-based line numbers. Classification labels ``{0, 1}`` are
    mapped to ``{-1, +1}``.
    """
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and has_header:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise DataFormatError(
                    f"line {lineno}: expected {width} fields, found {len(fields)}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    table = np.array(rows, dtype=np.float64)
    col = target_column % width if -width <= target_column < width else None
    if col is None:
        raise ConfigError(f"target_column {target_column} out of range for {width} columns")
    if width < 2:
        raise DataFormatError(f"{path}: need at least one input column besides the target")
    y = table[:, col]
    X = np.delete(table, col, axis=1)
    if task == "binary-classification":
        y = _map_binary(y, str(path))
    return Dataset(X, y, None, task=task, source=f"csv:{path.name}", info={"standardized": False})


def load_libsvm(path, task: str = "regression", n_features: Optional[int] = None) -> Dataset:
    """Read ``label index:value ...`` lines (1-based indices) into a dense
    matrix."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    path = Path(path)
    labels: list[float] = []
    entries: list[tuple[int, int, float]] = []
    max_index = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
                row = len(labels) - 1
                for token in parts[1:]:
                    idx, val = token.split(":", 1)
                    j = int(idx)
                    if j < 1:
                        raise ValueError(f"feature index {j} < 1")
                    entries.append((row, j - 1, float(val)))
                    max_index = max(max_index, j)
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
    if not labels:
        raise DataFormatError(f"{path}: no data rows")
    D = max_index if n_features is None else n_features
    if D < max_index:
        raise DataFormatError(f"{path}: feature index {max_index} exceeds n_features={D}")
    X = np.zeros((len(labels), max(D, 1)))
    for i, j, v in entries:
        X[i, j] = v
    y = np.array(labels)
    if task == "binary-classification":
        y = _map_binary(y, str(path))
    return Dataset(X, y, None, task=task, source=f"libsvm:{path.name}", info={"standardized": False})


# --------------------------------------------------------------------------
# preprocessing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine map fitted on one dataset, applied to others."""

    keep: np.ndarray
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        sd = X.std(axis=0)
        keep = np.flatnonzero(sd > 0)
        return cls(keep, X[:, keep].mean(axis=0), sd[keep])

    def apply(self, data: Dataset) -> Dataset:
        X = (data.inputs[:, self.keep] - self.mean) / self.scale
        info = dict(data.info)
        info["standardized"] = True
        info["kept_columns"] = self.keep.tolist()
        info["dropped_columns"] = sorted(set(range(data.D)) - set(self.keep.tolist()))
        return Dataset(X, data.targets, data.truth, task=data.task, source=data.source, info=info)


def standardize(data: Dataset) -> Dataset:
    """Zero-mean, unit-variance columns; constant columns are dropped."""
    st = Standardizer.fit(data.inputs)
    if st.keep.size == 0:
        raise DataFormatError("every input column is constant")
    return st.apply(data)


def split(
    data: Dataset,
    test_fraction: float,
    seed: int = 0,
    standardize: bool = True,
) -> tuple[Dataset, Dataset]:
    """Seeded shuffle partition into ``(train, test)``.

    The test part has ``floor(n * test_fraction)`` rows. With
    ``standardize=True`` column statistics come from the train part only.
    """
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = math.floor(data.n * test_fraction + 1e-9)
    n_train = data.n - n_test
    if n_test < 1 or n_train < 1:
        raise ConfigError(
            f"degenerate split: n={data.n}, test_fraction={test_fraction} gives "
            f"{n_train} train / {n_test} test rows"
        )
    perm = _rng.generator(seed, _rng.SPLIT).permutation(data.n)
    train, test = data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))
    if standardize:
        st = Standardizer.fit(train.inputs)
        if st.keep.size == 0:
            raise DataFormatError("every input column is constant on the training part")
        train, test = st.apply(train), st.apply(test)
    return train, test


def take(data: Dataset, stop: int, start: int = 0) -> Dataset:
    """Contiguous row range; rows of a synthetic draw are i.i.d. so this is a
    valid split."""
    return data.subset(np.arange(start, stop))


def from_arrays(inputs: Sequence, targets: Sequence, truth=None, task: str = "regression") -> Dataset:
    return Dataset(np.asarray(inputs, dtype=float), np.asarray(targets, dtype=float), truth, task=task)
