"""Spectral diagnostics: eigenvalues of ``K / n`` or of the feature
covariance, effective dimension ``N(lam) = sum mu / (mu + lam)``, and a
log-log fit of the capacity exponent."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sgdrf.data import Dataset
from sgdrf.errors import ConfigError, NonFiniteError
from sgdrf.features import FeatureMap, exact_gram

EIG_CAP = 4096
SOURCES = ("exact-synthetic", "empirical-kernel", "empirical-features")


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    eigenvalues: np.ndarray  # descending, non-negative
    source: str
    n_used: int
    trace: float

    @classmethod
    def from_eigenvalues(cls, values, source: str = "exact-synthetic", n_used: int = 0, trace=None):
        """Sort, validate and clamp. Negatives below ``-1e-10 * max`` are an
        error; smaller ones are rounding noise and become zero."""
        if source not in SOURCES:
            raise ValueError(f"unknown spectrum source {source!r}")
        ev = np.sort(np.asarray(values, dtype=np.float64).ravel())[::-1]
        if ev.size == 0:
            raise ValueError("empty spectrum")
        if not np.isfinite(ev).all():
            raise NonFiniteError("non-finite eigenvalues")
        top = max(ev[0], 0.0)
        if ev[-1] < -1e-10 * top:
            raise ValueError(f"matrix is not positive semi-definite: eigenvalue {ev[-1]:.3g}")
        total = float(ev.sum()) if trace is None else float(trace)
        if abs(ev.sum() - total) > 1e-8 * max(abs(total), top):
            raise ValueError(f"eigenvalues sum to {ev.sum():.12g}, trace is {total:.12g}")
        ev = np.clip(ev, 0.0, None)
        ev.setflags(write=False)
        return cls(ev, source, n_used or ev.size, total)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 1e-12 * self.eigenvalues[0]))

    @property
    def positive(self) -> np.ndarray:
        return self.eigenvalues[: self.rank]


def _eigs(A: np.ndarray, source: str, n_used: int) -> SpectralSummary:
    if not np.isfinite(A).all():
        raise NonFiniteError("non-finite entries in the kernel matrix")
    A = 0.5 * (A + A.T)
    return SpectralSummary.from_eigenvalues(np.linalg.eigvalsh(A), source, n_used, np.trace(A))


def spectrum(source, kernel=None, sigma: float = 1.0, *, cap: int = EIG_CAP, scaled: bool = True) -> SpectralSummary:
    """Eigenvalues of an empirical proxy of the integral operator.

    ``source`` is either a :class:`Dataset` (with ``kernel`` a kind name for
    the exact kernel, or a :class:`FeatureMap` for its approximate kernel),
    giving the spectrum of ``K / n``; or an ``n x M`` feature matrix, giving
    the spectrum of ``Phi^T Phi / n``.
    """
    if isinstance(source, Dataset):
        if source.n > cap:
            raise ConfigError(f"n={source.n} exceeds the eigendecomposition cap of {cap}; subsample")
        if isinstance(kernel, FeatureMap):
            K = kernel.gram(source.inputs)
        elif kernel is None:
            raise ConfigError("a kernel kind or feature map is required for a dataset spectrum")
        else:
            K = exact_gram(kernel, sigma, source.inputs, scaled=scaled)
        return _eigs(K / source.n, "empirical-kernel", source.n)
    Phi = np.asarray(source, dtype=np.float64)
    if Phi.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    n, M = Phi.shape
    if M > cap:
        raise ConfigError(f"M={M} exceeds the eigendecomposition cap of {cap}")
    return _eigs(Phi.T @ Phi / n, "empirical-features", n)


def effective_dimension(summary: SpectralSummary, lam):
    """``N(lam) = sum_i mu_i / (mu_i + lam)``; vectorised over ``lam``."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr <= 0):
        raise ValueError(f"lambda must be > 0, got {lam}")
    mu = summary.eigenvalues
    out = (mu[:, None] / (mu[:, None] + lam_arr.ravel()[None, :])).sum(axis=0)
    return float(out[0]) if lam_arr.ndim == 0 else out.reshape(lam_arr.shape)


@dataclass(frozen=True)
class CapacityFit:
    alpha_hat: float
    Q_hat: float
    r2: float
    slope: float


def default_grid(summary: SpectralSummary, decades: float = 2.0, points: int = 12) -> np.ndarray:
    """Log-spaced grid covering ``decades`` below the top eigenvalue."""
    top = summary.eigenvalues[0]
    return np.logspace(math.log10(top) - decades, math.log10(top), points)


def fit_capacity(summary: SpectralSummary, lambda_grid) -> CapacityFit:
    """Least-squares line through ``(log lam, log N(lam))``.

    ``alpha_hat`` is minus the slope clamped to ``[0, 1]``; ``Q_hat`` comes
    from the intercept via ``N <= Q^2 lam^-alpha`` and is a diagnostic only.
    """
    grid = np.asarray(lambda_grid, dtype=np.float64).ravel()
    if grid.size < 4:
        raise ConfigError(f"lambda grid needs >= 4 points, got {grid.size}")
    if np.any(grid <= 0):
        raise ConfigError("lambda grid must be positive")
    if math.log10(grid.max() / grid.min()) < 2 - 1e-9:
        raise ConfigError("lambda grid must span at least two decades")
    pos = summary.positive
    lo, hi = pos[-1], pos[0]
    tol = 1e-9 * hi
    if grid.min() < lo - tol or grid.max() > hi + tol:
        raise ConfigError(f"lambda grid must lie within the spectrum range [{lo:.3g}, {hi:.3g}]")
    if summary.source == "empirical-kernel" and summary.eigenvalues.size >= summary.n_used:
        floor = 10 * summary.eigenvalues[summary.n_used - 1]
        if grid.min() < floor - tol:
            raise ConfigError(
                f"lambda grid starts at {grid.min():.3g}, below 10x the n-th eigenvalue ({floor:.3g})"
            )
    x = np.log(grid)
    y = np.log(effective_dimension(summary, grid))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return CapacityFit(float(np.clip(-slope, 0.0, 1.0)), float(math.exp(intercept / 2)), r2, float(slope))
