"""Closed-form baselines: exact kernel ridge regression, ridge regression in
random-feature space, and the gradient-descent / ridge comparison.

Regularisation follows the 1/n-normalised covariance convention: RF-ridge
solves ``(Phi^T Phi / n + lam I) w = Phi^T y / n`` and KRR solves
``(K + n lam I) alpha = y``, so one ``lam`` means the same thing in both and
matches ``lam = 1 / (gamma T)`` for ``T`` steps of gradient descent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from sgdrf.data import Dataset
from sgdrf.errors import ConfigError, NonFiniteError
from sgdrf.features import FeatureMap, exact_gram
from sgdrf.sgd import batch_gd

KRR_CAP = 8192
JITTER = 1e-10


@dataclass(eq=False)
class RidgeSolution:
    kind: str  # "krr" | "rf-ridge"
    lam: float
    coefficients: np.ndarray
    train_inputs: Optional[np.ndarray] = None
    kernel: Optional[tuple] = None  # (kind, sigma) for krr
    fm: Optional[FeatureMap] = None
    info: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "krr":
            kind, sigma = self.kernel
            return exact_gram(kind, sigma, X, self.train_inputs) @ self.coefficients
        return self.fm.transform(X) @ self.coefficients


def _spd_solve(A: np.ndarray, rhs: np.ndarray, info: dict) -> np.ndarray:
    """Cholesky solve; on failure add ``1e-10 * trace / n`` to the diagonal
    once and record it."""
    if not (np.isfinite(A).all() and np.isfinite(rhs).all()):
        raise NonFiniteError("non-finite entries in the linear system")
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError:
        jitter = JITTER * np.trace(A) / A.shape[0]
        info["jitter"] = jitter
        A = A + jitter * np.eye(A.shape[0])
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    sol = linalg.cho_solve(factor, rhs, check_finite=False)
    if not np.isfinite(sol).all():
        raise NonFiniteError("solve produced non-finite coefficients")
    info.setdefault("jitter", 0.0)
    return sol


def krr_fit(
    data: Dataset,
    kernel_kind: str,
    sigma: float,
    lam: float,
    *,
    cap: int = KRR_CAP,
    scaled: bool = True,
) -> RidgeSolution:
    """Kernel ridge regression with the exact limit kernel.

    ``f(x) = sum_i alpha_i k(x_i, x)`` with ``(K + n lam I) alpha = y``.
    """
    if not lam > 0:
        raise ConfigError(f"lambda must be > 0, got {lam}")
    if data.n > cap:
        raise ConfigError(
            f"KRR needs an O(n^3) solve; n={data.n} exceeds the cap of {cap}. Subsample the data."
        )
    K = exact_gram(kernel_kind, sigma, data.inputs, scaled=scaled)
    n = data.n
    info: dict = {}
    if math.isinf(lam):
        alpha = np.zeros(n)
    else:
        alpha = _spd_solve(K + n * lam * np.eye(n), data.targets, info)
    return RidgeSolution("krr", lam, alpha, np.array(data.inputs), (kernel_kind, sigma), info=info)


def rf_ridge_fit(
    data: Dataset,
    fm: FeatureMap,
    lam: float,
    *,
    features: Optional[np.ndarray] = None,
) -> RidgeSolution:
    """Ridge regression on the random features via the ``M x M`` normal
    equations."""
    if not lam > 0:
        raise ConfigError(f"lambda must be > 0, got {lam}")
    if data.D != fm.D:
        raise ValueError(f"dimension mismatch: data has D={data.D}, feature map expects D={fm.D}")
    info: dict = {}
    if math.isinf(lam):
        return RidgeSolution("rf-ridge", lam, np.zeros(fm.M), fm=fm, info=info)
    Phi = fm.transform(data.inputs) if features is None else features
    n = data.n
    A = Phi.T @ Phi / n + lam * np.eye(fm.M)
    w = _spd_solve(A, Phi.T @ data.targets / n, info)
    return RidgeSolution("rf-ridge", lam, w, fm=fm, info=info)


# --------------------------------------------------------------------------
# spectral filters
# --------------------------------------------------------------------------


def gd_filter(c, gamma: float, T: int):
    """``1 - (1 - gamma c)**T``: the factor ``T`` steps of constant-step
    gradient descent from zero apply to the target's component along an
    eigen-direction of the covariance with eigenvalue ``c``."""
    c = np.asarray(c, dtype=np.float64)
    return 1.0 - (1.0 - gamma * c) ** T


def ridge_filter(c, lam: float):
    """``c / (c + lam)``: the matching factor for ridge regression."""
    c = np.asarray(c, dtype=np.float64)
    if math.isinf(lam):
        return np.zeros_like(c)
    return c / (c + lam)


def filter_gap(c, gamma: float, T: int) -> float:
    """``sup_c |gd_filter(c) - ridge_filter(c, 1/(gamma T))|`` over the
    supplied eigenvalues."""
    lam = math.inf if T == 0 else 1.0 / (gamma * T)
    return float(np.max(np.abs(gd_filter(c, gamma, T) - ridge_filter(c, lam))))


def gd_ridge_gap(
    data: Dataset,
    fm: FeatureMap,
    gamma: float,
    T: int,
    test: Optional[Dataset] = None,
) -> float:
    """Root-mean-square difference, on ``test`` (default: the training
    inputs), between ``T`` steps of full-batch gradient descent and RF-ridge
    at ``lam = 1 / (gamma T)``."""
    Phi = fm.transform(data.inputs)
    lam_max = float(np.linalg.eigvalsh(Phi.T @ Phi / data.n)[-1])
    if gamma * lam_max >= 1:
        raise ConfigError(
            f"step too large: gamma * lambda_max = {gamma:g} * {lam_max:.6g} >= 1 "
            f"(need gamma < {1 / lam_max:.6g})"
        )
    if T == 0:
        return 0.0
    gd = batch_gd(data, fm, gamma, 0.0, T, features=Phi)
    rr = rf_ridge_fit(data, fm, 1.0 / (gamma * T), features=Phi)
    Phi_test = Phi if test is None else fm.transform(test.inputs)
    diff = Phi_test @ (gd.w - rr.coefficients)
    return float(np.sqrt(np.mean(diff**2)))
