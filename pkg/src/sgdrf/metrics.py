"""Test-set metrics for any fitted predictor exposing ``predict(X)``."""

from __future__ import annotations

import numpy as np

from sgdrf.data import Dataset


def classification_error(predictions, labels) -> float:
    """Fraction of ``sign(f(x)) != y`` with ``sign(0)`` counted as ``+1``."""
    predictions = np.asarray(predictions, dtype=float)
    labels = np.asarray(labels, dtype=float)
    signs = np.where(predictions >= 0, 1.0, -1.0)
    return float(np.mean(signs != labels))


def metrics_from_predictions(pred: np.ndarray, test: Dataset) -> dict:
    out = {"mse": float(np.mean((pred - test.targets) ** 2))}
    if test.truth is not None:
        # E(f) - E(f_H) = ||f - f_H||^2 under rho_X; the noise term cancels.
        out["excess_risk"] = float(np.mean((pred - test.truth) ** 2))
    if test.task == "binary-classification":
        out["classification_error"] = classification_error(pred, test.targets)
    return out


def evaluate(model, test: Dataset) -> dict:
    """Test MSE, plus the excess-risk proxy when the regression function is
    known and the sign error rate for classification data."""
    if test.n < 1:
        raise ValueError("empty test set")
    pred = np.asarray(model.predict(test.inputs), dtype=float)
    return metrics_from_predictions(pred, test)
