"""Least-squares learning with mini-batch SGD over random features.

The package is split by concern:

* :mod:`sgdrf.data` -- synthetic generators, CSV/LIBSVM loaders, splits.
* :mod:`sgdrf.features` -- random feature maps and their limit kernels.
* :mod:`sgdrf.sgd` -- the mini-batch SGD estimator and full-batch GD.
* :mod:`sgdrf.ridge` -- kernel ridge and random-feature ridge baselines.
* :mod:`sgdrf.spectral` -- eigenvalue diagnostics and effective dimension.
* :mod:`sgdrf.regimes` -- parameter plans achieving the optimal rates.
* :mod:`sgdrf.harness` -- config-driven sweeps, metrics, CSV/SVG output.
"""

from sgdrf import harness
from sgdrf.data import Dataset, SyntheticSpec, generate_synthetic, load_csv, load_libsvm, split
from sgdrf.errors import ConfigError, DataFormatError, DivergenceError, NonFiniteError
from sgdrf.features import FeatureMap, FeatureMapSpec, build, exact_kernel
from sgdrf.metrics import evaluate
from sgdrf.regimes import RegimePlan, admissible, plan
from sgdrf.ridge import RidgeSolution, gd_ridge_gap, krr_fit, rf_ridge_fit
from sgdrf.sgd import Model, SgdConfig, batch_gd, predict, sampling_trace, train
from sgdrf.spectral import SpectralSummary, effective_dimension, fit_capacity, spectrum

__version__ = "0.1.0"

__all__ = [
    "harness",
    "ConfigError",
    "DataFormatError",
    "Dataset",
    "DivergenceError",
    "FeatureMap",
    "FeatureMapSpec",
    "Model",
    "NonFiniteError",
    "RegimePlan",
    "RidgeSolution",
    "SgdConfig",
    "SpectralSummary",
    "SyntheticSpec",
    "admissible",
    "batch_gd",
    "build",
    "effective_dimension",
    "evaluate",
    "exact_kernel",
    "fit_capacity",
    "gd_ridge_gap",
    "generate_synthetic",
    "krr_fit",
    "load_csv",
    "load_libsvm",
    "plan",
    "predict",
    "rf_ridge_fit",
    "sampling_trace",
    "spectrum",
    "split",
    "train",
]
