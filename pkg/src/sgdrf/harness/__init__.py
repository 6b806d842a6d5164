"""Config-driven experiments: sweeps with replications, CSV and SVG output,
and the kernel approximation table."""

from sgdrf.harness.config import ExperimentConfig, load, parse
from sgdrf.harness.experiment import RunResult, kernel_check, loglog_slope, run, summarize, write_csv
from sgdrf.metrics import evaluate

__all__ = [
    "ExperimentConfig",
    "RunResult",
    "evaluate",
    "kernel_check",
    "load",
    "loglog_slope",
    "parse",
    "run",
    "summarize",
    "write_csv",
]
