"""Experiment configuration: a TOML file with a fixed set of sections and
keys. Unknown keys are rejected so a typo cannot silently change a sweep.

Sections
--------
``[data]``
    ``source`` (``synthetic`` | ``csv`` | ``libsvm``). Synthetic: ``n``
    (training size), ``n_test``, ``D``, ``alpha``, ``r``, ``noise_sd``.
    Files: ``path``, ``target_column``, ``has_header``, ``task``,
    ``n_features``, ``test_fraction``. Both: ``standardize`` (default true
    for files, false for synthetic data, whose spectrum it would destroy).
``[features]``
    ``kind``, ``M``, ``sigma``, ``scaled``.
``[sgd]``
    ``b``, ``gamma``, ``theta``, and one of ``T`` or ``passes``;
    ``memory_mode``, ``checkpoint_every``.
``[regime]``
    ``tag``, ``r``, ``alpha``, ``gamma_constant``, ``b_constant``,
    ``M_constant``, ``delta``. Exclusive with ``[sgd]``; supplies ``b``,
    ``gamma``, ``T`` and (unless ``features.M`` is set) ``M``.
``[sweep]``
    ``"section.key" = [values...]``; the cartesian product is run.
``[run]``
    ``replications``, ``seed_base``, ``evaluate_on_train``, ``svg``,
    ``svg_metric``.
``[baseline]``
    ``krr_lambdas``, ``kernel``, ``sigma``: for data without a known
    regression function, report test MSE minus the best KRR test MSE.
"""

from __future__ import annotations

import copy
import itertools
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from sgdrf.errors import ConfigError

SCHEMA: dict[str, dict[str, type | tuple]] = {
    "data": {
        "source": str,
        "n": int,
        "n_test": int,
        "D": int,
        "alpha": (int, float),
        "r": (int, float),
        "noise_sd": (int, float),
        "path": str,
        "target_column": int,
        "has_header": bool,
        "task": str,
        "n_features": int,
        "test_fraction": (int, float),
        "standardize": bool,
    },
    "features": {"kind": str, "M": int, "sigma": (int, float), "scaled": bool},
    "sgd": {
        "b": int,
        "gamma": (int, float),
        "theta": (int, float),
        "T": int,
        "passes": (int, float),
        "memory_mode": str,
        "checkpoint_every": int,
    },
    "regime": {
        "tag": str,
        "r": (int, float),
        "alpha": (int, float),
        "gamma_constant": (int, float),
        "b_constant": (int, float),
        "M_constant": (int, float),
        "delta": (int, float),
    },
    "run": {
        "replications": int,
        "seed_base": int,
        "evaluate_on_train": bool,
        "svg": bool,
        "svg_metric": str,
    },
    "baseline": {"krr_lambdas": list, "kernel": str, "sigma": (int, float)},
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "data": {
        "source": "synthetic",
        "n_test": 2000,
        "alpha": 1.0,
        "r": 0.5,
        "noise_sd": 0.0,
        "has_header": False,
        "task": "regression",
        "test_fraction": 0.2,
    },
    "features": {"kind": "fourier-gaussian", "sigma": 1.0, "scaled": True},
    "sgd": {"theta": 0.0, "memory_mode": "precompute", "checkpoint_every": 0},
    "regime": {
        "r": 0.5,
        "alpha": 1.0,
        "gamma_constant": 1.0,
        "b_constant": 1.0,
        "M_constant": 1.0,
        "delta": 0.1,
    },
    "run": {
        "replications": 10,
        "seed_base": 0,
        "evaluate_on_train": False,
        "svg": True,
        "svg_metric": "",
    },
}


@dataclass
class ExperimentConfig:
    data: dict
    features: dict
    sgd: dict | None
    regime: dict | None
    sweep: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    baseline: dict | None = None

    @property
    def axes(self) -> list[str]:
        return list(self.sweep)

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        """Copy with ``{"section.key": value}`` applied and re-validated."""
        raw = self.to_dict()
        for key, value in overrides.items():
            section, name = key.split(".", 1)
            raw.setdefault(section, {})[name] = value
        raw.pop("sweep", None)
        return parse(raw)

    def to_dict(self) -> dict:
        out = {"data": dict(self.data), "features": dict(self.features), "run": dict(self.run)}
        if self.sgd is not None:
            out["sgd"] = dict(self.sgd)
        if self.regime is not None:
            out["regime"] = dict(self.regime)
        if self.baseline is not None:
            out["baseline"] = dict(self.baseline)
        if self.sweep:
            out["sweep"] = copy.deepcopy(self.sweep)
        return out


def _check_type(where: str, value, kind) -> None:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"{where}: expected {kinds}, got bool")
    if not isinstance(value, kinds):
        raise ConfigError(f"{where}: expected {'/'.join(k.__name__ for k in kinds)}, got {type(value).__name__}")


def _section(raw: dict, name: str, required: bool) -> dict | None:
    body = raw.get(name)
    if body is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return None
    if not isinstance(body, dict):
        raise ConfigError(f"[{name}] must be a table")
    schema = SCHEMA[name]
    for key, value in body.items():
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key}; allowed: {', '.join(sorted(schema))}")
        _check_type(f"{name}.{key}", value, schema[key])
    return {**DEFAULTS.get(name, {}), **body}


def _require(data: dict, features: dict, sgd: dict | None, regime: dict | None) -> None:
    """Checks that need concrete values; with a sweep they run per point."""
    if data["source"] not in ("synthetic", "csv", "libsvm"):
        raise ConfigError(f"data.source must be synthetic, csv or libsvm, got {data['source']!r}")
    if data["source"] == "synthetic":
        for key in ("n", "D"):
            if key not in data:
                raise ConfigError(f"synthetic data needs data.{key}")
        data.setdefault("standardize", False)
    else:
        if "path" not in data:
            raise ConfigError("file data needs data.path")
        if data["source"] == "csv" and "target_column" not in data:
            raise ConfigError("csv data needs data.target_column")
        data.setdefault("standardize", True)
    if sgd is not None:
        for key in ("b", "gamma"):
            if key not in sgd:
                raise ConfigError(f"[sgd] needs {key}")
        if ("T" in sgd) == ("passes" in sgd):
            raise ConfigError("[sgd] needs exactly one of T or passes")
        if "M" not in features:
            raise ConfigError("explicit [sgd] mode needs features.M")
    if regime is not None and "tag" not in regime:
        raise ConfigError("[regime] needs tag")


def parse(raw: dict) -> ExperimentConfig:
    """Validate a nested dict (as loaded from TOML)."""
    allowed = set(SCHEMA) | {"sweep"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    data = _section(raw, "data", True)
    features = _section(raw, "features", False) or dict(DEFAULTS["features"])
    sgd = _section(raw, "sgd", False)
    regime = _section(raw, "regime", False)
    run = _section(raw, "run", False) or dict(DEFAULTS["run"])
    baseline = _section(raw, "baseline", False)

    if (sgd is None) == (regime is None):
        raise ConfigError("exactly one of [sgd] (explicit parameters) or [regime] (planner tag) is required")
    if run["replications"] < 1:
        raise ConfigError("run.replications must be >= 1")
    if run["seed_base"] < 0:
        raise ConfigError("run.seed_base must be >= 0")
    if baseline is not None:
        lams = baseline.get("krr_lambdas", [])
        if not lams or not all(isinstance(v, (int, float)) and v > 0 and math.isfinite(v) for v in lams):
            raise ConfigError("baseline.krr_lambdas must be a non-empty list of positive numbers")
        baseline.setdefault("kernel", features["kind"])
        baseline.setdefault("sigma", features["sigma"])

    sweep = raw.get("sweep", {}) or {}
    if not isinstance(sweep, dict):
        raise ConfigError("[sweep] must be a table")
    sections = {"data": data, "features": features, "sgd": sgd, "regime": regime, "run": run}
    for key, values in sweep.items():
        if "." not in key:
            raise ConfigError(f"sweep axis {key!r} must be written section.key")
        section, name = key.split(".", 1)
        if section not in SCHEMA or section == "baseline" or name not in SCHEMA[section]:
            raise ConfigError(f"sweep axis {key!r} does not name a parameter")
        if sections.get(section) is None:
            raise ConfigError(f"sweep axis {key!r} refers to the absent [{section}] section")
        if section == "run":
            raise ConfigError(f"run.* settings cannot be swept ({key!r})")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep axis {key!r} needs a non-empty list of values")
        for v in values:
            _check_type(f"sweep.{key}", v, SCHEMA[section][name])
    cfg = ExperimentConfig(data, features, sgd, regime, dict(sweep), run, baseline)
    if not sweep:
        _require(data, features, sgd, regime)
    else:
        axes = list(sweep)
        for combo in itertools.product(*(sweep[a] for a in axes)):
            cfg.with_overrides(dict(zip(axes, combo)))
    return cfg


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = parse(raw)
    p = cfg.data.get("path")
    if p is not None and not Path(p).is_absolute():
        cfg.data["path"] = str((path.parent / p).resolve())
    return cfg
