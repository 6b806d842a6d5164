"""Sweep execution: resolve every (sweep point, replication) job, run them,
and write ``metrics.csv``, ``plan.csv``, ``summary.csv``, ``timing.csv``,
``errors.csv`` and optional ``curve_<axis>.svg`` files.

Jobs are executed grouped by the data and feature map they need, so a
consecutive run of jobs reuses one feature matrix; rows are sorted back into
(point, replication, checkpoint) order before anything is written, which
keeps the files independent of execution order and of ``threads``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from sgdrf import _rng
from sgdrf.data import SyntheticSpec, generate_synthetic, load_csv, load_libsvm, split, take
from sgdrf.errors import ConfigError
from sgdrf.features import FeatureMapSpec, build, exact_gram
from sgdrf.harness.config import ExperimentConfig
from sgdrf.harness.svg import line_chart
from sgdrf.regimes import RegimePlan, admissible, plan
from sgdrf.ridge import krr_fit
from sgdrf.sgd import SgdConfig, passes, train

METRIC_PRIORITY = ("holdout_excess_risk", "holdout_relative_excess_mse", "holdout_classification_error", "holdout_mse")


# --------------------------------------------------------------------------
# job resolution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Job:
    point: int
    replication: int
    seed: int
    values: tuple  # ((axis, value), ...)
    config: ExperimentConfig = field(compare=False, hash=False)

    def data_key(self) -> str:
        return json.dumps([self.config.data, self.seed], sort_keys=True)


def sweep_points(config: ExperimentConfig) -> list[tuple]:
    axes = config.axes
    if not axes:
        return [()]
    return [tuple(zip(axes, combo)) for combo in itertools.product(*(config.sweep[a] for a in axes))]


def jobs(config: ExperimentConfig) -> list[Job]:
    out = []
    base = config.run["seed_base"]
    for p, values in enumerate(sweep_points(config)):
        cfg = config.with_overrides(dict(values)) if values else config
        for k in range(config.run["replications"]):
            out.append(Job(p, k, base + k, values, cfg))
    return out


def load_data(data_cfg: dict, seed: int):
    """``(train, test)`` for one replication seed."""
    if data_cfg["source"] == "synthetic":
        n, n_test = data_cfg["n"], data_cfg["n_test"]
        if n_test < 1:
            raise ConfigError("data.n_test must be >= 1")
        spec = SyntheticSpec(
            n=n + n_test,
            D=data_cfg["D"],
            alpha=float(data_cfg["alpha"]),
            r=float(data_cfg["r"]),
            noise_sd=float(data_cfg["noise_sd"]),
            seed=seed,
        )
        full = generate_synthetic(spec)
        train_set, test_set = take(full, n), take(full, n + n_test, n)
        if data_cfg["standardize"]:
            from sgdrf.data import Standardizer

            st = Standardizer.fit(train_set.inputs)
            train_set, test_set = st.apply(train_set), st.apply(test_set)
        return train_set, test_set
    if data_cfg["source"] == "csv":
        full = load_csv(
            data_cfg["path"], data_cfg["target_column"], has_header=data_cfg["has_header"], task=data_cfg["task"]
        )
    else:
        full = load_libsvm(data_cfg["path"], task=data_cfg["task"], n_features=data_cfg.get("n_features"))
    train_set, test_set = split(full, float(data_cfg["test_fraction"]), seed=seed, standardize=data_cfg["standardize"])
    if "n" in data_cfg:
        if data_cfg["n"] > train_set.n:
            raise ConfigError(f"data.n={data_cfg['n']} exceeds the {train_set.n} available training rows")
        train_set = take(train_set, data_cfg["n"])
    return train_set, test_set


def resolve(config: ExperimentConfig, n: int) -> tuple[RegimePlan, float]:
    """Concrete ``(b, gamma, theta, T, M)`` for ``n`` training points, and the
    admissibility ``delta``."""
    feats = config.features
    if config.regime is not None:
        rg = config.regime
        p = plan(
            rg["tag"],
            n,
            float(rg["r"]),
            float(rg["alpha"]),
            gamma_constant=float(rg["gamma_constant"]),
            b_constant=float(rg["b_constant"]),
            M_constant=float(rg["M_constant"]),
        )
        if "M" in feats:
            p = RegimePlan(**{**p.as_row(), "M": feats["M"]})
        return p, float(rg["delta"])
    s = config.sgd
    b = s["b"]
    if b > n:
        raise ConfigError(f"sgd.b={b} exceeds n={n}")
    per_pass = math.ceil(n / b)
    T = s["T"] if "T" in s else math.ceil(float(s["passes"]) * per_pass - 1e-9)
    p = RegimePlan(
        tag="explicit",
        n=n,
        r=float("nan"),
        alpha=float("nan"),
        b=b,
        gamma=float(s["gamma"]),
        theta=float(s["theta"]),
        T=int(T),
        M=feats["M"],
        predicted_passes=passes(T, n, b),
        predicted_rate_exponent=float("nan"),
    )
    return p, 0.1


def _kappa(fm, Phi: np.ndarray) -> float:
    """Bound on ``|phi(x)|`` used for admissibility: exact for bounded maps,
    the largest training-row norm otherwise."""
    if fm.bounded:
        return fm.kappa
    return float(np.sqrt(np.max(np.einsum("nm,nm->n", Phi, Phi))))


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------


class _Cache:
    """Single-entry caches: jobs are ordered so neighbours share entries."""

    def __init__(self):
        self.data = (None, None)
        self.features = (None, None)
        self.krr = (None, None)

    def get(self, slot, key, make):
        k, v = getattr(self, slot)
        if k != key:
            v = make()
            setattr(self, slot, (key, v))
        return v


def _best_krr_mse(train_set, test_set, baseline: dict) -> float:
    best = math.inf
    for lam in baseline["krr_lambdas"]:
        sol = krr_fit(train_set, baseline["kernel"], float(baseline["sigma"]), float(lam))
        K = exact_gram(baseline["kernel"], float(baseline["sigma"]), test_set.inputs, train_set.inputs)
        best = min(best, float(np.mean((K @ sol.coefficients - test_set.targets) ** 2)))
    return best


def _run_job(job: Job, cache: _Cache) -> dict:
    cfg = job.config
    t0 = time.perf_counter()
    out = {"point": job.point, "replication": job.replication, "seed": job.seed, "values": job.values}
    try:
        train_set, test_set = cache.get("data", job.data_key(), lambda: load_data(cfg.data, job.seed))
        p, delta = resolve(cfg, train_set.n)
        f = cfg.features
        spec = FeatureMapSpec(f["kind"], p.M, train_set.D, float(f["sigma"]), job.seed, f["scaled"])
        precompute = cfg.sgd is None or cfg.sgd["memory_mode"] == "precompute"
        fkey = (job.data_key(), spec, precompute)

        def make_features():
            fm = build(spec)
            Phi = fm.transform(train_set.inputs) if precompute else None
            return fm, Phi, fm.transform(test_set.inputs)

        fm, Phi, Phi_test = cache.get("features", fkey, make_features)
        kappa = _kappa(fm, fm.transform(train_set.inputs) if Phi is None and not fm.bounded else Phi)
        adm = admissible(p, delta=delta, kappa=kappa)
        out["plan"] = {
            **{k: v for k, v in p.as_row().items() if k not in ("gamma_constant", "b_constant", "M_constant")},
            "kappa": kappa,
            "delta": delta,
            "admissible": adm.ok,
            "violations": "; ".join(str(v) for v in adm.violations),
        }
        sgd_cfg = SgdConfig(
            b=p.b,
            gamma=p.gamma,
            theta=p.theta,
            T=p.T,
            memory_mode="precompute" if precompute else "stream",
            sampling_seed=job.seed,
            checkpoint_every=0 if cfg.sgd is None else cfg.sgd["checkpoint_every"],
        )
        model = train(
            train_set,
            fm,
            sgd_cfg,
            holdout=test_set,
            evaluate_on_train=cfg.run["evaluate_on_train"],
            features=Phi if precompute else None,
            holdout_features=Phi_test,
        )
        best = None
        if cfg.baseline is not None:
            bkey = (job.data_key(), json.dumps(cfg.baseline, sort_keys=True))
            best = cache.get("krr", bkey, lambda: _best_krr_mse(train_set, test_set, cfg.baseline))
        resolved = {"n": train_set.n, "M": p.M, "b": p.b, "gamma": p.gamma, "T": p.T}
        rows, timing = [], []
        for cp in model.history:
            metrics = dict(cp.metrics)
            if best is not None:
                metrics["holdout_relative_excess_mse"] = metrics["holdout_mse"] - best
            rows.append({**resolved, **cp.row(), **metrics})
            timing.append({"t": cp.t, "elapsed_ms": cp.elapsed_ms})
        out["rows"], out["timing"] = rows, timing
        if best is not None:
            out["plan"]["krr_best_mse"] = best
    except Exception as exc:  # recorded, the sweep goes on
        out["error"] = {"error_type": type(exc).__name__, "message": str(exc).splitlines()[0] if str(exc) else ""}
        out["traceback"] = traceback.format_exc()
    out["seconds"] = time.perf_counter() - t0
    return out


def _run_group(group: list[Job], cache: Optional[_Cache] = None) -> list[dict]:
    cache = _Cache() if cache is None else cache
    return [_run_job(j, cache) for j in group]


def _groups(all_jobs: list[Job]) -> list[list[Job]]:
    """Group jobs sharing data and features, with groups on the same data
    adjacent so a shared cache can also reuse the dataset."""
    by_key: dict[tuple, list[Job]] = {}
    for j in all_jobs:
        key = (j.data_key(), json.dumps(j.config.features, sort_keys=True))
        by_key.setdefault(key, []).append(j)
    return [by_key[k] for k in sorted(by_key)]


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------


@dataclass
class RunResult:
    config: ExperimentConfig
    metric_rows: list
    plan_rows: list
    summary_rows: list
    timing_rows: list
    error_rows: list
    out_dir: Optional[Path] = None

    @property
    def ok(self) -> bool:
        return not self.error_rows

    def final_rows(self) -> list:
        """Last checkpoint of every successful job."""
        last: dict = {}
        for row in self.metric_rows:
            last[(row["point"], row["replication"])] = row
        return [last[k] for k in sorted(last)]

    def default_metric(self) -> str:
        chosen = self.config.run.get("svg_metric") or ""
        if chosen:
            return chosen
        keys = set(self.metric_rows[0]) if self.metric_rows else set()
        for m in METRIC_PRIORITY:
            if m in keys:
                return m
        return "holdout_mse"


def summarize(rows: list, axes: list, metric: str, replications: int) -> list:
    """Mean and sample standard deviation of ``metric`` per sweep point."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row["point"], []).append(row)
    out = []
    for point in sorted(groups):
        vals = np.array([r[metric] for r in groups[point]], dtype=float)
        first = groups[point][0]
        out.append(
            {
                "point": point,
                **{a: first[a] for a in axes},
                "metric": metric,
                "mean": float(vals.mean()),
                "sd": float(vals.std(ddof=1)) if vals.size > 1 else float("nan"),
                "count": int(vals.size),
                "replications": replications,
            }
        )
    return out


def _collect(config: ExperimentConfig, results: list[dict]) -> RunResult:
    axes = config.axes
    results = sorted(results, key=lambda r: (r["point"], r["replication"]))
    metric_rows, plan_rows, timing_rows, error_rows = [], [], [], []
    planned = set()
    for res in results:
        head = {"point": res["point"], **dict(res["values"]), "replication": res["replication"], "seed": res["seed"]}
        if "plan" in res and res["point"] not in planned:
            planned.add(res["point"])
            plan_rows.append({"point": res["point"], **dict(res["values"]), **res["plan"]})
        if "error" in res:
            error_rows.append({**head, **res["error"]})
            continue
        for row in res["rows"]:
            metric_rows.append({**head, **row})
        for tr in res["timing"]:
            timing_rows.append({**head, **tr, "job_seconds": res["seconds"]})
    result = RunResult(config, metric_rows, plan_rows, [], timing_rows, error_rows)
    if metric_rows:
        metric = result.default_metric()
        result.summary_rows = summarize(result.final_rows(), axes, metric, config.run["replications"])
    return result


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, rows: list, columns: Optional[list] = None) -> None:
    if columns is None:
        columns = []
        for row in rows:
            for k in row:
                if k not in columns:
                    columns.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_format(row[c]) if c in row else "" for c in columns])


def _write(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    axes = result.config.axes
    head = ["point", *axes, "replication", "seed"]
    write_csv(out_dir / "metrics.csv", result.metric_rows)
    write_csv(out_dir / "plan.csv", result.plan_rows)
    write_csv(out_dir / "summary.csv", result.summary_rows, None if result.summary_rows else ["point", *axes])
    write_csv(out_dir / "timing.csv", result.timing_rows, None if result.timing_rows else head)
    write_csv(out_dir / "errors.csv", result.error_rows, [*head, "error_type", "message"])
    if result.config.run["svg"] and result.metric_rows:
        metric = result.default_metric()
        for axis in axes:
            svg = curve_svg(result, axis, metric)
            if svg is not None:
                (out_dir / f"curve_{axis}.svg").write_text(svg)
    result.out_dir = out_dir


def curve_svg(result: RunResult, axis: str, metric: str) -> Optional[str]:
    """Mean and one-sd band of the final ``metric`` against ``axis``; one
    line per combination of the other axes."""
    others = [a for a in result.config.axes if a != axis]
    series: dict = {}
    for row in result.final_rows():
        x = row[axis]
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            return None
        label = ", ".join(f"{a}={row[a]}" for a in others) or metric
        series.setdefault(label, {}).setdefault(x, []).append(row[metric])
    lines = []
    for label, pts in series.items():
        xs = sorted(pts)
        means = [float(np.mean(pts[x])) for x in xs]
        sds = [float(np.std(pts[x], ddof=1)) if len(pts[x]) > 1 else 0.0 for x in xs]
        lines.append((label, xs, means, sds))
    return line_chart(lines, x_label=axis, y_label=metric)


def run(
    config: ExperimentConfig,
    out_dir=None,
    threads: int = 1,
) -> RunResult:
    """Execute the full sweep. Sub-run failures land in ``errors.csv`` and
    do not stop the remaining jobs."""
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    groups = _groups(jobs(config))
    results: list[dict] = []
    if threads == 1 or len(groups) == 1:
        cache = _Cache()
        for g in groups:
            results.extend(_run_group(g, cache))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(_run_group, groups):
                results.extend(part)
    result = _collect(config, results)
    if out_dir is not None:
        _write(result, Path(out_dir))
    return result


# --------------------------------------------------------------------------
# kernel approximation table
# --------------------------------------------------------------------------


def pair_grid(D: int, n_pairs: int, seed: int = 0, diagonal: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Fixed evaluation pairs: rows of ``N(0, I / D)`` so that ``|x| ~ 1``.
    With ``diagonal`` the second point equals the first."""
    rng = _rng.generator(seed, _rng.DATA, 1)
    X = rng.standard_normal((n_pairs, D)) / math.sqrt(D)
    Y = X.copy() if diagonal else rng.standard_normal((n_pairs, D)) / math.sqrt(D)
    return X, Y


def kernel_check(
    kind: str,
    D: int,
    Ms,
    n_seeds: int = 200,
    n_pairs: int = 50,
    sigma: float = 1.0,
    *,
    seed: int = 0,
    scaled: bool = True,
    diagonal: bool = False,
) -> list[dict]:
    """Per-``M`` statistics of ``k_M(x, x') - k(x, x')`` over a fixed pair
    grid and ``n_seeds`` independent feature draws.

    Every seed draws one map with ``max(Ms)`` features and evaluates its
    nested prefixes, so the rows for different ``M`` share randomness the
    same way a growing feature map would.
    """
    Ms = sorted({int(m) for m in Ms})
    if not Ms or Ms[0] < 1:
        raise ConfigError("Ms must be a non-empty list of positive integers")
    if n_seeds < 1 or n_pairs < 1:
        raise ConfigError("n_seeds and n_pairs must be >= 1")
    X, Y = pair_grid(D, n_pairs, seed, diagonal)
    exact = np.array([exact_gram(kind, sigma, X[i : i + 1], Y[i : i + 1], scaled)[0, 0] for i in range(n_pairs)])
    diffs = {m: np.empty((n_seeds, n_pairs)) for m in Ms}
    for s in range(n_seeds):
        fm = build(FeatureMapSpec(kind, Ms[-1], D, sigma, seed + s, scaled))
        PX, PY = fm.transform(X), fm.transform(Y)
        prods = PX * PY
        # rescale the running sum: the prefix of length m carries 1/m, not 1/M
        csum = np.cumsum(prods, axis=1) * Ms[-1]
        for m in Ms:
            diffs[m][s] = csum[:, m - 1] / m - exact
    rows = []
    for m in Ms:
        d = diffs[m].ravel()
        a = np.abs(d)
        rows.append(
            {
                "kind": kind,
                "M": m,
                "n_seeds": n_seeds,
                "n_pairs": n_pairs,
                "median_abs": float(np.median(a)),
                "mean_abs": float(a.mean()),
                "q10_abs": float(np.quantile(a, 0.1)),
                "q90_abs": float(np.quantile(a, 0.9)),
                "max_abs": float(a.max()),
                "mean_signed": float(d.mean()),
                "sd_signed": float(d.std(ddof=1)) if d.size > 1 else 0.0,
            }
        )
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs >= 2 strictly positive points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
