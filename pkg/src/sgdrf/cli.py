"""Command line front end: ``sgdrf <command> [options]``.

Exit status is 0 on success, 1 for configuration or input-format errors and
2 for runtime failures (a sweep with failed sub-runs also exits 2, after
writing every artifact it could).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from sgdrf import harness
from sgdrf.data import SyntheticSpec, generate_synthetic, load_csv, load_libsvm
from sgdrf.errors import ConfigError, DataFormatError
from sgdrf.features import KINDS, FeatureMapSpec, build
from sgdrf.harness.experiment import load_data, resolve, write_csv
from sgdrf.metrics import evaluate
from sgdrf.regimes import TAGS, admissible, plan
from sgdrf.sgd import MEMORY_MODES, Model, SgdConfig, train
from sgdrf.spectral import default_grid, effective_dimension, fit_capacity, spectrum


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    spec = SyntheticSpec(n=args.n, D=args.D, alpha=args.alpha, r=args.r, noise_sd=args.noise_sd, seed=args.seed)
    data = generate_synthetic(spec)
    out = _out_dir(args)
    cols = ["y"] + [f"x{j + 1}" for j in range(data.D)]
    rows = [dict(zip(cols, [y, *x])) for y, x in zip(data.targets.tolist(), data.inputs.tolist())]
    write_csv(out / "data.csv", rows, cols)
    write_csv(out / "truth.csv", [{"f": v} for v in data.truth.tolist()], ["f"])
    print(f"wrote {data.n} rows to {out / 'data.csv'} (target column 0, header) and {out / 'truth.csv'}")
    return 0


def cmd_plan(args) -> int:
    p = plan(
        args.tag,
        args.n,
        args.r,
        args.alpha,
        gamma_constant=args.gamma_constant,
        b_constant=args.b_constant,
        M_constant=args.M_constant,
    )
    adm = admissible(p, delta=args.delta, kappa=args.kappa)
    row = {**p.as_row(), "admissible": adm.ok, "violations": "; ".join(map(str, adm.violations))}
    for k, v in row.items():
        print(f"{k} = {v}")
    if args.out_dir:
        write_csv(_out_dir(args) / "plan.csv", [row])
    return 0


def _single_config(path: str):
    cfg = harness.load(path)
    if cfg.sweep:
        raise ConfigError("train/eval take a config without [sweep]; use the sweep command")
    return cfg


def cmd_train(args) -> int:
    cfg = _single_config(args.config)
    train_set, test_set = load_data(cfg.data, args.seed)
    p, delta = resolve(cfg, train_set.n)
    f = cfg.features
    fm = build(FeatureMapSpec(f["kind"], p.M, train_set.D, float(f["sigma"]), args.seed, f["scaled"]))
    mode = args.memory_mode or ("precompute" if cfg.sgd is None else cfg.sgd["memory_mode"])
    every = 0 if cfg.sgd is None else cfg.sgd["checkpoint_every"]
    sgd_cfg = SgdConfig(p.b, p.gamma, p.theta, p.T, mode, args.seed, every)
    model = train(train_set, fm, sgd_cfg, holdout=test_set, evaluate_on_train=cfg.run["evaluate_on_train"])
    out = _out_dir(args)
    model.save(out / "model.npz")
    write_csv(out / "history.csv", [cp.row() for cp in model.history])
    print(json.dumps({"n": train_set.n, "M": p.M, "b": p.b, "gamma": p.gamma, "T": p.T, **model.history[-1].metrics}))
    return 0


def cmd_eval(args) -> int:
    model = Model.load(args.model)
    if args.config:
        _, test = load_data(_single_config(args.config).data, args.seed)
    elif args.data:
        if args.format == "libsvm":
            test = load_libsvm(args.data, task=args.task, n_features=model.fm.D)
        else:
            test = load_csv(args.data, args.target_column, has_header=args.has_header, task=args.task)
    else:
        raise ConfigError("eval needs --config or --data")
    print(json.dumps(evaluate(model, test)))
    return 0


def cmd_sweep(args) -> int:
    cfg = harness.load(args.config)
    if args.replications is not None:
        cfg.run["replications"] = args.replications
    if args.seed is not None:
        cfg.run["seed_base"] = args.seed
    result = harness.run(cfg, _out_dir(args), threads=args.threads)
    print(f"{len(result.metric_rows)} metric rows, {len(result.error_rows)} failed sub-runs -> {result.out_dir}")
    for row in result.summary_rows:
        print(json.dumps(row))
    return 0 if result.ok else 2


def cmd_spectrum(args) -> int:
    if args.config:
        data, _ = load_data(_single_config(args.config).data, args.seed)
        kind, sigma = args.kernel, args.sigma
    else:
        raise ConfigError("spectrum needs --config")
    if args.subsample and data.n > args.subsample:
        data = data.subset(np.arange(args.subsample))
    summary = spectrum(data, kind, sigma)
    out = _out_dir(args)
    write_csv(out / "spectrum.csv", [{"i": i + 1, "eigenvalue": float(v)} for i, v in enumerate(summary.eigenvalues)])
    grid = default_grid(summary, decades=args.decades)
    fit = fit_capacity(summary, grid)
    write_csv(
        out / "effective_dimension.csv",
        [{"lambda": float(l), "N": float(v)} for l, v in zip(grid, effective_dimension(summary, grid))],
    )
    print(json.dumps({"n": summary.n_used, "alpha_hat": fit.alpha_hat, "Q_hat": fit.Q_hat, "r2": fit.r2}))
    return 0


def cmd_kernel_check(args) -> int:
    rows = harness.kernel_check(
        args.kind,
        args.D,
        args.Ms,
        args.n_seeds,
        args.n_pairs,
        args.sigma,
        seed=args.seed,
        diagonal=args.diagonal,
    )
    write_csv(_out_dir(args) / "kernel_check.csv", rows)
    for row in rows:
        print(f"M={row['M']:>6}  median |k_M - k| = {row['median_abs']:.4g}")
    if len(rows) > 1:
        slope = harness.loglog_slope([r["M"] for r in rows], [r["median_abs"] for r in rows])
        print(f"log-log slope: {slope:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="base seed (default 0; for sweep, overrides run.seed_base)")
    common.add_argument("--out-dir", default="out", help="directory for written artifacts (default ./out)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps (default 1)")

    parser = argparse.ArgumentParser(prog="sgdrf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plan", parents=[common], help="resolve a regime tag to (b, gamma, T, M)")
    p.add_argument("--tag", choices=TAGS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma-constant", type=float, default=1.0)
    p.add_argument("--b-constant", type=float, default=1.0)
    p.add_argument("--M-constant", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=1.0)
    p.set_defaults(func=cmd_plan, out_dir=None)

    p = sub.add_parser("train", parents=[common], help="train one model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--memory-mode", choices=MEMORY_MODES)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--config", help="evaluate on this config's test split for --seed")
    p.add_argument("--data", help="evaluate on a CSV or LIBSVM file")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--target-column", type=int, default=0)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--task", choices=("regression", "binary-classification"), default="regression")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="run a config-driven sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", parents=[common], help="kernel spectrum and capacity fit")
    p.add_argument("--config", required=True, help="config whose [data] section is used")
    p.add_argument("--kernel", choices=KINDS, default="fourier-gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--subsample", type=int, default=2000)
    p.add_argument("--decades", type=float, default=2.0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("kernel-check", parents=[common], help="kernel approximation error versus M")
    p.add_argument("--kind", choices=KINDS, default="fourier-gaussian")
    p.add_argument("--D", type=int, default=5)
    p.add_argument("--Ms", type=int, nargs="+", default=[16, 64, 256, 1024, 4096])
    p.add_argument("--n-seeds", type=int, default=200)
    p.add_argument("--n-pairs", type=int, default=50)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--diagonal", action="store_true", help="evaluate at x = x'")
    p.set_defaults(func=cmd_kernel_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "sweep" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
