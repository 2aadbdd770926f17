"""Command-line entry point: ``rnnforecast <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .checkpoint import load_model, save_model
from .dataprep import generate_activities, generate_random_walks, prepare, write_wide_csv
from .errors import ConfigError, RnnForecastError
from .evaluation import Baseline, evaluate_model, mann_whitney_two_tailed
from .experiment import (
    COMPARISONS,
    ComparisonResult,
    _write_csv,
    build_config,
    emit_plot_data,
    load_series,
    parse_config_text,
    result_from_run,
    run_experiment,
    write_reports,
    write_stats,
)
from .numerics import derive_seed
from .training import KINDS, train

log = logging.getLogger("rnnforecast")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _models(text: str) -> tuple:
    lookup = {"lstm": "LSTM", "gru": "GRU", "baseline": "Baseline"}
    try:
        return tuple(lookup[s.strip().lower()] for s in text.split(",") if s.strip())
    except KeyError as exc:
        raise argparse.ArgumentTypeError(f"unknown model {exc.args[0]!r}")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--config", type=Path, help="key = value config file; flags override it")
    g.add_argument("--profile", choices=("quick", "full"))
    g.add_argument("--dataset", help="'activities', 'randomwalk', a directory of CSVs or a wide CSV")
    g.add_argument("--column", help="price column in per-symbol CSVs (default Close)")
    g.add_argument("--keep", type=int, help="keep only the last KEEP samples of each series")
    g.add_argument("--series-count", dest="n_series", type=int, help="number of synthetic series")
    g.add_argument("--length", type=int, help="length of synthetic series")
    g.add_argument("--window", type=int)
    g.add_argument("--steps", type=_int_list, help="forecast horizons, e.g. 1,20")
    g.add_argument("--test-samples", dest="test_samples", type=int)
    g.add_argument("--train-index", dest="train_index", type=int)
    g.add_argument("--norm-train-only", dest="norm_train_only", action="store_true", default=None)
    g.add_argument("--seed", type=int)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--units", type=int)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", dest="batch_size", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--grad-clip", dest="gradient_clip", type=float)
    g.add_argument("--no-peepholes", dest="peepholes", action="store_false", default=None)
    g.add_argument("--output-peek", dest="output_peek", choices=("current", "previous"))
    g.add_argument("--jobs", type=int)


OVERRIDE_KEYS = (
    "dataset", "column", "keep", "n_series", "length", "window", "steps", "test_samples",
    "train_index", "norm_train_only", "seed", "units", "epochs", "batch_size", "lr",
    "gradient_clip", "peepholes", "output_peek", "jobs", "models", "exclude_train_series",
    "plot_series", "svg",
)


def _config_from_args(args):
    file_values = parse_config_text(args.config.read_text()) if getattr(args, "config", None) else {}
    overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS if hasattr(args, k)}
    return build_config(getattr(args, "profile", None), file_values, overrides)


def cmd_generate(args) -> int:
    if args.dataset == "activities":
        series = generate_activities(args.series_count, args.length, args.slope, seed=args.seed,
                                     noise_sd=args.noise_sd)
    else:
        series = generate_random_walks(args.series_count, args.length, seed=args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_wide_csv(series, args.out)
    print(f"wrote {len(series)} series x {args.length} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    series = load_series(config)
    kinds = KINDS if args.kind == "both" else (args.kind.upper(),)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for f in config.steps:
        ds = prepare(series[config.train_index], config.window, f, config.test_samples,
                     config.norm_train_only)
        for kind in kinds:
            model, history = train(kind, ds, config.train_config(kind, f))
            tag = f"{kind.lower()}_f{f}"
            save_model(model, out / f"model_{tag}.ckpt")
            _write_csv(out / f"loss_{tag}.csv", ["epoch", "mse"],
                       [(i + 1, float(v)) for i, v in enumerate(history)])
            print(f"{kind} f={f}: final training mse {history[-1]:.6g} -> {out / f'model_{tag}.ckpt'}")
    (out / "config.echo").write_text(config.to_text())
    return 0


def cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    models = [load_model(p) for p in args.model]
    steps = {m.steps for m in models} or set(config.steps)
    if len(steps) != 1:
        raise ConfigError(f"checkpoints disagree on the forecast horizon: {sorted(steps)}")
    f = steps.pop()
    named = {m.kind: m for m in models}
    if not args.no_baseline:
        named["Baseline"] = Baseline(f)
    series = load_series(config)
    reports = []
    for s in series:
        ds = prepare(s, config.window, f, config.test_samples, config.norm_train_only)
        for model in named.values():
            reports.append(evaluate_model(model, ds))
    comparisons = []
    for metric in ("rmse", "da"):
        for a, b in COMPARISONS:
            if a in named and b in named:
                va = [getattr(r, metric) for r in reports if r.model == a]
                vb = [getattr(r, metric) for r in reports if r.model == b]
                comparisons.append(ComparisonResult(f"f{f}/{metric}/{a}-vs-{b}", f, metric, a, b,
                                                    mann_whitney_two_tailed(va, vb)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_reports(reports, out / "reports.csv")
    write_stats(comparisons, out / "stats.csv")
    for c in comparisons:
        print(f"{c.name}: U={c.test.u_a:g} p={c.test.p_two_tailed:.4g} ({c.test.method})")
    return 0


def cmd_experiment(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config, args.out)
    print(f"{'f':>3} {'model':<9} {'rmse mean':>10} {'rmse sd':>9} {'da mean':>9} {'da sd':>8}")
    for row in result.summary():
        print(f"{row['f']:>3} {row['model']:<9} {row['rmse_mean']:>10.4f} {row['rmse_sd']:>9.4f} "
              f"{row['da_mean']:>9.4f} {row['da_sd']:>8.4f}")
    for c in result.comparisons:
        print(f"{c.name}: U={c.test.u_a:g} n={c.test.n1},{c.test.n2} p={c.test.p_two_tailed:.4g}")
    print(f"outputs in {args.out}")
    return 0


def cmd_plot_data(args) -> int:
    result = result_from_run(args.run, args.steps)
    name = args.series or result.series[-1].name
    out = args.out or Path(args.run) / f"plot_{name}.csv"
    svg = Path(out).with_suffix(".svg") if args.svg else None
    emit_plot_data(result, name, args.start, args.count, out, f=args.steps, svg_path=svg)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnnforecast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="export a synthetic dataset as a wide CSV")
    p.add_argument("--dataset", choices=("activities", "randomwalk"), default="activities")
    p.add_argument("--series-count", type=int, default=10)
    p.add_argument("--length", type=int, default=3584)
    p.add_argument("--slope", type=float, default=1e-4)
    p.add_argument("--noise-sd", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train on the configured training series")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--kind", choices=("lstm", "gru", "both"), default="both")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score checkpoints and the baseline on every series")
    _add_dataset_flags(p)
    p.add_argument("--model", type=Path, action="append", default=[], help="checkpoint (repeatable)")
    p.add_argument("--no-baseline", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="full pipeline: train, evaluate, compare, emit files")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--models", type=_models, help="subset of lstm,gru,baseline")
    p.add_argument("--exclude-train-series", dest="exclude_train_series", action="store_true", default=None)
    p.add_argument("--plot-series", dest="plot_series")
    p.add_argument("--svg", action="store_true", default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot-data", help="actual vs predicted CSV for one series of a finished run")
    p.add_argument("--run", type=Path, required=True, help="experiment output directory")
    p.add_argument("--series")
    p.add_argument("--steps", type=int, help="forecast horizon (default: shortest in the run)")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RnnForecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
