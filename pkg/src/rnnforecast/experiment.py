"""End-to-end experiment: load series, train on one, evaluate on all, compare.

Output files written by :func:`run_experiment` (all CSVs use ``\\n`` line
endings and ``repr`` floats so reruns are byte-identical):

``reports.csv``    series,model,f,rmse,da,rmse_denorm
``stats.csv``      comparison,u,n1,n2,p,method (``u`` is U of the first model)
``summary.csv``    f,model,n,rmse_mean,rmse_sd,da_mean,da_sd (sample SD)
``config.echo``    effective configuration, loadable with ``--config``
``loss_<kind>_f<f>.csv``, ``model_<kind>_f<f>.ckpt``
``plot_<series>.csv`` (+ ``.svg`` on request)
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .checkpoint import load_model, save_model
from .dataprep import (
    Series,
    denormalize_values,
    generate_activities,
    generate_random_walks,
    load_csv_dir,
    prepare,
    read_wide_csv,
    truncate_tail,
)
from .errors import ConfigError, DataError, RnnForecastError
from .evaluation import (
    Baseline,
    ForecastReport,
    MannWhitneyResult,
    evaluate_model,
    mann_whitney_two_tailed,
    predict_test,
)
from .numerics import derive_seed
from .training import KINDS, TrainConfig, TrainedModel, train

log = logging.getLogger(__name__)

MODEL_NAMES = ("LSTM", "GRU", "Baseline")
COMPARISONS = (("LSTM", "Baseline"), ("GRU", "Baseline"), ("LSTM", "GRU"))
SYNTHETIC = ("activities", "randomwalk")

PROFILES = {
    "full": {"units": 128, "epochs": 200, "length": 3584, "n_series": 10},
    "quick": {"units": 32, "epochs": 60, "length": 700, "n_series": 10},
}


@dataclass
class ExperimentConfig:
    dataset: str = "activities"
    column: str = "Close"
    keep: Optional[int] = None
    n_series: int = 10
    length: int = 3584
    slope: float = 1e-4
    noise_sd: float = 0.05
    window: int = 60
    steps: tuple = (1, 20)
    test_samples: int = 251
    train_index: int = 0
    models: tuple = MODEL_NAMES
    units: int = 128
    epochs: int = 200
    batch_size: int = 32
    lr: float = 1e-3
    gradient_clip: Optional[float] = None
    seed: int = 0
    peepholes: bool = True
    output_peek: str = "current"
    norm_train_only: bool = False
    exclude_train_series: bool = False
    plot_series: Optional[str] = None
    plot_count: int = 100
    svg: bool = False
    jobs: int = 1

    def __post_init__(self):
        self.steps = tuple(int(s) for s in self.steps)
        self.models = tuple(self.models)
        if not self.steps:
            raise ConfigError("need at least one forecast horizon")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad or not self.models:
            raise ConfigError(f"models must be drawn from {MODEL_NAMES}, got {self.models}")
        if self.train_index < 0:
            raise ConfigError("train_index must be >= 0")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def train_config(self, kind: str, f: int) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.lr,
            seed=derive_seed(self.seed, KINDS.index(kind) + 1, f),
            units=self.units,
            gradient_clip=self.gradient_clip,
            peepholes=self.peepholes,
            output_peek=self.output_peek,
        )

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif v is None:
                v = ""
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, raw: str):
    default = getattr(ExperimentConfig, name, None)
    kind = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[name].type
    raw = raw.strip()
    if name in ("steps",):
        return tuple(int(s) for s in raw.split(",") if s.strip())
    if name in ("models",):
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if "Optional" in str(kind) and raw == "":
        return None
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if "int" in str(kind):
            return int(raw)
        if "float" in str(kind):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    names = {f.name for f in dataclasses.fields(ExperimentConfig)} | {"profile"}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in names:
            raise ConfigError(f"config line {lineno}: cannot use {line!r}")
        out[key] = value.strip() if key == "profile" else _coerce(key, value)
    return out


def build_config(profile: Optional[str] = None, file_values: Optional[dict] = None,
                 overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then profile, then config-file values, then overrides."""
    file_values = dict(file_values or {})
    profile = profile or file_values.pop("profile", None)
    file_values.pop("profile", None)
    values = {}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        values.update(PROFILES[profile])
    values.update(file_values)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig(**values)


def load_series(config: ExperimentConfig) -> list[Series]:
    ds = config.dataset
    if ds == "activities":
        series = generate_activities(
            config.n_series, config.length, config.slope,
            seed=derive_seed(config.seed, 0), noise_sd=config.noise_sd,
        )
    elif ds == "randomwalk":
        series = generate_random_walks(config.n_series, config.length, seed=derive_seed(config.seed, 0))
    else:
        path = Path(ds)
        if path.is_dir():
            series = load_csv_dir(path, config.column)
        elif path.is_file():
            series = read_wide_csv(path)
        else:
            raise DataError(f"dataset {ds!r} is neither a synthetic generator nor an existing path")
        if config.keep is not None:
            series = [truncate_tail(s, config.keep) for s in series]
    if config.train_index >= len(series):
        raise ConfigError(f"train_index {config.train_index} but only {len(series)} series")
    return series


@dataclass
class ComparisonResult:
    name: str
    f: int
    metric: str
    model_a: str
    model_b: str
    test: MannWhitneyResult


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: list
    reports: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    models: dict = field(default_factory=dict)
    histories: dict = field(default_factory=dict)
    datasets: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)

    def values(self, model: str, f: int, metric: str) -> list[float]:
        return [getattr(r, metric) for r in self.reports if r.model == model and r.f == f]

    def summary(self) -> list[dict]:
        rows = []
        for f in self.config.steps:
            for model in self.config.models:
                rm = np.array(self.values(model, f, "rmse"))
                da = np.array(self.values(model, f, "da"))
                if rm.size == 0:
                    continue
                sd = (lambda a: float(np.std(a, ddof=1)) if a.size > 1 else float("nan"))
                rows.append({
                    "f": f, "model": model, "n": int(rm.size),
                    "rmse_mean": float(np.mean(rm)), "rmse_sd": sd(rm),
                    "da_mean": float(np.mean(da)), "da_sd": sd(da),
                })
        return rows

    def comparison(self, f: int, metric: str, a: str, b: str) -> MannWhitneyResult:
        for c in self.comparisons:
            if (c.f, c.metric, c.model_a, c.model_b) == (f, metric, a, b):
                return c.test
        raise KeyError((f, metric, a, b))


def _train_task(config: ExperimentConfig, kind: str, f: int, dataset):
    log.info("training %s for f=%d on %s", kind, f, dataset.name)
    try:
        return train(kind, dataset, config.train_config(kind, f))
    except RnnForecastError as exc:
        raise type(exc)(f"{kind}, f={f}, series {dataset.name}: {exc}") from exc


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run the full protocol; write the output tree when ``out_dir`` is given."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "INCOMPLETE").write_text("run in progress\n")
    try:
        result = _run(config)
        if out is not None:
            write_outputs(result, out)
            (out / "INCOMPLETE").unlink()
    except Exception as exc:
        if out is not None:
            (out / "INCOMPLETE").write_text(f"run failed: {exc}\n")
        raise
    return result


def _run(config: ExperimentConfig) -> ExperimentResult:
    series = load_series(config)
    names = [s.name for s in series]
    if config.plot_series is not None and config.plot_series not in names:
        raise ConfigError(f"unknown series {config.plot_series!r}; available: {names}")
    result = ExperimentResult(config, series)
    kinds = [k for k in KINDS if k in config.models]
    for f in config.steps:
        datasets = []
        for s in series:
            try:
                datasets.append(prepare(s, config.window, f, config.test_samples, config.norm_train_only))
            except RnnForecastError as exc:
                raise type(exc)(f"series {s.name}, f={f}: {exc}") from exc
        result.datasets[f] = datasets
        train_ds = datasets[config.train_index]
        tasks = [(kind, f) for kind in kinds]
        if config.jobs > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                trained = list(pool.map(lambda t: _train_task(config, t[0], t[1], train_ds), tasks))
        else:
            trained = [_train_task(config, k, f, train_ds) for k, f in tasks]
        for (kind, _), (model, history) in zip(tasks, trained):
            result.models[(kind, f)] = model
            result.histories[(kind, f)] = history

        for i, ds in enumerate(datasets):
            if config.exclude_train_series and i == config.train_index:
                continue
            for name in config.models:
                model = Baseline(f) if name == "Baseline" else result.models[(name, f)]
                try:
                    pred = predict_test(model, ds)
                    report = evaluate_model(model, ds, pred)
                except RnnForecastError as exc:
                    raise type(exc)(f"{name}, f={f}, series {ds.name}: {exc}") from exc
                result.predictions[(ds.name, name, f)] = pred
                result.reports.append(report)

        for metric in ("rmse", "da"):
            for a, b in COMPARISONS:
                if a in config.models and b in config.models:
                    test = mann_whitney_two_tailed(
                        result.values(a, f, metric), result.values(b, f, metric)
                    )
                    name = f"f{f}/{metric}/{a}-vs-{b}"
                    result.comparisons.append(ComparisonResult(name, f, metric, a, b, test))
    return result


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_reports(reports: list[ForecastReport], path: Path) -> None:
    _write_csv(path, ["series", "model", "f", "rmse", "da", "rmse_denorm"],
               [(r.series, r.model, r.f, r.rmse, r.da,
                 "" if r.rmse_denorm is None else r.rmse_denorm) for r in reports])


def write_stats(comparisons: list[ComparisonResult], path: Path) -> None:
    _write_csv(path, ["comparison", "u", "n1", "n2", "p", "method"],
               [(c.name, c.test.u_a, c.test.n1, c.test.n2, c.test.p_two_tailed, c.test.method)
                for c in comparisons])


def write_outputs(result: ExperimentResult, out: Path) -> None:
    cfg = result.config
    write_reports(result.reports, out / "reports.csv")
    write_stats(result.comparisons, out / "stats.csv")
    keys = ["f", "model", "n", "rmse_mean", "rmse_sd", "da_mean", "da_sd"]
    _write_csv(out / "summary.csv", keys, [[row[k] for k in keys] for row in result.summary()])
    (out / "config.echo").write_text(cfg.to_text())
    for (kind, f), model in result.models.items():
        tag = f"{kind.lower()}_f{f}"
        save_model(model, out / f"model_{tag}.ckpt")
        _write_csv(out / f"loss_{tag}.csv", ["epoch", "mse"],
                   [(i + 1, float(v)) for i, v in enumerate(result.histories[(kind, f)])])
    plot_name = cfg.plot_series or result.series[-1].name
    emit_plot_data(result, plot_name, 0, cfg.plot_count, out / f"plot_{plot_name}.csv",
                   svg_path=(out / f"plot_{plot_name}.svg") if cfg.svg else None)


def emit_plot_data(result: ExperimentResult, series: str, start: int, count: int, path,
                   f: Optional[int] = None, svg_path=None) -> Path:
    """Actual and predicted values over test rows ``start .. start+count-1``.

    Uses the shortest configured horizon and its first forecast step; all
    values are in the series' original units. ``t`` is the index of the
    target in the original series.
    """
    f = f if f is not None else min(result.config.steps)
    names = [s.name for s in result.series]
    if series not in names:
        raise ConfigError(f"unknown series {series!r}; available: {names}")
    raw = result.series[names.index(series)]
    ds = result.datasets[f][names.index(series)]
    stop = min(start + max(count, 0), ds.test_rows)
    rows = []
    cols = {}
    for model in ("LSTM", "GRU", "Baseline"):
        pred = result.predictions.get((series, model, f))
        cols[model] = None if pred is None else denormalize_values(pred[:, 0], ds.norm)
    for k in range(max(start, 0), stop):
        t = ds.N + k + ds.w
        rows.append([t, float(raw.values[t])]
                    + ["" if cols[m] is None else float(cols[m][k]) for m in ("LSTM", "GRU", "Baseline")])
    path = Path(path)
    _write_csv(path, ["t", "actual", "lstm", "gru", "baseline"], rows)
    if svg_path is not None:
        write_svg(rows, Path(svg_path), title=f"{series}, {f}-step forecast")
    return path


def write_svg(rows: list, path: Path, title: str = "", width: int = 800, height: int = 300) -> None:
    colors = ("#000000", "#1f77b4", "#d62728", "#7f7f7f")
    labels = ("actual", "lstm", "gru", "baseline")
    pad = 40
    body = [f'<text x="{pad}" y="20" font-size="14">{title}</text>']
    vals = [v for r in rows for v in r[1:] if v != ""]
    if rows and vals:
        lo, hi = min(vals), max(vals)
        hi = hi if hi > lo else lo + 1.0
        n = len(rows)
        sx = (width - 2 * pad) / max(n - 1, 1)
        for j, (col, label) in enumerate(zip(colors, labels)):
            pts = [
                f"{pad + i * sx:.2f},{height - pad - (r[j + 1] - lo) / (hi - lo) * (height - 2 * pad):.2f}"
                for i, r in enumerate(rows) if r[j + 1] != ""
            ]
            if pts:
                body.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{" ".join(pts)}"/>')
                body.append(f'<text x="{width - pad - 60}" y="{30 + 14 * j}" font-size="12" fill="{col}">{label}</text>')
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        + "\n".join(body) + "\n</svg>\n"
    )


def result_from_run(run_dir, f: Optional[int] = None) -> ExperimentResult:
    """Rebuild predictions for a finished run from its config echo and checkpoints."""
    run_dir = Path(run_dir)
    echo = run_dir / "config.echo"
    if not echo.is_file():
        raise DataError(f"{run_dir} has no config.echo")
    config = build_config(file_values=parse_config_text(echo.read_text()))
    steps = (f,) if f is not None else config.steps
    config = dataclasses.replace(config, steps=steps)
    series = load_series(config)
    result = ExperimentResult(config, series)
    for step in steps:
        datasets = [prepare(s, config.window, step, config.test_samples, config.norm_train_only)
                    for s in series]
        result.datasets[step] = datasets
        models = {}
        for kind in KINDS:
            ckpt = run_dir / f"model_{kind.lower()}_f{step}.ckpt"
            if ckpt.is_file():
                models[kind] = load_model(ckpt)
        models["Baseline"] = Baseline(step)
        for ds in datasets:
            for name, model in models.items():
                result.predictions[(ds.name, name, step)] = predict_test(model, ds)
    return result
