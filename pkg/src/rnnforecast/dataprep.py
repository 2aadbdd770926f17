"""Series loading, min-max normalization, windowing and synthetic datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DataError, DegenerateSeriesError
from .numerics import make_rng

MISSING_TOKENS = frozenset({"", "null", "na", "n/a", "nan", "none", "-"})


@dataclass
class Series:
    name: str
    values: np.ndarray
    dates: Optional[list[str]] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"series {self.name!r} contains non-finite values")
        if self.dates is not None and len(self.dates) != len(self.values):
            raise DataError(f"series {self.name!r} has {len(self.dates)} dates for {len(self.values)} values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NormRecord:
    v_min: float
    v_max: float

    def __post_init__(self):
        if not self.v_max >= self.v_min:
            raise ConfigError(f"v_max {self.v_max} is below v_min {self.v_min}")

    @property
    def span(self) -> float:
        return self.v_max - self.v_min


@dataclass
class WindowedDataset:
    """Window matrix ``X`` (rows, w) and targets ``Y`` (rows, f).

    Row ``k`` (0-indexed) holds ``x[k:k+w]`` and ``x[k+w:k+w+f]``; the first
    ``N`` rows train, the rest test.
    """

    X: np.ndarray
    Y: np.ndarray
    N: int
    w: int
    f: int
    norm: NormRecord
    name: str = ""
    series: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    @property
    def test_rows(self) -> int:
        return self.rows - self.N

    @property
    def X_train(self) -> np.ndarray:
        return self.X[: self.N]

    @property
    def Y_train(self) -> np.ndarray:
        return self.Y[: self.N]

    @property
    def X_test(self) -> np.ndarray:
        return self.X[self.N:]

    @property
    def Y_test(self) -> np.ndarray:
        return self.Y[self.N:]


def normalize(series: Series, fit_length: Optional[int] = None):
    """Min-max scale to [0, 1].

    The bounds come from the whole series unless ``fit_length`` restricts them
    to the leading ``fit_length`` values (values after that may leave [0, 1]).
    Returns ``(normalized_series, record)``.
    """
    v = series.values
    if v.size == 0:
        raise DataError(f"series {series.name!r} is empty")
    ref = v if fit_length is None else v[:fit_length]
    if ref.size == 0:
        raise ConfigError("fit_length selects no values")
    lo, hi = float(ref.min()), float(ref.max())
    if hi == lo:
        raise DegenerateSeriesError(f"series {series.name!r} is constant ({lo}); cannot normalize")
    return replace(series, values=(v - lo) / (hi - lo)), NormRecord(lo, hi)


def denormalize(series: Series, record: NormRecord) -> Series:
    return replace(series, values=denormalize_values(series.values, record))


def denormalize_values(x, record: NormRecord) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) * record.span + record.v_min


def check_window_config(q: int, w: int, f: int, test_s: int) -> int:
    """Validate ``f < w < N < Q`` and return ``N = Q - test_s - w``."""
    n = q - test_s - w
    if test_s < 1:
        raise ConfigError(f"test_s must be >= 1, got {test_s}")
    if not f >= 1:
        raise ConfigError(f"f must be >= 1, got {f}")
    if not f < w:
        raise ConfigError(f"need f < w, got f={f}, w={w}")
    if not w < n:
        raise ConfigError(f"need w < N, got w={w}, N={n} (Q={q}, test_s={test_s})")
    if not n < q:
        raise ConfigError(f"need N < Q, got N={n}, Q={q}")
    return n


def make_windows(
    series: Series, w: int, f: int, test_s: int, norm: Optional[NormRecord] = None
) -> WindowedDataset:
    """Slice an (already normalized) series into windows and targets."""
    x = series.values
    q = x.size
    n = check_window_config(q, w, f, test_s)
    rows = q - (w - 1 + f)
    X = sliding_window_view(x[: q - f], w).copy()
    Y = sliding_window_view(x[w:], f).copy()
    assert X.shape == (rows, w) and Y.shape == (rows, f)
    return WindowedDataset(
        X, Y, n, w, f, norm if norm is not None else NormRecord(0.0, 1.0), series.name, x
    )


def prepare(
    series: Series, w: int, f: int, test_s: int, train_only_norm: bool = False
) -> WindowedDataset:
    """Normalize and window in one go."""
    fit = len(series) - test_s if train_only_norm else None
    normed, rec = normalize(series, fit_length=fit)
    return make_windows(normed, w, f, test_s, rec)


def truncate_tail(series: Series, keep: int) -> Series:
    if keep < 0 or keep > len(series):
        raise ConfigError(f"cannot keep {keep} of {len(series)} values")
    start = len(series) - keep
    dates = series.dates[start:] if series.dates is not None else None
    return replace(series, values=series.values[start:].copy(), dates=dates)


def load_csv(path, column: str = "Close", date_column: str = "Date") -> Series:
    """Read one price column from a comma-separated file with a header row.

    Rows whose value is empty or a missing-value token (``null``, ``NA``, ...)
    are skipped.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    values, dates = [], []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        for needed in (date_column, column):
            if needed not in header:
                raise DataError(f"{path}: missing column {needed!r} (header: {header})")
        ci, di = header.index(column), header.index(date_column)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            raw = row[ci].strip() if ci < len(row) else ""
            if raw.lower() in MISSING_TOKENS:
                continue
            try:
                val = float(raw)
            except ValueError:
                raise DataError(f"{path}, row {lineno}: cannot parse {raw!r} in column {column!r}") from None
            if not np.isfinite(val):
                continue
            values.append(val)
            dates.append(row[di].strip() if di < len(row) else "")
    if not values:
        raise DataError(f"{path}: no usable values in column {column!r}")
    return Series(path.stem, np.array(values), dates)


def load_csv_dir(directory, column: str = "Close", keep: Optional[int] = None) -> list[Series]:
    """Every ``*.csv`` in ``directory`` in filename order, optionally tail-truncated."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        raise DataError(f"no CSV files in {directory}")
    out = [load_csv(p, column) for p in paths]
    if keep is not None:
        out = [truncate_tail(s, keep) for s in out]
    return out


def write_wide_csv(series: Sequence[Series], path) -> None:
    """Write ``t,series_1,...`` with one row per timestep at round-trip precision."""
    length = len(series[0])
    if any(len(s) != length for s in series):
        raise DataError("all series must share a length to be written side by side")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *[s.name for s in series]])
        for t in range(length):
            w.writerow([t, *[repr(float(s.values[t])) for s in series]])


def read_wide_csv(path) -> list[Series]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: needs a header and at least one row")
    header = rows[0]
    if header[0] != "t":
        raise DataError(f"{path}: first column must be 't'")
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return [Series(name, data[:, j].copy()) for j, name in enumerate(header[1:])]


def activities_base(length: int, slope: float = 1e-4) -> np.ndarray:
    """Five ones, two zeros, repeated, plus a linear trend ``slope * t``."""
    t = np.arange(length)
    pattern = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    return pattern[t % 7] + slope * t


def generate_activities(
    n_series: int = 10,
    length: int = 3584,
    slope: float = 1e-4,
    seed: int = 0,
    noise_sd: float = 0.05,
    scale_range: tuple[float, float] = (0.5, 10.0),
    rotation_step: int = 1,
    noise_after_scale: bool = False,
) -> list[Series]:
    """Synthetic weekly-activity series.

    Series ``i`` is the base pattern rolled by ``i * rotation_step`` samples,
    plus Gaussian noise, times a scale drawn from ``scale_range``. With
    ``noise_after_scale`` the noise is added after scaling instead.
    """
    if n_series < 1:
        raise ConfigError(f"n_series must be >= 1, got {n_series}")
    if length < 7:
        raise ConfigError(f"length must be >= 7, got {length}")
    lo, hi = scale_range
    if not 0 < lo <= hi:
        raise ConfigError(f"invalid scale_range {scale_range}")
    rng = make_rng(seed)
    base = activities_base(length, slope)
    out = []
    for i in range(n_series):
        b = np.roll(base, i * rotation_step)
        noise = rng.normal(0.0, noise_sd, size=length) if noise_sd > 0 else np.zeros(length)
        scale = rng.uniform(lo, hi) if hi > lo else lo
        v = b * scale + noise if noise_after_scale else (b + noise) * scale
        out.append(Series(f"series_{i + 1}", v))
    return out


def generate_random_walks(
    n_series: int = 10,
    length: int = 700,
    seed: int = 0,
    start: float = 100.0,
    step_sd: float = 1.0,
) -> list[Series]:
    """Gaussian random walks, a stand-in for closing-price series."""
    if n_series < 1 or length < 2:
        raise ConfigError("need n_series >= 1 and length >= 2")
    rng = make_rng(seed)
    return [
        Series(f"walk_{i + 1}", start + np.cumsum(rng.normal(0.0, step_sd, size=length)))
        for i in range(n_series)
    ]
