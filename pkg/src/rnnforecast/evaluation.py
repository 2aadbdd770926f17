"""Forecast metrics, the persistence baseline and the Mann-Whitney U test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, ShapeError

EXACT_MAX_TOTAL = 25


def rmse(actual, predicted) -> float:
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape:
        raise ShapeError(f"shape mismatch: actual {actual.shape} vs predicted {predicted.shape}")
    if actual.size == 0:
        raise ShapeError("rmse of empty arrays")
    return float(np.sqrt(np.mean((actual - predicted) ** 2)))


def directional_accuracy(
    actual,
    predicted,
    anchor_actual: Optional[float] = None,
    anchor_predicted: Optional[float] = None,
) -> float:
    """Fraction of steps where actual and predicted moves agree in sign.

    A step counts when ``(a_t - a_{t-1}) * (p_t - p_{t-1}) >= 0``, so a flat
    move on either side is a hit. With anchors, step 1 is measured from the
    anchors and all ``n`` steps are scored; without them the first elements
    act as anchors and ``n - 1`` steps are scored. Returns a value in [0, 1].
    """
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.shape != p.shape:
        raise ShapeError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if (anchor_actual is None) != (anchor_predicted is None):
        raise ConfigError("give both anchors or neither")
    if anchor_actual is not None:
        a = np.concatenate([[anchor_actual], a])
        p = np.concatenate([[anchor_predicted], p])
    if a.size < 2:
        raise ShapeError("directional accuracy needs at least one scored step")
    hits = np.diff(a) * np.diff(p) >= 0
    return float(np.mean(hits))


def baseline_forecast(window, f: int) -> np.ndarray:
    """Repeat the last value of ``window`` ``f`` times."""
    window = np.asarray(window, dtype=np.float64).reshape(-1)
    if window.size < 1:
        raise ShapeError("baseline needs a non-empty window")
    return np.full(f, window[-1])


class Baseline:
    """Persistence forecaster with the same ``predict`` surface as a trained model."""

    kind = "Baseline"

    def __init__(self, steps: Optional[int] = None):
        self.steps = steps

    def predict(self, X: np.ndarray, steps: Optional[int] = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        f = steps if steps is not None else self.steps
        if f is None or f < 1:
            raise ConfigError("baseline needs a forecast horizon")
        if X.ndim != 2 or X.shape[1] < 1:
            raise ShapeError(f"expected windows of shape (batch, w), got {X.shape}")
        return np.repeat(X[:, -1:], f, axis=1)


@dataclass
class ForecastReport:
    series: str
    model: str
    f: int
    rmse: float
    da: float
    rmse_denorm: Optional[float] = None

    def __post_init__(self):
        if not self.rmse >= 0:
            raise ConfigError(f"rmse must be >= 0, got {self.rmse}")
        if not 0.0 <= self.da <= 1.0:
            raise ConfigError(f"da must lie in [0, 1], got {self.da}")


def predict_test(model, dataset) -> np.ndarray:
    """Predictions for every test row of ``dataset``, shape (test_rows, f)."""
    if dataset.test_rows < 1:
        raise ConfigError(f"dataset {dataset.name!r} has no test rows")
    if isinstance(model, Baseline):
        return model.predict(dataset.X_test, dataset.f)
    if model.window != dataset.w or model.steps != dataset.f:
        raise ConfigError(
            f"model expects w={model.window}, f={model.steps} but dataset "
            f"{dataset.name!r} has w={dataset.w}, f={dataset.f}"
        )
    return model.predict(dataset.X_test)


def horizon_da(dataset, predictions: np.ndarray) -> float:
    """Directional accuracy averaged over forecast steps.

    For each step ``j`` the ``j``-step-ahead actuals and predictions across
    consecutive test rows form a sequence; each sequence is scored with both
    anchors set to the actual value immediately before its first element.
    For ``f == 1`` this is the DA of the one-step forecast trajectory.
    """
    actual = dataset.Y_test
    anchor_row = dataset.Y[dataset.N - 1]
    scores = [
        directional_accuracy(actual[:, j], predictions[:, j], anchor_row[j], anchor_row[j])
        for j in range(dataset.f)
    ]
    return float(np.mean(scores))


def evaluate_model(model, dataset, predictions: Optional[np.ndarray] = None) -> ForecastReport:
    """RMSE over all (test row, step) pairs and horizon-averaged DA."""
    if predictions is None:
        predictions = predict_test(model, dataset)
    err = rmse(dataset.Y_test, predictions)
    return ForecastReport(
        series=dataset.name,
        model=model.kind,
        f=dataset.f,
        rmse=err,
        da=horizon_da(dataset, predictions),
        rmse_denorm=err * dataset.norm.span,
    )


@dataclass
class MannWhitneyResult:
    u_statistic: float
    p_two_tailed: float
    n1: int
    n2: int
    method: str
    u_a: float = 0.0
    u_b: float = 0.0
    meta: dict = field(default_factory=dict)


def rankdata(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties given the mean of the ranks they span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def u_null_counts(n1: int, n2: int) -> tuple[int, ...]:
    """Number of sample arrangements giving each U value 0..n1*n2 under H0.

    Uses the recurrence c(m, n, u) = c(m-1, n, u-n) + c(m, n-1, u), where the
    first term places the largest observation in sample one.
    """
    if n1 == 0 or n2 == 0:
        return (1,)
    prev_m = u_null_counts(n1 - 1, n2)
    prev_n = u_null_counts(n1, n2 - 1)
    counts = [0] * (n1 * n2 + 1)
    for u, c in enumerate(prev_n):
        counts[u] += c
    for u, c in enumerate(prev_m):
        counts[u + n2] += c
    return tuple(counts)


def exact_two_tailed_p(u: float, n1: int, n2: int) -> float:
    counts = u_null_counts(n1, n2)
    total = math.comb(n1 + n2, n1)
    lo = min(u, n1 * n2 - u)
    tail = sum(counts[: int(math.floor(lo)) + 1])
    return min(1.0, 2.0 * tail / total)


def mann_whitney_two_tailed(sample_a: Sequence[float], sample_b: Sequence[float],
                            method: str = "auto") -> MannWhitneyResult:
    """Two-tailed Mann-Whitney U test.

    ``u_a`` counts pairs where the ``sample_a`` value is larger (ties count
    one half); ``u_statistic`` is ``min(u_a, u_b)``. With ``method="auto"``
    the p-value is exact when there are no ties and ``n1 + n2 <= 25``, and
    otherwise a tie- and continuity-corrected normal approximation.
    """
    a = np.asarray(sample_a, dtype=np.float64).reshape(-1)
    b = np.asarray(sample_b, dtype=np.float64).reshape(-1)
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise ConfigError("Mann-Whitney needs two non-empty samples")
    if method not in ("auto", "exact", "normal"):
        raise ConfigError(f"unknown method {method!r}")
    ranks = rankdata(np.concatenate([a, b]))
    u_a = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    u_b = n1 * n2 - u_a
    _, tie_sizes = np.unique(ranks, return_counts=True)
    has_ties = bool(np.any(tie_sizes > 1))
    if method == "auto":
        method = "exact" if (not has_ties and n1 + n2 <= EXACT_MAX_TOTAL) else "normal"
    if method == "exact":
        if has_ties:
            raise ConfigError("exact p-values are only defined without ties")
        p = exact_two_tailed_p(u_a, n1, n2)
        label = "exact"
    else:
        n = n1 + n2
        tie_term = float(np.sum(tie_sizes.astype(np.float64) ** 3 - tie_sizes))
        var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
        if var <= 0:
            p = 1.0
        else:
            z = max(0.0, abs(u_a - n1 * n2 / 2.0) - 0.5) / math.sqrt(var)
            p = min(1.0, math.erfc(z / math.sqrt(2.0)))
        label = "normal-approximation"
    return MannWhitneyResult(
        u_statistic=min(u_a, u_b), p_two_tailed=p, n1=n1, n2=n2, method=label,
        u_a=u_a, u_b=u_b, meta={"ties": has_ties},
    )
