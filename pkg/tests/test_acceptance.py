"""Exit criteria. Each test carries a ``criterion`` marker; the pass/fail
line per criterion is printed in the terminal summary.

The desk-scale experiments (criteria 4, 5, 7) train real networks and take
a few minutes in total.
"""

import time

import numpy as np
import pytest

from rnnforecast.cells import CellState, GruParams, LstmParams, gru_step, lstm_step
from rnnforecast.dataprep import Series, denormalize, make_windows, normalize
from rnnforecast.errors import DegenerateSeriesError
from rnnforecast.evaluation import directional_accuracy, mann_whitney_two_tailed, rmse
from rnnforecast.experiment import build_config, run_experiment
from rnnforecast.numerics import finite_difference_grad, make_rng
from rnnforecast.training import TrainConfig, bptt_gradients, init_model

from test_cells import scalar_gru, scalar_lstm
from test_evaluation import enumerate_two_tailed_p, loop_da, loop_rmse

SEED = 2022


def _warm_kernels():
    for kind in ("LSTM", "GRU"):
        m = init_model(kind, 3, 1, TrainConfig(units=2))
        bptt_gradients(m, np.zeros((1, 3)), np.zeros((1, 1)))


@pytest.fixture(scope="module")
def quick_activities(tmp_path_factory):
    cfg = build_config("quick", overrides={"dataset": "activities", "seed": SEED})
    runs = []
    for name in ("run_a", "run_b"):
        out = tmp_path_factory.mktemp(name)
        start = time.perf_counter()
        result = run_experiment(cfg, out)
        runs.append((result, out, time.perf_counter() - start))
    return runs


@pytest.fixture(scope="module")
def quick_randomwalk(tmp_path_factory):
    cfg = build_config("quick", overrides={"dataset": "randomwalk", "steps": (1,), "seed": SEED})
    start = time.perf_counter()
    result = run_experiment(cfg, tmp_path_factory.mktemp("rw"))
    return result, time.perf_counter() - start


@pytest.mark.criterion(1, "BPTT matches central finite differences (rel err < 1e-4, < 10 s)")
def test_gradient_correctness():
    _warm_kernels()
    rng = make_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for kind in ("LSTM", "GRU"):
        for f in (1, 3):
            for draw in range(20):
                model = init_model(kind, 3, f, TrainConfig(units=2, seed=int(rng.integers(2**31))))
                X, Y = rng.uniform(size=(1, 3)), rng.uniform(size=(1, f))
                _, grads = bptt_gradients(model, X, Y)
                loss = lambda _: bptt_gradients(model, X, Y)[0]
                for name, p in model.parameters().items():
                    fd = finite_difference_grad(loss, p, 1e-5)
                    g = grads[name]
                    rel = np.abs(fd - g) / np.maximum(np.abs(fd) + np.abs(g), 1e-7)
                    worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    print(f"max relative error {worst:.3g} in {elapsed:.2f}s")
    assert worst < 1e-4
    assert elapsed < 10.0


@pytest.mark.criterion(2, "lstm_step / gru_step match scalar equations within 1e-12 (100 draws, < 1 s)")
def test_cell_equation_fidelity():
    _warm_kernels()
    rng = make_rng(SEED + 1)
    start = time.perf_counter()
    for _ in range(100):
        lp = LstmParams.init(2, rng)
        prev = CellState(rng.normal(size=2), rng.normal(size=2))
        x = rng.normal()
        state, _ = lstm_step(lp, [x], prev)
        h, c = scalar_lstm(lp, x, prev.h, prev.c)
        np.testing.assert_allclose(state.h, h, rtol=0, atol=1e-12)
        np.testing.assert_allclose(state.c, c, rtol=0, atol=1e-12)
        gp = GruParams.init(2, rng)
        gprev = CellState(rng.normal(size=2))
        gstate, _ = gru_step(gp, [x], gprev)
        np.testing.assert_allclose(gstate.h, scalar_gru(gp, x, gprev.h), rtol=0, atol=1e-12)
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(3, "windowing arithmetic for Q=3032, w=60, test_s=251, f in {1, 20}")
def test_windowing_arithmetic():
    s = Series("s", np.linspace(0.0, 1.0, 3032))
    one = make_windows(s, 60, 1, 251)
    assert (one.rows, one.N, one.test_rows) == (2972, 2721, 251)
    twenty = make_windows(s, 60, 20, 251)
    assert (twenty.rows, twenty.N, twenty.test_rows) == (2953, 2721, 232)


@pytest.mark.criterion(4, "Activities quick profile f=1: both networks beat baseline (RMSE p < 0.05, DA higher)")
def test_activities_significance(quick_activities):
    result, _, elapsed = quick_activities[0]
    means = {m: round(float(np.mean(result.values(m, 1, "rmse"))), 4) for m in ("LSTM", "GRU", "Baseline")}
    das = {m: round(float(np.mean(result.values(m, 1, "da"))), 4) for m in ("LSTM", "GRU", "Baseline")}
    print(f"rmse means {means}, da means {das}, {elapsed:.0f}s per run")
    for net in ("LSTM", "GRU"):
        assert result.comparison(1, "rmse", net, "Baseline").p_two_tailed < 0.05
        assert means[net] < means["Baseline"]
        assert das[net] > das["Baseline"]
    assert elapsed < 600


@pytest.mark.criterion(5, "random-walk quick profile f=1: no pairwise RMSE difference (all p > 0.05)")
def test_random_walk_null(quick_randomwalk):
    result, elapsed = quick_randomwalk
    ps = {}
    for a, b in (("LSTM", "Baseline"), ("GRU", "Baseline"), ("LSTM", "GRU")):
        ps[f"{a}-vs-{b}"] = result.comparison(1, "rmse", a, b).p_two_tailed
    means = {m: round(float(np.mean(result.values(m, 1, "rmse"))), 4) for m in ("LSTM", "GRU", "Baseline")}
    print(f"p-values { {k: f'{v:.3g}' for k, v in ps.items()} }, rmse means {means}, {elapsed:.0f}s")
    assert elapsed < 600
    for name, p in ps.items():
        assert p > 0.05, f"{name}: p = {p:.3g}"


@pytest.mark.criterion(6, "Mann-Whitney: U=19 (10 vs 10) gives p < 0.05; 3 vs 3 separation gives p = 0.1")
def test_mann_whitney_exactness():
    start = time.perf_counter()
    a = [1, 2, 3, 4, 5, 6, 7, 8, 18, 20]
    b = [v for v in range(1, 21) if v not in a]
    r = mann_whitney_two_tailed(a, b)
    assert r.u_a == 19 and r.method == "exact"
    assert r.p_two_tailed < 0.05
    sep = mann_whitney_two_tailed([1, 2, 3], [4, 5, 6])
    assert sep.p_two_tailed == 0.1
    assert time.perf_counter() - start < 1.0
    # independent check by enumeration, outside the timed section
    assert r.p_two_tailed == pytest.approx(enumerate_two_tailed_p(10, 10, 19), abs=1e-12)


@pytest.mark.criterion(7, "two seeded quick-profile runs give byte-identical reports.csv and stats.csv")
def test_determinism(quick_activities):
    (_, out_a, _), (_, out_b, _) = quick_activities
    for name in ("reports.csv", "stats.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


@pytest.mark.criterion(8, "RMSE and DA match loop oracles within 1e-12; hand-enumerated DA = 0.25")
def test_metric_oracles():
    rng = make_rng(SEED + 8)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        a, p = rng.normal(size=n), rng.normal(size=n)
        assert abs(rmse(a, p) - loop_rmse(a, p)) <= 1e-12
        aa, ap = rng.normal(), rng.normal()
        assert abs(directional_accuracy(a, p, aa, ap) - loop_da(a, p, aa, ap)) <= 1e-12
    assert directional_accuracy([1, 2, 1, 2], [2, 1, 2, 1], 1, 1) == 0.25


@pytest.mark.criterion(9, "normalize round-trip within 1e-12 on 100 series; constant series raises")
def test_normalization_round_trip():
    rng = make_rng(SEED + 9)
    for _ in range(100):
        v = rng.normal(rng.uniform(-100, 100), rng.uniform(0.1, 50), size=int(rng.integers(2, 500)))
        s = Series("s", v)
        normed, rec = normalize(s)
        np.testing.assert_allclose(denormalize(normed, rec).values, v, rtol=0, atol=1e-12)
    with pytest.raises(DegenerateSeriesError):
        normalize(Series("flat", np.full(10, 3.5)))
