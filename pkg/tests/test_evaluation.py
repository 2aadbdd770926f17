import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnnforecast.dataprep import NormRecord, Series, generate_activities, make_windows, prepare
from rnnforecast.errors import ConfigError, ShapeError
from rnnforecast.evaluation import (
    Baseline,
    ForecastReport,
    baseline_forecast,
    directional_accuracy,
    evaluate_model,
    exact_two_tailed_p,
    mann_whitney_two_tailed,
    rankdata,
    rmse,
)
from rnnforecast.numerics import make_rng
from rnnforecast.training import TrainConfig, init_model


def loop_rmse(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return math.sqrt(total / len(a))


def loop_da(a, p, anchor_a, anchor_p):
    hits = 0
    prev_a, prev_p = anchor_a, anchor_p
    for x, y in zip(a, p):
        if (x - prev_a) * (y - prev_p) >= 0:
            hits += 1
        prev_a, prev_p = x, y
    return hits / len(a)


def enumerate_two_tailed_p(n1, n2, u):
    """Share of all rank assignments whose U is at least as extreme as ``u``."""
    total = n1 * n2
    lo = min(u, total - u)
    base = n1 * (n1 + 1) // 2
    extreme = count = 0
    for combo in itertools.combinations(range(1, n1 + n2 + 1), n1):
        uu = sum(combo) - base
        count += 1
        if uu <= lo or uu >= total - lo:
            extreme += 1
    return min(1.0, extreme / count) if lo < total / 2 else 1.0


class TestRmse:
    def test_identical(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_offset(self):
        a = make_rng(0).normal(size=(4, 3))
        assert rmse(a, a + 2.0) == pytest.approx(2.0, abs=1e-12)

    def test_loop_oracle(self):
        rng = make_rng(1)
        for _ in range(100):
            a, b = rng.normal(size=25), rng.normal(size=25)
            assert rmse(a, b) == pytest.approx(loop_rmse(a, b), abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(ShapeError):
            rmse([1.0], [1.0, 2.0])

    @given(st.floats(-100, 100), st.floats(0.1, 10))
    def test_translation_and_scale(self, shift, scale):
        rng = make_rng(2)
        a, b = rng.normal(size=10), rng.normal(size=10)
        base = rmse(a, b)
        assert rmse(a + shift, b + shift) == pytest.approx(base, rel=1e-9, abs=1e-9)
        assert rmse(a * scale, b * scale) == pytest.approx(base * scale, rel=1e-9)


class TestDirectionalAccuracy:
    def test_perfect(self):
        a = make_rng(0).normal(size=20)
        assert directional_accuracy(a, a) == 1.0

    def test_opposite(self):
        up = np.arange(10.0)
        assert directional_accuracy(up, -up) == 0.0

    def test_hand_enumeration(self):
        assert directional_accuracy([1, 2, 1, 2], [2, 1, 2, 1], 1, 1) == 0.25

    def test_loop_oracle(self):
        rng = make_rng(3)
        for _ in range(100):
            a, p = rng.normal(size=15), rng.normal(size=15)
            aa, ap = rng.normal(), rng.normal()
            assert directional_accuracy(a, p, aa, ap) == pytest.approx(loop_da(a, p, aa, ap), abs=1e-12)

    def test_flat_counts_as_hit(self):
        assert directional_accuracy([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], 0.0, 0.0) == 1.0

    def test_errors(self):
        with pytest.raises(ShapeError):
            directional_accuracy([1.0, 2.0], [1.0])
        with pytest.raises(ShapeError):
            directional_accuracy([1.0], [1.0])
        with pytest.raises(ConfigError):
            directional_accuracy([1.0], [1.0], anchor_actual=0.0)

    @given(st.lists(st.integers(-50, 50), min_size=3, max_size=30), st.data())
    def test_affine_invariance(self, a, data):
        p = data.draw(st.lists(st.integers(-50, 50), min_size=len(a), max_size=len(a)))
        scale = data.draw(st.sampled_from([0.5, 2.0, 3.0, 10.0]))
        shift = data.draw(st.sampled_from([-7.0, 0.0, 4.0]))
        a, p = np.array(a, float), np.array(p, float)
        assert directional_accuracy(a, p) == directional_accuracy(a * scale + shift, p * scale + shift)


class TestBaseline:
    def test_one_step(self):
        assert baseline_forecast([0.1, 0.3, 0.7], 1).tolist() == [0.7]

    def test_twenty_steps(self):
        assert baseline_forecast([0.2, 0.5], 20).tolist() == [0.5] * 20

    def test_zero_order_hold_rmse(self):
        x = make_rng(4).normal(size=80)
        ds = make_windows(Series("s", x), 5, 3, 20)
        pred = Baseline(3).predict(ds.X_test)
        errs = []
        for k in range(ds.N, ds.rows):
            last = x[k + 4]
            errs.extend(x[k + 5 + j] - last for j in range(3))
        assert evaluate_model(Baseline(), ds, pred).rmse == pytest.approx(
            math.sqrt(np.mean(np.square(errs))), abs=1e-12)

    def test_constant_series(self):
        ds = make_windows(Series("s", np.full(50, 0.4)), 5, 1, 10)
        rep = evaluate_model(Baseline(), ds)
        assert rep.rmse == 0.0 and rep.da == 1.0


class TestEvaluateModel:
    def test_baseline_da_on_periodic_pattern(self):
        (s,) = generate_activities(1, 400, slope=1e-4, noise_sd=0.0, scale_range=(1.0, 1.0))
        ds = prepare(s, 21, 1, 70)
        rep = evaluate_model(Baseline(), ds)
        # one-step persistence moves like the previous step; it misses right after
        # each of the two weekly level changes (phases 5 and 6); the first scored
        # step is measured from the anchor and always counts
        targets = range(ds.N + ds.w, ds.N + ds.w + ds.test_rows)
        hits = [1] + [0 if t % 7 in (5, 6) else 1 for t in list(targets)[1:]]
        assert rep.da == pytest.approx(sum(hits) / len(hits), abs=1e-12)

    def test_mismatch(self):
        ds = make_windows(Series("s", np.linspace(0, 1, 80)), 6, 1, 10)
        model = init_model("GRU", 5, 1, TrainConfig(units=2))
        with pytest.raises(ConfigError):
            evaluate_model(model, ds)

    def test_repeatable(self):
        ds = make_windows(Series("s", np.sin(np.arange(80.0))), 6, 2, 10)
        model = init_model("LSTM", 6, 2, TrainConfig(units=3))
        assert evaluate_model(model, ds) == evaluate_model(model, ds)

    def test_denormalized_rmse(self):
        ds = prepare(Series("s", np.sin(np.arange(100.0)) * 5 + 20), 6, 1, 10)
        rep = evaluate_model(Baseline(), ds)
        assert rep.rmse_denorm == pytest.approx(rep.rmse * ds.norm.span)

    def test_report_invariants(self):
        with pytest.raises(ConfigError):
            ForecastReport("s", "LSTM", 1, -0.1, 0.5)
        with pytest.raises(ConfigError):
            ForecastReport("s", "LSTM", 1, 0.1, 1.5)


class TestMannWhitney:
    def test_complete_separation_three_each(self):
        r = mann_whitney_two_tailed([1, 2, 3], [4, 5, 6])
        assert r.u_a == 0 and r.u_statistic == 0
        assert r.p_two_tailed == 0.1
        assert r.method == "exact"
        assert enumerate_two_tailed_p(3, 3, 0) == pytest.approx(0.1, abs=1e-15)

    def test_u19_ten_each(self):
        a = [1, 2, 3, 4, 5, 6, 7, 8, 18, 20]
        b = [v for v in range(1, 21) if v not in a]
        r = mann_whitney_two_tailed(a, b)
        assert r.u_a == 19
        oracle = enumerate_two_tailed_p(10, 10, 19)
        assert r.p_two_tailed == pytest.approx(oracle, abs=1e-12)
        assert r.p_two_tailed < 0.05

    def test_matches_scipy_exact(self):
        stats = pytest.importorskip("scipy.stats")
        rng = make_rng(5)
        for _ in range(20):
            a, b = rng.normal(size=7), rng.normal(0.5, size=9)
            ours = mann_whitney_two_tailed(a, b)
            ref = stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
            assert ours.u_a == ref.statistic
            assert ours.p_two_tailed == pytest.approx(ref.pvalue, abs=1e-12)

    def test_identical_samples(self):
        a = [0.3, 0.1, 0.7, 0.2]
        r = mann_whitney_two_tailed(a, list(a))
        assert r.p_two_tailed > 0.9
        assert r.method == "normal-approximation"

    def test_normal_matches_scipy_with_ties(self):
        stats = pytest.importorskip("scipy.stats")
        a, b = [1, 2, 2, 3, 5, 5, 8], [2, 4, 5, 6, 6, 9, 9, 10]
        ref = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
        assert mann_whitney_two_tailed(a, b).p_two_tailed == pytest.approx(ref.pvalue, abs=1e-12)

    def test_exact_and_normal_agree(self):
        rng = make_rng(6)
        for _ in range(20):
            a, b = rng.normal(size=10), rng.normal(rng.uniform(0, 1.5), size=10)
            e = mann_whitney_two_tailed(a, b, method="exact").p_two_tailed
            n = mann_whitney_two_tailed(a, b, method="normal").p_two_tailed
            assert abs(e - n) < 0.02

    @settings(max_examples=50)
    @given(st.lists(st.integers(0, 30), min_size=1, max_size=12),
           st.lists(st.integers(0, 30), min_size=1, max_size=12))
    def test_u_sum_and_swap(self, a, b):
        r = mann_whitney_two_tailed(a, b)
        s = mann_whitney_two_tailed(b, a)
        assert r.u_a + r.u_b == len(a) * len(b)
        assert (s.u_a, s.u_b) == (r.u_b, r.u_a)
        assert s.p_two_tailed == pytest.approx(r.p_two_tailed, abs=1e-15)
        assert 0 <= r.u_statistic <= len(a) * len(b)
        assert 0.0 <= r.p_two_tailed <= 1.0

    def test_empty(self):
        with pytest.raises(ConfigError):
            mann_whitney_two_tailed([], [1.0])

    def test_exact_rejects_ties(self):
        with pytest.raises(ConfigError):
            mann_whitney_two_tailed([1, 1], [2, 3], method="exact")

    def test_midranks(self):
        np.testing.assert_array_equal(rankdata([3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0])

    def test_exact_tail_is_symmetric(self):
        assert exact_two_tailed_p(19, 10, 10) == exact_two_tailed_p(81, 10, 10)
