import math

import numpy as np
import pytest
from scipy import stats

from mtpp import (
    ConstantBase,
    DivergenceError,
    EventSequence,
    ExpDecayKernel,
    GammaBase,
    HawkesModel,
    OrderingError,
    SimConfig,
    SinusoidalBase,
    StarvationError,
    ValidationError,
    ZeroKernel,
    forecast,
    predict_next,
    simulate,
)
from mtpp.datagen import PRIOR_LIBRARY, sample_model
from mtpp.rng import Stream
from mtpp.simulate import _ExpCursor, _HistoryCursor

from conftest import exp_hawkes_1d, poisson_model, sequence


class TestStopRules:
    def test_config_requires_exactly_one_rule(self):
        with pytest.raises(ValidationError):
            SimConfig()
        with pytest.raises(ValidationError):
            SimConfig(event_count=5, horizon=1.0)
        with pytest.raises(ValidationError):
            SimConfig(event_count=0)

    def test_horizon_rule_bounds_times(self, poisson_half):
        seq = simulate(poisson_half, SimConfig(horizon=100.0, seed=1))
        assert seq.horizon == 100.0
        assert seq.times.max() <= 100.0

    def test_count_rule_emits_exactly(self, poisson_half):
        seq = simulate(poisson_half, SimConfig(event_count=64, seed=2))
        assert len(seq) == 64
        assert seq.horizon == seq.times[-1]

    def test_history_extension_preserves_prefix(self):
        model = exp_hawkes_1d(0.3, 0.2, 1.0)
        hist = sequence([0.5, 2.0], horizon=2.0)
        out = simulate(model, SimConfig(event_count=10, seed=3), hist)
        np.testing.assert_array_equal(out.times[:2], hist.times)
        assert len(out) == 12
        assert (np.diff(out.times) > 0).all()

    def test_history_beyond_horizon_rejected(self, poisson_half):
        hist = sequence([5.0], horizon=5.0)
        with pytest.raises(OrderingError):
            simulate(poisson_half, SimConfig(horizon=2.0, seed=0), hist)


class TestDeterminism:
    def test_bitwise_reproducible(self):
        model = exp_hawkes_1d(0.2, 0.4, 0.8)
        a = simulate(model, SimConfig(event_count=500, seed=99))
        b = simulate(model, SimConfig(event_count=500, seed=99))
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.marks, b.marks)

    def test_seed_changes_output(self):
        model = exp_hawkes_1d(0.2, 0.4, 0.8)
        a = simulate(model, SimConfig(event_count=50, seed=1))
        b = simulate(model, SimConfig(event_count=50, seed=2))
        assert not np.array_equal(a.times, b.times)


class TestPoissonLaw:
    def test_rate_and_gap_distribution(self):
        rate, horizon = 0.5, 5000.0
        seq = simulate(poisson_model(rate), SimConfig(horizon=horizon, seed=42))
        n = len(seq)
        se = math.sqrt(rate * horizon)
        assert abs(n - rate * horizon) <= 3 * se
        gaps = np.diff(seq.times, prepend=0.0)
        assert stats.kstest(gaps, "expon", args=(0, 1 / rate)).pvalue > 0.01

    def test_two_mark_selection_law(self):
        r0, r1 = 0.3, 0.9
        seq = simulate(poisson_model(r0, r1), SimConfig(horizon=5000.0, seed=5))
        n = len(seq)
        frac0 = float((seq.marks == 0).mean())
        p = r0 / (r0 + r1)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(frac0 - p) <= 3 * se


class TestHawkesLaw:
    def test_stationary_rate_smoke(self):
        # branching-process oracle: long-run rate c0 / (1 - alpha/beta)
        model = exp_hawkes_1d(0.2, 0.4, 0.8)
        seq = simulate(model, SimConfig(event_count=100_000, seed=11))
        rate = len(seq) / seq.times[-1]
        assert rate == pytest.approx(0.4, rel=0.03)


class TestTimeVaryingBases:
    def test_sinusoidal_event_count_matches_quadrature(self):
        # clamped sinusoid: expected count = integral of max(0, A sin(wt) + c0)
        base = SinusoidalBase(amplitude=2.0, omega=2.0, phase=0.0, c0=1.0)
        model = HawkesModel(1, [base], [[ZeroKernel()]], [[0]])
        horizon = 3000.0
        grid = np.linspace(0.0, horizon, 600_001)
        expected = float(np.trapezoid(base.value(grid), grid))
        seq = simulate(model, SimConfig(horizon=horizon, seed=21))
        assert abs(len(seq) - expected) <= 3 * math.sqrt(expected)

    def test_gamma_event_count_matches_quadrature(self):
        base = GammaBase(amplitude=30.0, power=1.5, decay=2.0, c0=0.3)
        model = HawkesModel(1, [base], [[ZeroKernel()]], [[0]])
        horizon = 400.0
        grid = np.linspace(0.0, horizon, 400_001)
        expected = float(np.trapezoid(base.value(grid), grid))
        seq = simulate(model, SimConfig(horizon=horizon, seed=22))
        assert abs(len(seq) - expected) <= 3 * math.sqrt(expected)


class TestFailureModes:
    def test_starvation_on_zero_intensity(self):
        # inhibitory-only model, zero base: intensity identically zero
        model = exp_hawkes_1d(0.0, 0.5, 1.0, z=-1)
        hist = sequence([1.0], horizon=1.0)
        cfg = SimConfig(event_count=3, seed=0, max_idle_windows=200)
        with pytest.raises(StarvationError):
            simulate(model, cfg, hist)

    def test_divergence_on_hopeless_rejection(self):
        # bound stays at the base rate while inhibition pins the intensity at 0
        model = exp_hawkes_1d(0.5, 1000.0, 1e-6, z=-1)
        hist = sequence([1.0], horizon=1.0)
        cfg = SimConfig(event_count=1, seed=0, max_rejections=300)
        with pytest.raises(DivergenceError):
            simulate(model, cfg, hist)


class TestPriorModelInvariants:
    @pytest.mark.parametrize("family", sorted(PRIOR_LIBRARY))
    def test_sequences_are_valid(self, family):
        idx = sorted(PRIOR_LIBRARY).index(family)
        stream = Stream(900 + idx)
        for rep, K in enumerate((1, 3, 5)):
            model = sample_model(PRIOR_LIBRARY[family], K, stream.spawn(rep))
            try:
                seq = simulate(model, SimConfig(event_count=100, seed=idx * 10 + rep))
            except DivergenceError:
                continue  # supercritical draw; datagen resamples these
            assert len(seq) == 100
            assert (np.diff(seq.times) > 0).all()
            assert seq.marks.min() >= 0 and seq.marks.max() < K


class TestCursorConsistency:
    def test_exp_and_generic_cursors_agree(self):
        model = sample_model(PRIOR_LIBRARY["const-exp"], 3, Stream(13))
        times = np.array([0.2, 0.5, 1.1, 1.7])
        marks = np.array([0, 2, 1, 0])
        fast = _ExpCursor(model, times, marks)
        slow = _HistoryCursor(model, times, marks)
        t = 1.7
        for step in range(30):
            t += 0.05
            tf, rf = fast.total_and_rates(t)
            ts_, rs = slow.total_and_rates(t)
            assert tf == pytest.approx(ts_, rel=1e-12, abs=1e-14)
            np.testing.assert_allclose(rf, rs, rtol=1e-12, atol=1e-14)
            if step % 7 == 3:
                fast.push(t, step % 3)
                slow.push(t, step % 3)
                t += 1e-6


class TestForecast:
    def test_single_step_ordering(self):
        model = poisson_model(1.0)
        hist = sequence([5.0], horizon=5.0)
        out = forecast(model, hist, 1, 1, seed=4)
        assert len(out) == 1 and len(out[0]) == 2
        assert out[0].times[-1] > 5.0

    def test_count_contract(self):
        model = exp_hawkes_1d(0.3, 0.2, 1.0)
        hist = sequence([1.0, 2.0], horizon=2.0)
        sims = forecast(model, hist, 20, 7, seed=8)
        assert len(sims) == 7
        assert all(len(s) == 22 for s in sims)

    def test_poisson_gaps_are_exponential_across_trials(self):
        model = poisson_model(1.0)
        hist = sequence([5.0], horizon=5.0)
        sims = forecast(model, hist, 1, 10_000, seed=17)
        gaps = np.array([s.times[-1] - 5.0 for s in sims])
        assert stats.kstest(gaps, "expon", args=(0, 1.0)).pvalue > 0.01

    def test_trials_are_independent_and_reproducible(self):
        model = poisson_model(0.7)
        hist = sequence([1.0], horizon=1.0)
        a = forecast(model, hist, 5, 3, seed=6)
        b = forecast(model, hist, 5, 3, seed=6)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.times, y.times)
        assert not np.array_equal(a[0].times, a[1].times)


class TestPredictNext:
    def test_poisson_mean_gap(self):
        model = poisson_model(1.0)
        hist = sequence([5.0], horizon=5.0)
        t_hat, _ = predict_next(model, hist, 4000, seed=12)
        assert t_hat == pytest.approx(6.0, abs=3 / math.sqrt(4000))

    def test_modal_mark(self):
        model = poisson_model(0.9, 0.1)
        hist = EventSequence.empty(1.0, 2)
        _, mark = predict_next(model, hist, 200, seed=13)
        assert mark == 0

    def test_deterministic(self):
        model = poisson_model(0.9, 0.1)
        hist = EventSequence.empty(1.0, 2)
        assert predict_next(model, hist, 50, seed=3) == predict_next(
            model, hist, 50, seed=3)
