import math

import numpy as np
import pytest

from mtpp import (
    ConstantBase,
    DimensionError,
    EventSequence,
    ExpDecayKernel,
    GammaBase,
    HawkesModel,
    MarkedEvent,
    OrderingError,
    ParseError,
    RayleighKernel,
    SinusoidalBase,
    ValidationError,
    ZeroKernel,
    conditional_intensity,
    eval_base,
    eval_kernel,
    intensity_upper_bound,
    kernel_sup,
    total_intensity,
)
from mtpp.core import base_from_dict, kernel_from_dict
from mtpp.datagen import PRIOR_LIBRARY, sample_model
from mtpp.rng import Stream

from conftest import exp_hawkes_1d, poisson_model, sequence


class TestEventSequence:
    def test_invariants_enforced(self):
        with pytest.raises(ValidationError):
            EventSequence([1.0, 1.0], [0, 0], 2.0, 1)  # tie
        with pytest.raises(ValidationError):
            EventSequence([2.0, 1.0], [0, 0], 3.0, 1)  # decreasing
        with pytest.raises(ValidationError):
            EventSequence([1.0], [0], 0.5, 1)  # beyond horizon
        with pytest.raises(ValidationError):
            EventSequence([-0.1], [0], 1.0, 1)  # negative time
        with pytest.raises(ValidationError):
            EventSequence([1.0], [3], 2.0, 2)  # mark out of range

    def test_events_view_and_prefix(self):
        seq = sequence([0.5, 1.5, 2.0], [0, 1, 0], horizon=3.0, mark_count=2)
        assert seq.events()[1] == MarkedEvent(1.5, 1)
        assert len(seq.prefix(2)) == 2
        assert seq.tail(1).times[0] == 2.0
        assert seq.last_time == 2.0
        assert EventSequence.empty(1.0, 2).last_time == 0.0


class TestEvalBase:
    def test_constant(self):
        assert eval_base(ConstantBase(0.3), 17.2) == 0.3

    def test_gamma_at_zero_is_offset(self):
        # t**p vanishes at t = 0 for p >= 1
        spec = GammaBase(amplitude=30.0, power=1.5, decay=4.0, c0=0.7)
        assert eval_base(spec, 0.0) == 0.7

    def test_sinusoidal_clamped_at_zero(self):
        spec = SinusoidalBase(amplitude=10.0, omega=1.0, phase=0.0, c0=0.1)
        t = 3 * math.pi / 2
        assert spec.raw_value(t) == pytest.approx(-9.9)
        assert eval_base(spec, t) == 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(ValidationError):
            eval_base(ConstantBase(1.0), -1.0)


class TestEvalKernel:
    def test_exp_decay_at_zero(self):
        assert eval_kernel(ExpDecayKernel(0.5, 2.0), 0.0) == 0.5

    def test_zero_kernel(self):
        for dt in (0.0, 1.0, 1e6):
            assert eval_kernel(ZeroKernel(), dt) == 0.0

    def test_rayleigh_zero_before_shift(self):
        spec = RayleighKernel(a0=1.0, a1=0.1, t_shift=0.05)
        assert eval_kernel(spec, 0.02) == 0.0
        assert eval_kernel(spec, 0.05) == 0.0
        assert eval_kernel(spec, 0.06) > 0.0

    def test_rayleigh_vanishes_at_infinity(self):
        spec = RayleighKernel(a0=1.0, a1=0.2, t_shift=0.0)
        assert eval_kernel(spec, 1e3) == pytest.approx(0.0, abs=1e-300)


class TestKernelSup:
    def test_exp_decay_sup_at_origin(self):
        assert kernel_sup(ExpDecayKernel(0.7, 5.0)) == 0.7

    def test_zero(self):
        assert kernel_sup(ZeroKernel()) == 0.0

    def test_rayleigh_sup_vs_grid_search(self):
        # independent oracle: dense grid over [0, 10 * a1]
        spec = RayleighKernel(a0=2.0, a1=0.2, t_shift=0.0)
        grid = np.linspace(0.0, 10 * spec.a1, 200_001)
        grid_max = float(spec.value(grid).max())
        assert kernel_sup(spec) == pytest.approx(grid_max, abs=1e-6)
        assert kernel_sup(spec) == pytest.approx(2.0 * math.exp(-0.5) / 0.2, rel=1e-12)

    def test_rayleigh_shifted_sup_vs_grid(self):
        spec = RayleighKernel(a0=0.8, a1=0.11, t_shift=0.07)
        grid = np.linspace(0.0, spec.t_shift + 10 * spec.a1, 200_001)
        assert kernel_sup(spec) == pytest.approx(float(spec.value(grid).max()), abs=1e-6)


class TestConditionalIntensity:
    def test_poisson_row_ignores_history(self):
        model = poisson_model(0.3)
        hist = sequence([0.2, 0.9], horizon=1.0)
        assert conditional_intensity(model, hist, 5.0, 0) == 0.3

    def test_exp_excitation_arithmetic(self):
        model = exp_hawkes_1d(0.2, 0.4, 1.0)
        hist = sequence([1.0], horizon=1.0)
        t = 1.0 + math.log(2.0)
        assert conditional_intensity(model, hist, t, 0) == pytest.approx(0.4)

    def test_inhibition_clamps_to_zero(self):
        model = exp_hawkes_1d(0.1, 0.4, 1.0, z=-1)
        hist = sequence([1.0], horizon=1.0)
        assert conditional_intensity(model, hist, 1.0 + 1e-9, 0) == 0.0

    def test_errors(self):
        model = exp_hawkes_1d(0.2, 0.4, 1.0)
        hist = sequence([1.0], horizon=1.0)
        with pytest.raises(DimensionError):
            conditional_intensity(model, hist, 2.0, 5)
        with pytest.raises(OrderingError):
            conditional_intensity(model, hist, 0.5, 0)

    def test_empty_history_equals_clamped_base(self):
        stream = Stream(31)
        for ci, (name, cfg) in enumerate(sorted(PRIOR_LIBRARY.items())):
            model = sample_model(cfg, 3, stream.spawn(ci))
            hist = EventSequence.empty(1.0, 3)
            for t in (0.01, 0.7, 4.2):
                vec = model.intensity_vector(hist, t)
                for k in range(3):
                    assert vec[k] == pytest.approx(
                        max(0.0, float(model.bases[k].raw_value(t))))


class TestTotalIntensity:
    def test_sums_constants(self):
        model = poisson_model(0.1, 0.2, 0.3)
        hist = EventSequence.empty(1.0, 3)
        assert total_intensity(model, hist, 0.5) == pytest.approx(0.6)

    def test_single_mark_reduces_to_conditional(self):
        model = exp_hawkes_1d(0.2, 0.4, 1.0)
        hist = sequence([0.3, 0.8], horizon=1.0)
        assert total_intensity(model, hist, 1.1) == pytest.approx(
            conditional_intensity(model, hist, 1.1, 0))

    def test_equals_sum_of_marks_exactly(self):
        model = sample_model(PRIOR_LIBRARY["const-exp"], 4, Stream(8))
        hist = sequence([0.1, 0.5, 0.9], [0, 2, 1], horizon=1.0, mark_count=4)
        vec = model.intensity_vector(hist, 1.3)
        assert total_intensity(model, hist, 1.3) == float(vec.sum())


class TestUpperBound:
    def test_poisson_exact_bound(self):
        model = poisson_model(0.5)
        hist = EventSequence.empty(1.0, 1)
        assert intensity_upper_bound(model, hist, 3.0, 10.0) == 0.5

    def test_exp_kernel_bound_at_window_start(self):
        model = exp_hawkes_1d(0.2, 0.4, 1.0)
        hist = sequence([1.0], horizon=1.0)
        d = 0.7
        expected = 0.2 + 0.4 * math.exp(-d)
        assert intensity_upper_bound(model, hist, 1.0 + d, 2.0) == pytest.approx(expected)

    @pytest.mark.parametrize("family", sorted(PRIOR_LIBRARY))
    def test_bound_dominates_on_prior_models(self, family):
        # property: B >= total intensity at sampled window points
        stream = Stream(500 + sorted(PRIOR_LIBRARY).index(family))
        for rep in range(4):
            K = [1, 2, 3, 5][rep]
            model = sample_model(PRIOR_LIBRARY[family], K, stream.spawn(rep))
            h_times = np.sort(stream.uniforms(12)) * 5.0
            h_marks = stream.integers(K, 12)
            hist = EventSequence(h_times, h_marks, 5.0, K)
            t_from = 5.0 + stream.uniform()
            lookahead = 0.1 + 2.0 * stream.uniform()
            bound = intensity_upper_bound(model, hist, t_from, lookahead)
            s = t_from + stream.uniforms(250) * lookahead
            totals = model.intensity_at(hist.times, hist.marks, s).sum(axis=1)
            assert bound >= totals.max() - 1e-12 * max(1.0, bound)


class TestPrefactorFlip:
    def test_flip_positive_to_zero_shrinks_deviation(self):
        # on models with nonnegative prefactors, removing an excitatory term
        # never moves the intensity further from the bare base
        stream = Stream(77)
        cfg = PRIOR_LIBRARY["const-exp"]
        for rep in range(5):
            K = 3
            model = sample_model(cfg, K, stream.spawn(rep))
            z = np.abs(model.prefactors.copy())  # -1 -> +1: all nonnegative
            model = HawkesModel(K, model.bases, model.kernels, z)
            ones = np.argwhere(z == 1)
            if not len(ones):
                continue
            rec, src = ones[stream.integers(len(ones))]
            z2 = z.copy()
            z2[rec, src] = 0
            flipped = HawkesModel(K, model.bases, model.kernels, z2)
            hist = sequence(np.sort(stream.uniforms(10)) * 3.0,
                            stream.integers(K, 10), horizon=3.0, mark_count=K)
            for t in 3.0 + stream.uniforms(50) * 2.0:
                base = max(0.0, float(model.bases[rec].raw_value(t)))
                lam = conditional_intensity(model, hist, t, int(rec))
                lam2 = conditional_intensity(flipped, hist, t, int(rec))
                assert abs(lam2 - base) <= abs(lam - base) + 1e-12


class TestHistoryCutoff:
    def test_cutoff_matches_truncated_history(self):
        # the elapsed-time cutoff is a pure performance knob: evaluating with
        # cutoff equals evaluating on the history filtered to recent events
        model = exp_hawkes_1d(0.2, 0.5, 0.3)
        hist = sequence([0.5, 2.0, 4.0, 5.5], horizon=6.0)
        t, cutoff = 6.0, 2.5
        keep = hist.times >= t - cutoff
        recent = EventSequence(hist.times[keep], hist.marks[keep], 6.0, 1)
        with_cut = conditional_intensity(model, hist, t, 0, cutoff=cutoff)
        manual = conditional_intensity(model, recent, t, 0)
        assert with_cut == pytest.approx(manual, rel=1e-15)
        assert with_cut != conditional_intensity(model, hist, t, 0)
        bound_cut = intensity_upper_bound(model, hist, t, 1.0, cutoff=cutoff)
        assert bound_cut == pytest.approx(
            intensity_upper_bound(model, recent, t, 1.0), rel=1e-15)

    def test_no_cutoff_is_default(self):
        model = exp_hawkes_1d(0.2, 0.5, 0.3)
        hist = sequence([0.5, 2.0], horizon=3.0)
        assert conditional_intensity(model, hist, 3.0, 0) == pytest.approx(
            conditional_intensity(model, hist, 3.0, 0, cutoff=1e12))


class TestModelConstruction:
    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            HawkesModel(2, [ConstantBase(0.1)], [[ZeroKernel()] * 2] * 2,
                        np.zeros((2, 2)))
        with pytest.raises(DimensionError):
            HawkesModel(2, [ConstantBase(0.1)] * 2, [[ZeroKernel()] * 2],
                        np.zeros((2, 2)))
        with pytest.raises(ValidationError):
            HawkesModel(1, [ConstantBase(0.1)], [[ZeroKernel()]], [[2]])

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            ExpDecayKernel(alpha=0.5, beta=0.0)
        with pytest.raises(ValidationError):
            RayleighKernel(a0=1.0, a1=0.0, t_shift=0.0)
        with pytest.raises(ValidationError):
            GammaBase(amplitude=1.0, power=0.5, decay=1.0, c0=0.0)


class TestSerialization:
    def test_model_round_trip(self):
        model = HawkesModel(
            2,
            [SinusoidalBase(2.0, 3.0, 0.5, 0.1), GammaBase(20.0, 1.5, 5.0, 0.2)],
            [[ExpDecayKernel(0.3, 1.0), ZeroKernel()],
             [RayleighKernel(0.5, 0.1, 0.05), ExpDecayKernel(0.2, 2.0)]],
            [[1, 0], [-1, 1]],
        )
        again = HawkesModel.from_json(model.to_json())
        assert again == model
        assert again.to_json() == model.to_json()

    def test_exp_decay_field_names_are_contract(self):
        d = ExpDecayKernel(0.4, 1.5).to_dict()
        assert d == {"type": "exp_decay", "alpha": 0.4, "beta": 1.5}

    def test_unknown_tags_rejected(self):
        with pytest.raises(ParseError):
            kernel_from_dict({"type": "mystery", "a": 1})
        with pytest.raises(ParseError):
            base_from_dict({"type": "constant", "c0": 1.0, "bogus": 2})
        with pytest.raises(ParseError):
            base_from_dict({"c0": 1.0})

    def test_model_dict_missing_field(self):
        with pytest.raises(ParseError):
            HawkesModel.from_dict({"mark_count": 1, "bases": []})
