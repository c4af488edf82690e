import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from operkit.lognormal import (
    LognormalComponent,
    LognormalSequence,
    MovementFeatures,
    aggregate_features,
    characteristic_times,
    eval_component,
    eval_sequence,
    shape_features,
)

component_params = st.builds(
    LognormalComponent,
    t0=st.floats(-1.0, 5.0),
    D=st.floats(0.05, 2.0),
    mu=st.floats(-1.0, 0.5),
    sigma=st.floats(0.02, 0.5),
)


class TestEvalComponent:
    def test_zero_at_and_before_onset(self):
        c = LognormalComponent(t0=1.0, D=0.3, mu=-0.5, sigma=0.1)
        assert eval_component(c, 1.0) == 0.0
        assert eval_component(c, 0.2) == 0.0

    def test_reference_maximum(self):
        # dense-grid maximization oracle for the group-mean pulse
        c = LognormalComponent(t0=0.0, D=0.245, mu=-0.476, sigma=0.093)
        t = np.linspace(1e-6, 3.0, 600001)
        v = eval_component(c, t)
        i = int(np.argmax(v))
        assert v[i] == pytest.approx(1.699, abs=2e-3)
        assert t[i] == pytest.approx(0.616, abs=1e-3)

    def test_area_equals_d(self):
        # quadrature oracle: the pulse integrates to its area parameter
        c = LognormalComponent(t0=0.0, D=0.245, mu=-0.476, sigma=0.093)
        t = np.linspace(1e-9, 10.0, 2_000_001)
        area = np.trapezoid(eval_component(c, t), t)
        assert area == pytest.approx(c.D, rel=1e-3)

    @given(component_params)
    @settings(max_examples=50, deadline=None)
    def test_peak_sits_at_mode_time(self, c):
        _, t2, _ = characteristic_times(c)
        t = c.t0 + np.geomspace(1e-4, 6.0, 20001)
        v = eval_component(c, t)
        assert abs(t[int(np.argmax(v))] - t2) < 6.0 / 2000

    @given(component_params, st.floats(0.1, 5.0))
    @settings(max_examples=30, deadline=None)
    def test_scaling_d_scales_pointwise(self, c, factor):
        scaled = LognormalComponent(c.t0, c.D * factor, c.mu, c.sigma)
        t = np.linspace(c.t0 - 0.5, c.t0 + 4.0, 200)
        np.testing.assert_allclose(
            eval_component(scaled, t), factor * np.asarray(eval_component(c, t)), rtol=1e-12
        )

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            LognormalComponent(0.0, -0.1, -0.5, 0.1)
        with pytest.raises(ValueError):
            LognormalComponent(0.0, 0.1, -0.5, 0.0)
        with pytest.raises(ValueError):
            LognormalComponent(0.0, 0.1, math.nan, 0.1)


class TestEvalSequence:
    def test_empty_sequence_is_zero(self):
        grid = np.linspace(0, 2, 50)
        np.testing.assert_array_equal(eval_sequence(LognormalSequence(()), grid), 0.0)

    def test_single_matches_component(self):
        c = LognormalComponent(0.1, 0.3, -0.5, 0.09)
        grid = np.linspace(0, 2, 400)
        np.testing.assert_array_equal(
            eval_sequence(LognormalSequence((c,)), grid), eval_component(c, grid)
        )

    def test_disjoint_superposition(self):
        a = LognormalComponent(0.0, 0.3, -0.5, 0.08)
        b = LognormalComponent(8.0, 0.4, -0.4, 0.10)
        grid = np.linspace(0.0, 2.5, 500)
        total = eval_sequence(LognormalSequence((a, b)), grid)
        np.testing.assert_allclose(total, eval_component(a, grid), atol=1e-9)

    def test_components_sorted_on_construction(self):
        a = LognormalComponent(2.0, 0.3, -0.5, 0.08)
        b = LognormalComponent(0.5, 0.4, -0.4, 0.10)
        seq = LognormalSequence((a, b))
        assert [c.t0 for c in seq] == [0.5, 2.0]


class TestCharacteristicTimes:
    def test_group_mean_rise_time(self):
        # group mean (mu, sigma) for the slowest-speed operculum pulses
        c = LognormalComponent(0.0, 0.245, -0.476, 0.093)
        t1, t2, t3 = characteristic_times(c)
        assert t2 - t1 == pytest.approx(0.146, rel=0.01)

    def test_group_mean_width(self):
        c = LognormalComponent(0.0, 0.351, -0.453, 0.102)
        t1, _, t3 = characteristic_times(c)
        assert t3 - t1 == pytest.approx(0.390, rel=0.02)

    def test_degenerate_sigma_collapses_to_delay(self):
        c = LognormalComponent(0.0, 0.3, -0.5, 1e-6)
        t1, t2, t3 = characteristic_times(c)
        expected = math.exp(-0.5)
        for t in (t1, t2, t3):
            assert t == pytest.approx(expected, rel=1e-4)

    @given(component_params)
    @settings(max_examples=100)
    def test_ordering(self, c):
        t1, t2, t3 = characteristic_times(c)
        assert t1 < t2 < t3

    @given(component_params, st.floats(-3.0, 3.0))
    @settings(max_examples=50)
    def test_time_shift_equivariance(self, c, delta):
        shifted = LognormalComponent(c.t0 + delta, c.D, c.mu, c.sigma)
        base = characteristic_times(c)
        moved = characteristic_times(shifted)
        for x, y in zip(base, moved):
            assert y - x == pytest.approx(delta, abs=1e-9)


class TestShapeFeatures:
    @pytest.mark.parametrize(
        "sigma,skew,kurt",
        [
            (0.093, 0.2804, 3.1401),
            (0.056, 0.1683, 3.0504),
        ],
    )
    def test_reference_skew_kurtosis(self, sigma, skew, kurt):
        c = LognormalComponent(0.0, 0.3, -0.5, sigma)
        f = shape_features(c)
        assert f.skew == pytest.approx(skew, abs=5e-4)
        assert f.kurtosis == pytest.approx(kurt, abs=5e-4)

    def test_width_is_rise_plus_drop_exactly(self):
        c = LognormalComponent(0.4, 0.3, -0.5, 0.093)
        f = shape_features(c)
        assert f.width_s == f.rise_s + f.drop_s

    @given(st.floats(0.02, 0.6), st.floats(0.021, 0.6))
    @settings(max_examples=60)
    def test_skew_kurtosis_increase_with_sigma(self, s_lo, s_hi):
        lo, hi = sorted((s_lo, s_hi))
        if hi - lo < 1e-6:
            return
        f_lo = shape_features(LognormalComponent(0.0, 0.3, -0.5, lo))
        f_hi = shape_features(LognormalComponent(0.0, 0.3, -0.5, hi))
        assert f_lo.skew < f_hi.skew
        assert f_lo.kurtosis < f_hi.kurtosis

    def test_gaussian_limits(self):
        f = shape_features(LognormalComponent(0.0, 0.3, -0.5, 1e-3))
        assert f.skew == pytest.approx(0.0, abs=5e-3)
        assert f.kurtosis == pytest.approx(3.0, abs=5e-3)

    @given(component_params, st.floats(0.2, 4.0))
    @settings(max_examples=40)
    def test_d_scaling_leaves_shape_unchanged(self, c, factor):
        f0 = shape_features(c)
        f1 = shape_features(LognormalComponent(c.t0, c.D * factor, c.mu, c.sigma))
        assert f1.width_s == f0.width_s
        assert f1.skew == f0.skew
        assert f1.kurtosis == f0.kurtosis
        assert f1.D == pytest.approx(c.D * factor)


class TestAggregateFeatures:
    def _features(self, d):
        return shape_features(LognormalComponent(0.0, d, -0.5, 0.09))

    def test_single_element(self):
        f = self._features(0.3)
        agg = aggregate_features([f])
        assert agg["D"] == (0.3, 0.0)
        assert agg["skew"][1] == 0.0

    def test_identical_pair_zero_sd(self):
        f = self._features(0.3)
        agg = aggregate_features([f, f])
        assert agg["width_s"][1] == 0.0

    def test_mean_and_sample_sd(self):
        feats = [self._features(d) for d in (1.0, 2.0, 3.0)]
        mean, sd = aggregate_features(feats)["D"]
        assert mean == pytest.approx(2.0)
        assert sd == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_features([])


def test_movement_features_invariants_enforced():
    with pytest.raises(ValueError):
        MovementFeatures(0.3, 0.1, 0.1, 0.2, 3.1, -0.5, 0.09, 0.3)
    with pytest.raises(ValueError):
        MovementFeatures(0.2, 0.1, 0.1, -0.2, 3.1, -0.5, 0.09, 0.3)
    with pytest.raises(ValueError):
        MovementFeatures(0.2, 0.1, 0.1, 0.2, 2.5, -0.5, 0.09, 0.3)
