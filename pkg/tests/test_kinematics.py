import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from operkit.kinematics import (
    FilterSpec,
    VelocityTrace,
    body_speed,
    detrend,
    integrate_axis,
    jerk_magnitude,
    lowpass,
)

RATE = 100.0


def steady_amplitude(trace):
    sl = trace.steady_slice()
    return float(np.sqrt(2.0 * np.mean(trace.values[sl] ** 2)))


class TestIntegrateAxis:
    def test_zero_in_zero_out(self):
        v = integrate_axis(np.zeros(500), RATE)
        np.testing.assert_array_equal(v.values, 0.0)

    def test_constant_acceleration_exact(self):
        # trapezoid integrates constants exactly: 1 g for 1 s -> 1 g*s
        v = integrate_axis(np.ones(101), RATE)
        assert v.values[0] == 0.0
        assert v.values[-1] == pytest.approx(1.0, abs=1e-12)

    def test_cosine_matches_antiderivative(self):
        t = np.arange(0, 5, 1 / RATE)
        v = integrate_axis(np.cos(2 * np.pi * t), RATE)
        analytic = np.sin(2 * np.pi * t) / (2 * np.pi)
        assert np.max(np.abs(v.values - analytic)) < 1e-3

    def test_too_short(self):
        with pytest.raises(ValueError):
            integrate_axis(np.array([1.0]), RATE)

    @given(
        arrays(float, 64, elements=st.floats(-5, 5)),
        arrays(float, 64, elements=st.floats(-5, 5)),
        st.floats(-3, 3),
        st.floats(-3, 3),
    )
    @settings(max_examples=40, deadline=None)
    def test_linearity(self, a, b, alpha, beta):
        combined = integrate_axis(alpha * a + beta * b, RATE).values
        separate = alpha * integrate_axis(a, RATE).values + beta * integrate_axis(b, RATE).values
        np.testing.assert_allclose(combined, separate, atol=1e-9)


class TestDetrend:
    def test_constant_rejected(self):
        trace = VelocityTrace(np.full(3000, 2.5), RATE)
        out = detrend(trace)
        assert np.max(np.abs(out.values)) < 1e-9 * 2.5

    def test_low_tone_attenuated(self):
        t = np.arange(0, 40, 1 / RATE)
        trace = VelocityTrace(np.sin(2 * np.pi * 0.1 * t), RATE)
        assert steady_amplitude(detrend(trace)) < 0.1

    def test_passband_tone_preserved(self):
        t = np.arange(0, 30, 1 / RATE)
        trace = VelocityTrace(np.sin(2 * np.pi * 2.0 * t), RATE)
        assert steady_amplitude(detrend(trace)) > 0.9

    def test_idempotent_on_passband_signal(self):
        t = np.arange(0, 20, 1 / RATE)
        trace = VelocityTrace(np.sin(2 * np.pi * 8.0 * t), RATE)
        once = detrend(trace)
        twice = detrend(once)
        num = np.linalg.norm(twice.values - once.values)
        assert num <= 1e-3 * np.linalg.norm(once.values)

    def test_spectral_peak_unmoved(self):
        t = np.arange(0, 30, 1 / RATE)
        trace = VelocityTrace(np.sin(2 * np.pi * 3.0 * t), RATE)
        out = detrend(trace)
        freqs = np.fft.rfftfreq(out.values.size, 1 / RATE)
        before = freqs[np.argmax(np.abs(np.fft.rfft(trace.values)))]
        after = freqs[np.argmax(np.abs(np.fft.rfft(out.values)))]
        assert after == pytest.approx(before, abs=freqs[1])

    def test_cutoff_must_be_below_nyquist(self):
        trace = VelocityTrace(np.zeros(100), 10.0)
        with pytest.raises(ValueError):
            detrend(trace, FilterSpec(cutoff_hz=5.0))

    def test_marks_transient(self):
        trace = VelocityTrace(np.zeros(1000), RATE)
        out = detrend(trace, FilterSpec(cutoff_hz=1.0))
        assert out.transient_s == pytest.approx(1.0)


class TestBodySpeed:
    def test_three_four_five(self):
        vx = VelocityTrace(np.full(50, 3.0), RATE, "x")
        vy = VelocityTrace(np.full(50, 4.0), RATE, "y")
        np.testing.assert_allclose(body_speed(vx, vy).values, 5.0)

    def test_single_axis_gives_magnitude(self):
        vals = np.sin(np.linspace(0, 6, 200))
        vx = VelocityTrace(vals, RATE, "x")
        vy = VelocityTrace(np.zeros(200), RATE, "y")
        np.testing.assert_allclose(body_speed(vx, vy).values, np.abs(vals))

    def test_quadrature_pair_constant_magnitude(self):
        t = np.arange(0, 3, 1 / RATE)
        amp = 1.7
        vx = VelocityTrace(amp * np.sin(5 * t), RATE, "x")
        vy = VelocityTrace(amp * np.cos(5 * t), RATE, "y")
        np.testing.assert_allclose(body_speed(vx, vy).values, amp, atol=1e-9)

    @given(st.floats(0, 2 * np.pi))
    @settings(max_examples=30)
    def test_rotation_invariance(self, angle):
        t = np.arange(0, 2, 1 / RATE)
        x = np.sin(3 * t) + 0.2
        y = np.cos(7 * t)
        xr = x * np.cos(angle) - y * np.sin(angle)
        yr = x * np.sin(angle) + y * np.cos(angle)
        base = body_speed(VelocityTrace(x, RATE, "x"), VelocityTrace(y, RATE, "y"))
        rotated = body_speed(VelocityTrace(xr, RATE, "x"), VelocityTrace(yr, RATE, "y"))
        np.testing.assert_allclose(rotated.values, base.values, atol=1e-9)

    def test_length_mismatch(self):
        vx = VelocityTrace(np.zeros(10), RATE, "x")
        vy = VelocityTrace(np.zeros(11), RATE, "y")
        with pytest.raises(ValueError):
            body_speed(vx, vy)


class TestJerkMagnitude:
    def test_constant_acceleration_zero_jerk(self):
        acc = np.column_stack([np.full(100, 0.4), np.full(100, -1.2)])
        np.testing.assert_array_equal(jerk_magnitude(acc, RATE), 0.0)

    @given(st.floats(0.1, 10.0))
    @settings(max_examples=30)
    def test_amplitude_scaling(self, c):
        t = np.arange(0, 2, 1 / RATE)
        acc = np.column_stack([np.sin(4 * t), np.cos(9 * t)])
        np.testing.assert_allclose(
            jerk_magnitude(c * acc, RATE), c * jerk_magnitude(acc, RATE), rtol=1e-9
        )

    def test_sine_derivative_amplitude(self):
        # analytic derivative oracle: d/dt sin(2 pi f t) peaks at 2 pi f
        f = RATE / 20
        t = np.arange(0, 4, 1 / RATE)
        acc = np.column_stack([np.sin(2 * np.pi * f * t), np.zeros_like(t)])
        jerk = jerk_magnitude(acc, RATE)
        assert jerk.max() == pytest.approx(2 * np.pi * f, rel=0.01)

    def test_too_short(self):
        with pytest.raises(ValueError):
            jerk_magnitude(np.zeros((1, 2)), RATE)

    def test_axis_selection(self):
        acc = np.column_stack([np.arange(10.0), np.zeros(10), 5 * np.arange(10.0)])
        only_x = jerk_magnitude(acc, RATE, axes=(0,))
        np.testing.assert_allclose(only_x, RATE)


def test_lowpass_dc_gain_is_unity():
    out = lowpass(np.full(2000, 3.0), RATE, FilterSpec())
    np.testing.assert_allclose(out, 3.0, rtol=1e-12)


def test_velocity_trace_validation():
    with pytest.raises(ValueError):
        VelocityTrace(np.array([1.0, np.nan]), RATE)
    with pytest.raises(ValueError):
        VelocityTrace(np.zeros(5), -1.0)
    with pytest.raises(ValueError):
        VelocityTrace(np.zeros(5), RATE, origin="w")
