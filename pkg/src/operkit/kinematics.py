"""Acceleration-to-velocity transforms: integration, zero-phase detrending, magnitudes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import butter, filtfilt

VALID_ORIGINS = ("z", "body", "x", "y")


@dataclass(frozen=True)
class FilterSpec:
    """Zero-phase low-pass design used for trend estimation.

    The filter is a Butterworth applied forward-backward, so the effective
    magnitude response is squared and the phase is zero.
    """

    cutoff_hz: float = 1.0
    order: int = 2

    def __post_init__(self) -> None:
        if not (self.cutoff_hz > 0 and np.isfinite(self.cutoff_hz)):
            raise ValueError(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")


@dataclass(frozen=True)
class VelocityTrace:
    """A uniformly sampled velocity series in g*s.

    ``transient_s`` marks the filter settling span at each edge; feature
    extraction should ignore samples inside it.
    """

    values: np.ndarray
    rate_hz: float
    origin: str = "z"
    transient_s: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ValueError("velocity values must be finite")
        if not (self.rate_hz > 0 and np.isfinite(self.rate_hz)):
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        if self.origin not in VALID_ORIGINS:
            raise ValueError(f"origin must be one of {VALID_ORIGINS}, got {self.origin!r}")
        if self.transient_s < 0:
            raise ValueError("transient_s must be >= 0")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / self.rate_hz

    @property
    def duration_s(self) -> float:
        return self.values.size / self.rate_hz

    def steady_slice(self) -> slice:
        """Index slice excluding the transient margin at both edges."""
        m = int(round(self.transient_s * self.rate_hz))
        if 2 * m >= self.values.size:
            return slice(0, self.values.size)
        return slice(m, self.values.size - m)


def integrate_axis(acc: np.ndarray, rate_hz: float, origin: str = "z") -> VelocityTrace:
    """Cumulative trapezoidal integral of an acceleration series, v(0) = 0."""
    acc = np.asarray(acc, dtype=float)
    if acc.size < 2:
        raise ValueError("integration needs at least 2 samples")
    v = cumulative_trapezoid(acc, dx=1.0 / rate_hz, initial=0.0)
    return VelocityTrace(v, rate_hz, origin)


def lowpass(values: np.ndarray, rate_hz: float, spec: FilterSpec) -> np.ndarray:
    """Zero-phase Butterworth low-pass with reflect padding."""
    values = np.asarray(values, dtype=float)
    nyquist = rate_hz / 2.0
    if spec.cutoff_hz >= nyquist:
        raise ValueError(
            f"cutoff {spec.cutoff_hz} Hz must be below the Nyquist rate {nyquist} Hz"
        )
    b, a = butter(spec.order, spec.cutoff_hz / nyquist, btype="low")
    # Reflect-pad by half the settling span (~2/cutoff seconds total).
    padlen = min(values.size - 1, int(round(rate_hz / spec.cutoff_hz)))
    return filtfilt(b, a, values, padtype="even", padlen=padlen)


def detrend(v: VelocityTrace, spec: FilterSpec = FilterSpec()) -> VelocityTrace:
    """High-pass a velocity trace by subtracting its low-pass trend.

    Rejects DC completely in steady state; passes content well above the
    cutoff nearly unchanged. The first/last ~1/cutoff seconds are marked
    transient.
    """
    trend = lowpass(v.values, v.rate_hz, spec)
    settled = max(v.transient_s, 1.0 / spec.cutoff_hz)
    return VelocityTrace(v.values - trend, v.rate_hz, v.origin, transient_s=settled)


def body_speed(vx: VelocityTrace, vy: VelocityTrace) -> VelocityTrace:
    """Pointwise Euclidean magnitude of two orthogonal velocity traces."""
    if vx.values.size != vy.values.size:
        raise ValueError(
            f"length mismatch: {vx.values.size} vs {vy.values.size}"
        )
    if vx.rate_hz != vy.rate_hz:
        raise ValueError(f"rate mismatch: {vx.rate_hz} vs {vy.rate_hz}")
    mag = np.hypot(vx.values, vy.values)
    return VelocityTrace(
        mag, vx.rate_hz, "body", transient_s=max(vx.transient_s, vy.transient_s)
    )


def jerk_magnitude(acc: np.ndarray, rate_hz: float, axes: tuple[int, ...] | None = None) -> np.ndarray:
    """First-difference jerk magnitude over selected acceleration axes.

    Args:
        acc: (n, k) array with one column per axis, in g.
        rate_hz: sampling rate.
        axes: column indices to include; all columns when None.

    Returns:
        (n-1,) array of Euclidean jerk magnitudes in g/s.
    """
    acc = np.asarray(acc, dtype=float)
    if acc.ndim == 1:
        acc = acc[:, None]
    if acc.ndim != 2:
        raise ValueError("acc must be a 1-D series or an (n, k) axis stack")
    if acc.shape[0] < 2:
        raise ValueError("jerk needs at least 2 samples")
    if axes is not None:
        acc = acc[:, list(axes)]
    diffs = np.diff(acc, axis=0) * rate_hz
    return np.sqrt(np.sum(diffs**2, axis=1))
