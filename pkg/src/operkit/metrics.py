"""Per-window outputs mirroring the tag's on-board processing.

Respiratory frequency comes from hysteresis zero-crossing counting of the
detrended z-velocity; the physical-activity index is the scaled RMS of the
x/y jerk. Both are pure functions of a single measurement window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import InputFormatError
from .ingest import CLIP_LIMIT_G, MeasurementWindow
from .kinematics import FilterSpec, detrend, integrate_axis, jerk_magnitude

#: Hysteresis band for crossing detection, as a fraction of the window RMS.
HYSTERESIS_FRACTION = 0.10
#: Relative floor below which a detrended trace counts as flat.
ZERO_SIGNAL_REL = 1e-9

WINDOW_CSV_HEADER = "window_start_iso8601,activity_index,resp_freq_hz,flags"


@dataclass(frozen=True)
class WindowSummary:
    """Activity and respiration estimates for one measurement window."""

    window_start: datetime
    activity_index: float
    resp_freq_hz: float
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.resp_freq_hz < 0:
            raise ValueError("resp_freq_hz must be >= 0")
        if self.activity_index < 0:
            raise ValueError("activity_index must be >= 0")


def _count_hysteresis_crossings(x: np.ndarray, band: float) -> int:
    """Transitions through the +/-band levels, starting from an idle state."""
    excursions = x[np.abs(x) > band]
    if excursions.size == 0:
        return 0
    signs = np.sign(excursions)
    return 1 + int(np.count_nonzero(signs[1:] != signs[:-1]))


def respiratory_frequency(
    az: np.ndarray, rate_hz: float, filter_spec: FilterSpec = FilterSpec()
) -> float:
    """Operculum beat frequency in Hz from a window's z-axis acceleration.

    Pipeline: integrate to velocity, detrend (1 Hz high-pass by default),
    count hysteresis zero crossings, divide by twice the duration. The
    hysteresis band is relative, so the estimate is amplitude invariant.
    Flat input returns 0.
    """
    az = np.asarray(az, dtype=float)
    duration = az.size / rate_hz
    if duration < 10.0:
        raise ValueError(f"window must cover >= 10 s, got {duration:.2f} s")
    if np.ptp(az) == 0.0:
        return 0.0
    v = integrate_axis(az, rate_hz, origin="z")
    vz = detrend(v, filter_spec)
    x = vz.values
    rms = float(np.sqrt(np.mean(x**2)))
    raw_rms = float(np.sqrt(np.mean(v.values**2)))
    if rms < ZERO_SIGNAL_REL * max(1.0, raw_rms):
        return 0.0
    crossings = _count_hysteresis_crossings(x, HYSTERESIS_FRACTION * rms)
    return crossings / (2.0 * duration)


def respiratory_frequency_spectral(
    az: np.ndarray, rate_hz: float, filter_spec: FilterSpec = FilterSpec()
) -> float:
    """Cross-check estimator: dominant spectral peak of the detrended z-velocity."""
    az = np.asarray(az, dtype=float)
    if az.size / rate_hz < 10.0:
        raise ValueError("window must cover >= 10 s")
    if np.ptp(az) == 0.0:
        return 0.0
    vz = detrend(integrate_axis(az, rate_hz, origin="z"), filter_spec)
    spec = np.abs(np.fft.rfft(vz.values))
    freqs = np.fft.rfftfreq(vz.values.size, d=1.0 / rate_hz)
    usable = freqs >= filter_spec.cutoff_hz / 2.0
    if not np.any(usable) or np.all(spec[usable] == 0):
        return 0.0
    return float(freqs[usable][np.argmax(spec[usable])])


def activity_index(
    ax: np.ndarray, ay: np.ndarray, rate_hz: float, scale: float = 1.0
) -> float:
    """Physical-activity index: scale x RMS of the Euclidean x/y jerk.

    Constant offsets (gravity components) vanish under differencing; the
    index is homogeneous of degree 1 in the motion amplitude.
    """
    stacked = np.column_stack([np.asarray(ax, dtype=float), np.asarray(ay, dtype=float)])
    jerk = jerk_magnitude(stacked, rate_hz)
    return float(scale * np.sqrt(np.mean(jerk**2)))


def summarize_window(
    w: MeasurementWindow,
    scale: float = 1.0,
    filter_spec: FilterSpec = FilterSpec(),
) -> WindowSummary:
    """Compose both metrics plus quality flags for one window."""
    flags: list[str] = []
    if np.ptp(w.ax) == 0.0 and np.ptp(w.ay) == 0.0 and np.ptp(w.az) == 0.0:
        flags.append("zero-signal")
    if max(np.max(np.abs(w.ax)), np.max(np.abs(w.ay)), np.max(np.abs(w.az))) >= CLIP_LIMIT_G:
        flags.append("clipped")
    return WindowSummary(
        window_start=w.start_utc,
        activity_index=activity_index(w.ax, w.ay, w.rate_hz, scale),
        resp_freq_hz=respiratory_frequency(w.az, w.rate_hz, filter_spec),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# WindowSummary CSV interchange


def write_window_csv(summaries, path: Path) -> None:
    """Write summaries as deterministic, full-precision CSV."""
    lines = [WINDOW_CSV_HEADER]
    for s in summaries:
        flags = ";".join(s.flags)
        lines.append(
            f"{s.window_start.isoformat()},{s.activity_index!r},{s.resp_freq_hz!r},{flags}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_window_csv(path: Path) -> list[WindowSummary]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0] != WINDOW_CSV_HEADER:
        raise InputFormatError(
            f"malformed window CSV header in {path}: expected {WINDOW_CSV_HEADER!r}"
        )
    out = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 4:
            raise InputFormatError(f"{path}: row {i} has {len(parts)} fields, expected 4")
        try:
            start = datetime.fromisoformat(parts[0])
            act = float(parts[1])
            resp = float(parts[2])
        except ValueError as exc:
            raise InputFormatError(f"{path}: row {i}: {exc}") from None
        flags = tuple(tok for tok in parts[3].split(";") if tok)
        out.append(WindowSummary(start, act, resp, flags))
    return out
