"""Daily-rhythm analysis of windowed metric series.

Implements a single-component fixed-period cosinor (least squares on
{1, cos, sin}), photoperiod-phase trimming, folded 24 h profiles with
percentile bands, and activity-respiration coupling via Pearson r.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, time, timedelta
from pathlib import Path

import numpy as np

from .errors import InputFormatError, PreconditionError
from .stats import TestResult, pearson

METRIC_NAMES = ("activity", "respiration")

PROFILE_CSV_HEADER = "clock_hhmm,mean,p20,p80,dark_flag"


@dataclass(frozen=True)
class MetricSeries:
    """A timestamped series of one windowed metric for one subject."""

    times: tuple[datetime, ...]
    values: np.ndarray
    metric: str = "activity"
    subject: str = ""

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "times", tuple(self.times))
        if len(self.times) != vals.size:
            raise ValueError("times and values must have the same length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("metric values must be finite")
        for a, b in zip(self.times, self.times[1:]):
            if b <= a:
                raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def span_h(self) -> float:
        if len(self.times) < 2:
            return 0.0
        return (self.times[-1] - self.times[0]).total_seconds() / 3600.0


@dataclass(frozen=True)
class RhythmFit:
    """Cosinor fit: midline (mesor), amplitude, and peak clock time."""

    mesor: float
    amplitude: float
    acrophase_h: float
    period_h: float = 24.0
    rss: float = 0.0
    n: int = 0

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if not (0.0 <= self.acrophase_h < self.period_h):
            raise ValueError(f"acrophase_h must lie in [0, {self.period_h})")

    @property
    def acrophase_rad(self) -> float:
        return 2.0 * math.pi * self.acrophase_h / self.period_h

    @property
    def acrophase_hhmm(self) -> str:
        total_min = int(round(self.acrophase_h * 60.0)) % int(round(self.period_h * 60.0))
        return f"{total_min // 60:02d}:{total_min % 60:02d}"


@dataclass(frozen=True)
class Photoperiod:
    """Daily light schedule given as two wall-clock switch times."""

    lights_on: time = time(8, 0)
    lights_off: time = time(20, 0)

    def __post_init__(self) -> None:
        if self.lights_on == self.lights_off:
            raise ValueError("lights_on and lights_off must differ")

    def is_dark(self, at: datetime | time) -> bool:
        clock = at.timetz() if isinstance(at, datetime) else at
        clock = clock.replace(tzinfo=None)
        on, off = self.lights_on, self.lights_off
        if on < off:
            return not (on <= clock < off)
        return off <= clock < on

    def transitions(self, start: datetime, end: datetime) -> list[datetime]:
        """All phase boundaries covering [start, end], padded one day out."""
        first = (start - timedelta(days=1)).date()
        last = (end + timedelta(days=1)).date()
        out = []
        day = first
        while day <= last:
            for clock in (self.lights_on, self.lights_off):
                out.append(datetime.combine(day, clock, tzinfo=start.tzinfo))
            day += timedelta(days=1)
        return sorted(out)


def _hours_since_midnight(ts: datetime, ref_midnight: datetime) -> float:
    return (ts - ref_midnight).total_seconds() / 3600.0


def cosinor_fit(s: MetricSeries, period_h: float = 24.0) -> RhythmFit:
    """Least-squares fit of y = M + beta*cos(wt) + gamma*sin(wt).

    Amplitude is sqrt(beta^2 + gamma^2); the acrophase is the wall-clock
    time at which the fitted curve peaks.

    Raises:
        PreconditionError: fewer than 4 points, span below one period, or a
            singular design (all samples at the same phase).
    """
    if len(s) < 4:
        raise PreconditionError(f"cosinor needs >= 4 points, got {len(s)}")
    if s.span_h < period_h:
        raise PreconditionError(
            f"insufficient span: {s.span_h:.2f} h < one period ({period_h} h)"
        )
    ref = datetime.combine(s.times[0].date(), time(0), tzinfo=s.times[0].tzinfo)
    th = np.array([_hours_since_midnight(t, ref) for t in s.times])
    w = 2.0 * math.pi / period_h
    design = np.column_stack([np.ones_like(th), np.cos(w * th), np.sin(w * th)])
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise PreconditionError("singular design: samples cover a single phase")
    theta, *_ = np.linalg.lstsq(design, s.values, rcond=None)
    mesor, beta, gamma = (float(v) for v in theta)
    amplitude = math.hypot(beta, gamma)
    acro_h = (math.atan2(gamma, beta) / w) % period_h
    resid = s.values - design @ theta
    return RhythmFit(
        mesor=mesor,
        amplitude=amplitude,
        acrophase_h=acro_h,
        period_h=period_h,
        rss=float(np.dot(resid, resid)),
        n=len(s),
    )


def amplitude_f_test(s: MetricSeries, period_h: float = 24.0) -> TestResult:
    """F-test of the two harmonic coefficients against a flat model.

    Informational only: reports whether the fitted amplitude differs from
    zero.
    """
    fit = cosinor_fit(s, period_h)
    n = len(s)
    rss_flat = float(np.sum((s.values - s.values.mean()) ** 2))
    df2 = n - 3
    if df2 <= 0 or fit.rss <= 0:
        return TestResult(statistic=0.0, p_value=1.0, n=(n,), method="cosinor_f")
    f_stat = ((rss_flat - fit.rss) / 2.0) / (fit.rss / df2)
    from scipy.special import betainc

    p = float(betainc(df2 / 2.0, 1.0, df2 / (df2 + 2.0 * max(f_stat, 0.0))))
    return TestResult(statistic=max(f_stat, 0.0), p_value=min(1.0, p), n=(n,), method="cosinor_f")


def trim_partial_phases(s: MetricSeries, p: Photoperiod) -> MetricSeries:
    """Drop leading/trailing points that fall in incomplete light/dark phases.

    A phase is complete when the series' sampled span covers it from
    boundary to boundary (up to one sampling step). Interior points are
    never touched.

    Raises:
        PreconditionError: when nothing remains (series entirely inside a
            partial phase).
    """
    times = list(s.times)
    values = list(s.values)
    if len(times) >= 2:
        steps = [(b - a).total_seconds() for a, b in zip(times, times[1:])]
        tol = timedelta(seconds=float(np.median(steps)))
    else:
        tol = timedelta(0)

    def first_phase_complete(ts: list[datetime]) -> bool:
        bounds = p.transitions(ts[0], ts[0])
        i = np.searchsorted(bounds, ts[0], side="right") - 1
        return ts[0] - bounds[i] <= tol

    def last_phase_complete(ts: list[datetime]) -> bool:
        bounds = p.transitions(ts[-1], ts[-1])
        i = np.searchsorted(bounds, ts[-1], side="right") - 1
        return bounds[i + 1] - ts[-1] <= tol

    while times and not first_phase_complete(times):
        bounds = p.transitions(times[0], times[0])
        i = np.searchsorted(bounds, times[0], side="right") - 1
        cut = bounds[i + 1]
        while times and times[0] < cut:
            times.pop(0)
            values.pop(0)
    while times and not last_phase_complete(times):
        bounds = p.transitions(times[-1], times[-1])
        i = np.searchsorted(bounds, times[-1], side="right") - 1
        cut = bounds[i]
        while times and times[-1] >= cut:
            times.pop()
            values.pop()
    if not times:
        raise PreconditionError("no complete photoperiod phase in series")
    return MetricSeries(tuple(times), np.array(values), s.metric, s.subject)


@dataclass(frozen=True)
class DailyProfile:
    """Metric values folded onto the 24 h clock.

    ``means`` has one entry per bin (NaN where no data fell); p20/p80 are
    two horizontal levels over the set of populated bin means.
    """

    bin_minutes: int
    means: np.ndarray
    p20: float
    p80: float

    @property
    def bin_starts_min(self) -> np.ndarray:
        return np.arange(self.means.size) * self.bin_minutes


def daily_profile(series_list, bin_minutes: int = 15) -> DailyProfile:
    """Fold one or more subjects' series onto the clock and average per bin."""
    series_list = list(series_list)
    if not series_list:
        raise ValueError("need at least one series")
    if 1440 % bin_minutes != 0:
        raise ValueError("bin_minutes must divide 1440")
    n_bins = 1440 // bin_minutes
    sums = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=int)
    for s in series_list:
        for ts, val in zip(s.times, s.values):
            minute = ts.hour * 60 + ts.minute + ts.second / 60.0
            b = int(minute // bin_minutes) % n_bins
            sums[b] += val
            counts[b] += 1
    means = np.full(n_bins, np.nan)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]
    if not np.any(filled):
        raise ValueError("no data in any bin")
    p20, p80 = np.percentile(means[filled], [20, 80])
    return DailyProfile(bin_minutes=bin_minutes, means=means, p20=float(p20), p80=float(p80))


def coupling_correlation(a: MetricSeries, b: MetricSeries) -> TestResult:
    """Pearson r between two metrics over their time-aligned points."""
    common = sorted(set(a.times) & set(b.times))
    if len(common) < 3:
        raise PreconditionError(
            f"need >= 3 common timestamps, got {len(common)}"
        )
    index_a = {t: i for i, t in enumerate(a.times)}
    index_b = {t: i for i, t in enumerate(b.times)}
    va = np.array([a.values[index_a[t]] for t in common])
    vb = np.array([b.values[index_b[t]] for t in common])
    return pearson(va, vb)


def consensus_series(series_list) -> MetricSeries:
    """Per-timestamp mean across subjects, over timestamps common to all."""
    series_list = list(series_list)
    if not series_list:
        raise ValueError("need at least one series")
    common = set(series_list[0].times)
    for s in series_list[1:]:
        common &= set(s.times)
    common = sorted(common)
    if not common:
        raise PreconditionError("subjects share no common timestamps")
    stacked = []
    for s in series_list:
        index = {t: i for i, t in enumerate(s.times)}
        stacked.append([s.values[index[t]] for t in common])
    means = np.mean(np.array(stacked), axis=0)
    return MetricSeries(tuple(common), means, series_list[0].metric, "consensus")


def metric_series_from_summaries(summaries, subject: str = "") -> dict[str, MetricSeries]:
    """Split window summaries into activity and respiration series."""
    summaries = list(summaries)
    if not summaries:
        raise ValueError("no window summaries given")
    times = tuple(s.window_start for s in summaries)
    return {
        "activity": MetricSeries(
            times, np.array([s.activity_index for s in summaries]), "activity", subject
        ),
        "respiration": MetricSeries(
            times, np.array([s.resp_freq_hz for s in summaries]), "respiration", subject
        ),
    }


# ---------------------------------------------------------------------------
# report emission


def write_daily_profile_csv(profile: DailyProfile, photoperiod: Photoperiod, path: Path) -> None:
    """Plot-ready folded profile with percentile levels and dark-phase flags."""
    lines = [PROFILE_CSV_HEADER]
    for b in range(profile.means.size):
        minute = b * profile.bin_minutes
        clock = time(minute // 60, minute % 60)
        mean = profile.means[b]
        mean_txt = "" if math.isnan(mean) else repr(float(mean))
        dark = int(photoperiod.is_dark(clock))
        lines.append(f"{clock.hour:02d}:{clock.minute:02d},{mean_txt},{profile.p20!r},{profile.p80!r},{dark}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def rhythm_report_entry(
    subject: str, metric: str, fit: RhythmFit, weight_g: float | None = None
) -> dict:
    entry = {
        "subject": subject,
        "metric": metric,
        "mesor": fit.mesor,
        "amplitude": fit.amplitude,
        "acrophase_hhmm": fit.acrophase_hhmm,
        "acrophase_h": fit.acrophase_h,
        "acrophase_rad": fit.acrophase_rad,
        "period_h": fit.period_h,
        "rss": fit.rss,
        "n": fit.n,
    }
    if weight_g is not None:
        entry["weight_g"] = weight_g
    return entry


def write_rhythm_report(entries: list[dict], path: Path, coupling: dict | None = None) -> None:
    doc: dict = {"fits": entries}
    if coupling is not None:
        doc["coupling"] = coupling
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_rhythm_report(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"bad rhythm report {path}: {exc}") from None
