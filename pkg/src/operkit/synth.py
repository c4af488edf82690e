"""Synthetic-data generation: forward models for round-trip and pipeline tests.

Velocity traces are the pulse model run forward (optionally with white noise
scaled to an exact SNR). Full acceleration sessions build the z-axis from an
alternating train of breathing pulses whose instantaneous rate follows a
respiration cosinor, and the x/y axes from swimming bursts whose jerk RMS
follows an activity cosinor. All randomness is seeded and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np
from scipy.signal import oaconvolve

from .ingest import Recording, SessionInfo
from .kinematics import VelocityTrace
from .lognormal import LognormalComponent, LognormalSequence, eval_component, eval_sequence
from .rhythm import MetricSeries

DEFAULT_SESSION_START = datetime(2021, 6, 1, 14, 0, tzinfo=timezone.utc)

#: Breathing pulse template parameters (area, log-delay, log-response time).
BREATH_PULSE = (0.03, -0.476, 0.093)


@dataclass(frozen=True)
class CosinorParams:
    """Target daily oscillation: mesor, amplitude, and peak clock hour."""

    mesor: float
    amplitude: float
    acrophase_h: float

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")

    def value(self, clock_h: float | np.ndarray):
        """Evaluate the cosinor at wall-clock hour(s)."""
        w = 2.0 * math.pi / 24.0
        return self.mesor + self.amplitude * np.cos(w * (np.asarray(clock_h) - self.acrophase_h))


@dataclass(frozen=True)
class SpeciesProfile:
    """Daily activity/respiration targets for one simulated species."""

    name: str
    activity: CosinorParams
    respiration: CosinorParams

    def __post_init__(self) -> None:
        if self.activity.mesor <= 0 or self.respiration.mesor <= 0:
            raise ValueError("mesors must be positive")


# Two-species fixtures: coupled acrophases for the first profile, activity
# peaking in the early morning and respiration in the late afternoon for the
# second, whose amplitudes are 1.5x (activity) and 2x (respiration) larger.
SEA_BREAM_LIKE = SpeciesProfile(
    name="sea-bream-like",
    activity=CosinorParams(mesor=0.080, amplitude=0.012, acrophase_h=12.0),
    respiration=CosinorParams(mesor=1.73, amplitude=0.15, acrophase_h=12.5),
)
SEA_BASS_LIKE = SpeciesProfile(
    name="sea-bass-like",
    activity=CosinorParams(mesor=0.057, amplitude=0.018, acrophase_h=6.5),
    respiration=CosinorParams(mesor=1.57, amplitude=0.30, acrophase_h=18.0 + 4.0 / 60.0),
)


def vary_mesors(
    profile: SpeciesProfile,
    rng: np.random.Generator,
    activity_sd: float = 0.0,
    respiration_sd: float = 0.0,
) -> SpeciesProfile:
    """Draw a subject-level profile with normally jittered mesors."""

    def _jitter(params: CosinorParams, sd: float) -> CosinorParams:
        mesor = float(rng.normal(params.mesor, sd)) if sd > 0 else params.mesor
        mesor = max(mesor, params.amplitude * 1.05 + 1e-9)
        return replace(params, mesor=mesor)

    return SpeciesProfile(
        name=profile.name,
        activity=_jitter(profile.activity, activity_sd),
        respiration=_jitter(profile.respiration, respiration_sd),
    )


def synth_velocity(
    seq: LognormalSequence,
    rate_hz: float,
    noise_snr_db: float | None = None,
    duration_s: float | None = None,
    seed: int = 0,
) -> VelocityTrace:
    """Evaluate a pulse train on a uniform grid, optionally adding noise.

    Noise is white Gaussian rescaled so the realized SNR matches
    ``noise_snr_db`` exactly.
    """
    if duration_s is None:
        if len(seq) == 0:
            duration_s = 1.0
        else:
            last_end = max(c.t0 + math.exp(c.mu + 3.0 * c.sigma) for c in seq)
            duration_s = last_end + 0.4
    n = max(2, int(round(duration_s * rate_hz)))
    t = np.arange(n) / rate_hz
    clean = eval_sequence(seq, t)
    if noise_snr_db is None:
        return VelocityTrace(clean, rate_hz, origin="z")
    clean_rms = float(np.sqrt(np.mean(clean**2)))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    noise_rms = float(np.sqrt(np.mean(noise**2)))
    target = clean_rms * 10.0 ** (-noise_snr_db / 20.0)
    if noise_rms > 0 and target > 0:
        noise *= target / noise_rms
    else:
        noise = np.zeros(n)
    return VelocityTrace(clean + noise, rate_hz, origin="z")


def _breath_template(rate_hz: float) -> np.ndarray:
    d, mu, sigma = BREATH_PULSE
    pulse = LognormalComponent(t0=0.0, D=d, mu=mu, sigma=sigma)
    t_end = math.exp(mu + 6.0 * sigma)
    tau = np.arange(1, int(math.ceil(t_end * rate_hz)) + 1) / rate_hz
    return np.asarray(eval_component(pulse, tau))


def _breathing_velocity(
    resp: CosinorParams, start_clock_h: float, n: int, rate_hz: float
) -> np.ndarray:
    """Alternating-sign pulse train whose instantaneous rate tracks the cosinor."""
    impulses = np.zeros(n)
    t = 0.35
    sign = 1.0
    duration = n / rate_hz
    while t < duration:
        idx = int(round(t * rate_hz))
        if idx < n:
            impulses[idx] += sign
        rate_now = max(float(resp.value(start_clock_h + t / 3600.0)), 0.05)
        t += 1.0 / (2.0 * rate_now)
        sign = -sign
    template = _breath_template(rate_hz)
    return oaconvolve(impulses, template)[:n]


def synth_accel_session(
    profile: SpeciesProfile,
    duration_h: float,
    rate_hz: float,
    seed: int = 0,
    start_utc: datetime = DEFAULT_SESSION_START,
    noise_sd_g: float = 1e-5,
    activity_scale: float = 1.0,
    carrier_hz: float = 2.0,
    envelope_s: float = 6.0,
    body_weight_g: float | None = None,
    device_id: str | None = None,
) -> Recording:
    """Generate a full tri-axial session following a species profile.

    The z-axis is the numeric derivative of the breathing-pulse velocity
    train; x/y hold quadrature swimming bursts whose windowed jerk RMS
    equals the activity cosinor (the first-difference gain of the jerk
    estimator is pre-compensated). Constant gravity offsets and white
    sensor noise are added on top.
    """
    if duration_h <= 0 or rate_hz <= 0:
        raise ValueError("duration_h and rate_hz must be positive")
    n = int(round(duration_h * 3600.0 * rate_hz))
    dt = 1.0 / rate_hz
    t = np.arange(n) * dt
    start_clock_h = start_utc.hour + start_utc.minute / 60.0 + start_utc.second / 3600.0
    rng = np.random.default_rng(seed)

    # z: breathing
    vz = _breathing_velocity(profile.respiration, start_clock_h, n, rate_hz)
    az = np.gradient(vz, dt)

    # x/y: swimming bursts; diff_gain is the jerk estimator's response to the carrier
    clock_h = start_clock_h + t / 3600.0
    target = np.maximum(np.asarray(profile.activity.value(clock_h)), 0.0)
    diff_gain = 2.0 * rate_hz * math.sin(math.pi * carrier_hz / rate_hz)
    envelope = np.sin(math.pi * t / envelope_s) ** 2
    amp = target / (activity_scale * diff_gain * math.sqrt(3.0 / 8.0))
    phase = 2.0 * math.pi * carrier_hz * t
    ax = amp * envelope * np.sin(phase)
    ay = amp * envelope * np.cos(phase)

    az = az + 0.5  # constant gravity component on the mounting axis
    if noise_sd_g > 0:
        ax = ax + rng.normal(0.0, noise_sd_g, n)
        ay = ay + rng.normal(0.0, noise_sd_g, n)
        az = az + rng.normal(0.0, noise_sd_g, n)

    session = SessionInfo(
        device_id=device_id or f"synth-{seed:04d}",
        species=profile.name,
        start_utc=start_utc,
        body_weight_g=body_weight_g,
    )
    return Recording(t=t, ax=ax, ay=ay, az=az, rate_hz=rate_hz, session=session)


def synth_metric_series(
    target: CosinorParams,
    sampling_min: float = 15.0,
    duration_h: float = 48.0,
    noise_sd: float = 0.0,
    seed: int = 0,
    start_utc: datetime = DEFAULT_SESSION_START,
    metric: str = "activity",
    subject: str = "",
) -> MetricSeries:
    """Sample a cosinor directly into a metric series (inverse of the fit)."""
    from datetime import timedelta

    n = int(round(duration_h * 60.0 / sampling_min))
    if n < 1:
        raise ValueError("duration too short for the sampling interval")
    start_clock_h = start_utc.hour + start_utc.minute / 60.0 + start_utc.second / 3600.0
    hours = start_clock_h + np.arange(n) * (sampling_min / 60.0)
    values = np.asarray(target.value(hours), dtype=float)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_sd, n)
    times = tuple(start_utc + timedelta(minutes=sampling_min * k) for k in range(n))
    return MetricSeries(times, values, metric, subject)
