"""Lognormal movement pulses: evaluation, characteristic times, shape features.

A single rapid movement (one operculum opening or closing, one tail stroke)
is modeled as a velocity pulse with lognormal shape in time, parameterized
by its occurrence time ``t0``, pulse area ``D``, log-time delay ``mu`` and
log-domain response time ``sigma``. Sums of such pulses model full movement
traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Field order used by feature tables and aggregation.
FEATURE_FIELDS = ("width_s", "rise_s", "drop_s", "skew", "kurtosis", "mu", "sigma", "D")


@dataclass(frozen=True)
class LognormalComponent:
    """One elemental movement pulse.

    Attributes:
        t0: occurrence time in seconds (support starts here).
        D: area under the velocity pulse (distance run by the movement).
        mu: log-time delay, in log-seconds.
        sigma: log-domain response time (dimensionless, > 0).
    """

    t0: float
    D: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        vals = (self.t0, self.D, self.mu, self.sigma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"component parameters must be finite, got {vals}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.D <= 0:
            raise ValueError(f"D must be > 0, got {self.D}")


@dataclass(frozen=True)
class LognormalSequence:
    """An ordered train of movement pulses, kept sorted by occurrence time."""

    components: tuple[LognormalComponent, ...] = ()

    def __post_init__(self) -> None:
        comps = tuple(sorted(self.components, key=lambda c: c.t0))
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]


@dataclass(frozen=True)
class MovementFeatures:
    """The eight per-movement parameters derived from one pulse.

    ``width_s = rise_s + drop_s`` holds exactly by construction.
    """

    width_s: float
    rise_s: float
    drop_s: float
    skew: float
    kurtosis: float
    mu: float
    sigma: float
    D: float

    def __post_init__(self) -> None:
        if self.rise_s <= 0 or self.drop_s <= 0:
            raise ValueError("rise and drop times must be positive")
        if abs(self.width_s - (self.rise_s + self.drop_s)) > 1e-12:
            raise ValueError("width must equal rise + drop")
        if self.kurtosis < 3.0:
            raise ValueError(f"kurtosis must be >= 3, got {self.kurtosis}")
        if self.skew < 0.0:
            raise ValueError(f"skew must be >= 0, got {self.skew}")


def eval_component(c: LognormalComponent, t: float | np.ndarray) -> float | np.ndarray:
    """Evaluate one pulse at time(s) ``t``.

    Zero for ``t <= t0``; positive with a single maximum for ``t > t0``.
    Returns a scalar for scalar input, an array otherwise.
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    tau = t_arr - c.t0
    m = tau > 0.0
    if np.any(m):
        tm = tau[m]
        logdev = np.log(tm) - c.mu
        out[m] = (
            c.D
            / (c.sigma * _SQRT_2PI * tm)
            * np.exp(-(logdev**2) / (2.0 * c.sigma**2))
        )
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def eval_sequence(s: LognormalSequence, grid: np.ndarray) -> np.ndarray:
    """Pointwise sum of all pulses over an increasing time grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("grid must be one-dimensional")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    total = np.zeros_like(grid)
    for c in s:
        total += eval_component(c, grid)
    return total


def characteristic_times(c: LognormalComponent) -> tuple[float, float, float]:
    """Movement start, velocity peak and movement end times (t1, t2, t3).

    t1/t3 sit at the +/-3 sigma log-time support bounds (99.7% of the pulse
    mass); t2 is the velocity mode.
    """
    t1 = c.t0 + math.exp(c.mu - 3.0 * c.sigma)
    t2 = c.t0 + math.exp(c.mu - c.sigma**2)
    t3 = c.t0 + math.exp(c.mu + 3.0 * c.sigma)
    return t1, t2, t3


def shape_features(c: LognormalComponent) -> MovementFeatures:
    """Compute the eight movement parameters for one pulse.

    Skew and kurtosis come from the closed-form lognormal moments, so they
    depend on sigma only; both tend to the Gaussian limits (0, 3) as
    sigma -> 0.
    """
    t1, t2, t3 = characteristic_times(c)
    rise = t2 - t1
    drop = t3 - t2
    es = math.exp(c.sigma**2)
    skew = (es + 2.0) * math.sqrt(es - 1.0)
    kurtosis = es**4 + 2.0 * es**3 + 3.0 * es**2 - 3.0
    return MovementFeatures(
        width_s=rise + drop,
        rise_s=rise,
        drop_s=drop,
        skew=skew,
        kurtosis=max(kurtosis, 3.0),
        mu=c.mu,
        sigma=c.sigma,
        D=c.D,
    )


def aggregate_features(
    features: Sequence[MovementFeatures] | Iterable[MovementFeatures],
) -> dict[str, tuple[float, float]]:
    """Per-field mean and sample (n-1) standard deviation.

    Returns a mapping field name -> (mean, sd). SD is 0 for a single element.
    Raises ValueError on an empty input.
    """
    feats = list(features)
    if not feats:
        raise ValueError("cannot aggregate an empty feature list")
    out: dict[str, tuple[float, float]] = {}
    for name in FEATURE_FIELDS:
        col = np.array([getattr(f, name) for f in feats], dtype=float)
        mean = float(col.mean())
        sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
        out[name] = (mean, sd)
    return out
