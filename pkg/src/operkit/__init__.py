"""operkit: movement analysis for operculum-mounted tri-axial accelerometer tags.

From raw tri-axial records to lognormal movement decomposition, windowed
activity/respiration metrics, daily-rhythm cosinor fits, and group
statistics.
"""

from .errors import InputFormatError, OperkitError, PreconditionError
from .extraction import (
    ExtractionConfig,
    ExtractionResult,
    decompose,
    estimate_initial,
    reconstruction_snr,
    refine_sequence,
)
from .ingest import (
    DriftModel,
    MeasurementWindow,
    Recording,
    ResultBundle,
    SessionInfo,
    correct_clock_drift,
    emit_aefb,
    emit_csv,
    parse_recording,
    persist_results,
    slice_windows,
)
from .kinematics import (
    FilterSpec,
    VelocityTrace,
    body_speed,
    detrend,
    integrate_axis,
    jerk_magnitude,
)
from .lognormal import (
    LognormalComponent,
    LognormalSequence,
    MovementFeatures,
    aggregate_features,
    characteristic_times,
    eval_component,
    eval_sequence,
    shape_features,
)
from .metrics import (
    WindowSummary,
    activity_index,
    respiratory_frequency,
    summarize_window,
)
from .rhythm import (
    DailyProfile,
    MetricSeries,
    Photoperiod,
    RhythmFit,
    cosinor_fit,
    coupling_correlation,
    daily_profile,
    trim_partial_phases,
)
from .stats import TestResult, mann_whitney_u, pearson, t_test
from .synth import (
    SEA_BASS_LIKE,
    SEA_BREAM_LIKE,
    CosinorParams,
    SpeciesProfile,
    synth_accel_session,
    synth_metric_series,
    synth_velocity,
)

__version__ = "0.1.0"
