"""Recording ingestion: file parsing, clock-drift correction, window slicing, persistence.

Two on-disk recording formats are supported:

* CSV with the exact header ``t_s,ax_g,ay_g,az_g`` (decimal point, LF
  newlines, UTF-8).
* AEFB binary: magic ``AEFB``, version u8=1, rate_hz u16 LE, count u32 LE,
  then count x 3 i16 LE samples at 1 LSB = 1/4096 g. Timestamps are
  implicit from zero.

Session metadata travels in a JSON sidecar next to the recording.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InputFormatError

CSV_HEADER = "t_s,ax_g,ay_g,az_g"
AEFB_MAGIC = b"AEFB"
AEFB_VERSION = 1
AEFB_LSB_G = 1.0 / 4096.0
#: Full-scale magnitude of the device format; samples at this level are clipped.
CLIP_LIMIT_G = 32767 * AEFB_LSB_G

# Tolerance on sample placement relative to the nominal grid.
_SPACING_TOL_S = 1e-9
_EDGE_TOL_S = 1e-7


@dataclass(frozen=True)
class SessionInfo:
    """Device/session metadata attached to a recording."""

    device_id: str = "unknown"
    species: str = "unspecified"
    start_utc: datetime = datetime(2000, 1, 1, tzinfo=timezone.utc)
    body_weight_g: float | None = None
    swim_speed_bl_s: float | None = None

    def __post_init__(self) -> None:
        if self.start_utc.tzinfo is None:
            raise ValueError("start_utc must be timezone-aware")


@dataclass(frozen=True)
class DriftModel:
    """Linear clock error: scale in parts-per-million plus constant offset."""

    drift_ppm: float = 0.0
    offset_s: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.drift_ppm) and np.isfinite(self.offset_s)):
            raise ValueError("drift parameters must be finite")
        if abs(self.drift_ppm) >= 10000:
            raise ValueError(f"|drift_ppm| must be < 10000, got {self.drift_ppm}")


@dataclass(frozen=True)
class Recording:
    """Uniformly sampled tri-axial acceleration record.

    ``t`` is seconds since session start; accelerations are in g.
    Timestamps must be strictly increasing with spacing 1/rate_hz.
    """

    t: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    rate_hz: float
    session: SessionInfo = SessionInfo()

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("t", "ax", "ay", "az"):
            arrays[name] = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arrays[name])
        n = arrays["t"].size
        if n == 0:
            raise ValueError("recording must contain at least one sample")
        if any(a.size != n for a in arrays.values()):
            raise ValueError("axis arrays must all have the same length")
        if not (self.rate_hz > 0 and np.isfinite(self.rate_hz)):
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        for name, a in arrays.items():
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite values in {name}")
        if n > 1:
            dt = np.diff(arrays["t"])
            if np.any(dt <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if np.max(np.abs(dt - 1.0 / self.rate_hz)) > _SPACING_TOL_S:
                raise ValueError(
                    f"sample spacing deviates from 1/rate_hz by more than {_SPACING_TOL_S} s"
                )

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def duration_s(self) -> float:
        """Covered span including the final sample interval."""
        return self.n_samples / self.rate_hz


@dataclass(frozen=True)
class MeasurementWindow:
    """A complete slice of a recording: exactly round(duration * rate) samples."""

    start_s: float
    duration_s: float
    t: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    rate_hz: float
    session: SessionInfo

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        expected = int(round(self.duration_s * self.rate_hz))
        if self.t.size != expected:
            raise ValueError(
                f"window holds {self.t.size} samples, expected {expected}"
            )

    @property
    def start_utc(self) -> datetime:
        from datetime import timedelta

        return self.session.start_utc + timedelta(seconds=self.start_s)


# ---------------------------------------------------------------------------
# parsing / emitting


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else bytes(data)
    raise TypeError(f"unsupported source type: {type(source)!r}")


def _snap_rate(raw: float) -> float:
    nearest = round(raw)
    if nearest > 0 and abs(raw - nearest) <= 1e-6 * max(1.0, abs(raw)):
        return float(nearest)
    return raw


def parse_recording(source, format: str = "csv", session: SessionInfo | None = None) -> Recording:
    """Parse a recording from a path, bytes, or binary stream.

    Args:
        source: file path, raw bytes, or a readable object.
        format: ``"csv"`` or ``"aefb"``.
        session: metadata to attach (a placeholder is used when omitted).

    Raises:
        InputFormatError: malformed header/magic, non-monotonic time,
            sample-count mismatch, or unknown format version.
    """
    data = _read_bytes(source)
    session = session or SessionInfo()
    if format == "csv":
        return _parse_csv(data, session)
    if format == "aefb":
        return _parse_aefb(data, session)
    raise ValueError(f"unknown format {format!r}; expected 'csv' or 'aefb'")


def _parse_csv(data: bytes, session: SessionInfo) -> Recording:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputFormatError(f"CSV is not valid UTF-8: {exc}") from None
    lines = text.split("\n")
    if not lines or lines[0].rstrip("\r") != CSV_HEADER:
        got = lines[0][:60] if lines else ""
        raise InputFormatError(f"malformed header: expected {CSV_HEADER!r}, got {got!r}")
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) < 2:
        raise InputFormatError("CSV must contain at least 2 sample rows")
    cols = np.empty((len(rows), 4), dtype=float)
    for i, row in enumerate(rows):
        parts = row.rstrip("\r").split(",")
        if len(parts) != 4:
            raise InputFormatError(f"row {i + 2}: expected 4 fields, got {len(parts)}")
        try:
            cols[i] = [float(p) for p in parts]
        except ValueError:
            raise InputFormatError(f"row {i + 2}: non-numeric value in {row!r}") from None
    t = cols[:, 0]
    if np.any(np.diff(t) <= 0):
        raise InputFormatError("non-monotonic time column")
    rate = _snap_rate((len(rows) - 1) / (t[-1] - t[0]))
    try:
        return Recording(t, cols[:, 1], cols[:, 2], cols[:, 3], rate, session)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from None


def _parse_aefb(data: bytes, session: SessionInfo) -> Recording:
    header = struct.Struct("<4sBHI")
    if len(data) < header.size:
        raise InputFormatError("AEFB stream shorter than its header")
    magic, version, rate, count = header.unpack_from(data)
    if magic != AEFB_MAGIC:
        raise InputFormatError(f"bad magic {magic!r}, expected {AEFB_MAGIC!r}")
    if version != AEFB_VERSION:
        raise InputFormatError(f"unknown format version {version}")
    if rate == 0:
        raise InputFormatError("declared rate_hz is zero")
    payload = data[header.size :]
    if len(payload) != 6 * count:
        raise InputFormatError(
            f"sample-count mismatch: declared {count} triplets, "
            f"payload holds {len(payload) // 6}"
        )
    if count == 0:
        raise InputFormatError("AEFB stream declares zero samples")
    raw = np.frombuffer(payload, dtype="<i2").astype(float).reshape(count, 3)
    t = np.arange(count, dtype=float) / rate
    vals = raw * AEFB_LSB_G
    try:
        return Recording(t, vals[:, 0], vals[:, 1], vals[:, 2], float(rate), session)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from None


def emit_csv(rec: Recording) -> bytes:
    """Serialize to the CSV interchange format at full float precision."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i in range(rec.n_samples):
        buf.write(
            f"{rec.t[i]!r},{rec.ax[i]!r},{rec.ay[i]!r},{rec.az[i]!r}\n"
        )
    return buf.getvalue().encode("utf-8")


def emit_aefb(rec: Recording) -> bytes:
    """Serialize to the AEFB binary format.

    The format stores integer rates and implicit timestamps from zero, so
    the recording must start at t=0 and have an integral rate; accelerations
    must fit the +/-8 g signed 16-bit range.
    """
    rate = int(round(rec.rate_hz))
    if not (1 <= rate <= 0xFFFF) or abs(rec.rate_hz - rate) > 1e-9:
        raise ValueError(f"AEFB requires an integer rate in [1, 65535], got {rec.rate_hz}")
    if abs(rec.t[0]) > _EDGE_TOL_S:
        raise ValueError("AEFB timestamps are implicit from zero; recording must start at t=0")
    stacked = np.column_stack([rec.ax, rec.ay, rec.az])
    quantized = np.round(stacked / AEFB_LSB_G)
    if np.any(np.abs(quantized) > 32767):
        raise ValueError("acceleration exceeds the AEFB full scale of +/-8 g")
    out = bytearray()
    out += struct.pack("<4sBHI", AEFB_MAGIC, AEFB_VERSION, rate, rec.n_samples)
    out += quantized.astype("<i2").tobytes()
    return bytes(out)


# ---------------------------------------------------------------------------
# clock drift and windowing


def correct_clock_drift(rec: Recording, model: DriftModel) -> Recording:
    """Apply t' = t * (1 + drift_ppm * 1e-6) + offset_s.

    The rate metadata is rescaled so the spacing invariant keeps holding.
    A (0, 0) model is the identity.
    """
    scale = 1.0 + model.drift_ppm * 1e-6
    if model.drift_ppm == 0.0 and model.offset_s == 0.0:
        return rec
    return replace(rec, t=rec.t * scale + model.offset_s, rate_hz=rec.rate_hz / scale)


def slice_windows(rec: Recording, schedule: tuple[float, float]) -> list[MeasurementWindow]:
    """Cut complete measurement windows at every multiple of the period.

    Args:
        schedule: (period_s, duration_s); windows start at k * period_s in
            session time, k >= 0. Only windows containing their full sample
            count are returned, in order.
    """
    period, duration = schedule
    if duration <= 0:
        raise ValueError("duration_s must be positive")
    if duration > period:
        raise ValueError(f"duration {duration} s exceeds period {period} s")
    n_expected = int(round(duration * rec.rate_hz))
    dt = 1.0 / rec.rate_hz
    end = rec.t[-1] + dt
    windows: list[MeasurementWindow] = []
    k = max(0, int(np.floor((rec.t[0] - _EDGE_TOL_S) / period)))
    while True:
        start = k * period
        if start + duration > end + _EDGE_TOL_S:
            break
        i0 = int(np.searchsorted(rec.t, start - _EDGE_TOL_S, side="left"))
        i1 = int(np.searchsorted(rec.t, start + duration - _EDGE_TOL_S, side="left"))
        if i1 - i0 == n_expected:
            windows.append(
                MeasurementWindow(
                    start_s=start,
                    duration_s=duration,
                    t=rec.t[i0:i1],
                    ax=rec.ax[i0:i1],
                    ay=rec.ay[i0:i1],
                    az=rec.az[i0:i1],
                    rate_hz=rec.rate_hz,
                    session=rec.session,
                )
            )
        k += 1
    return windows


# ---------------------------------------------------------------------------
# persistence


@dataclass(frozen=True)
class ResultBundle:
    """Analysis outputs destined for disk: window summaries plus metadata."""

    session: SessionInfo
    drift: DriftModel = DriftModel()
    summaries: tuple = ()


def session_to_dict(session: SessionInfo, drift: DriftModel | None = None) -> dict:
    doc = {
        "device_id": session.device_id,
        "species": session.species,
        "start_utc": session.start_utc.isoformat(),
        "body_weight_g": session.body_weight_g,
        "swim_speed_bl_s": session.swim_speed_bl_s,
    }
    if drift is not None:
        doc["drift"] = {"drift_ppm": drift.drift_ppm, "offset_s": drift.offset_s}
    return doc


def session_from_dict(doc: dict) -> tuple[SessionInfo, DriftModel]:
    try:
        session = SessionInfo(
            device_id=doc["device_id"],
            species=doc["species"],
            start_utc=datetime.fromisoformat(doc["start_utc"]),
            body_weight_g=doc.get("body_weight_g"),
            swim_speed_bl_s=doc.get("swim_speed_bl_s"),
        )
        drift_doc = doc.get("drift") or {}
        drift = DriftModel(
            drift_ppm=drift_doc.get("drift_ppm", 0.0),
            offset_s=drift_doc.get("offset_s", 0.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"bad session sidecar: {exc}") from None
    return session, drift


def write_session_json(session: SessionInfo, drift: DriftModel, path: Path) -> None:
    doc = session_to_dict(session, drift)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_session_json(path: Path) -> tuple[SessionInfo, DriftModel]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"bad session sidecar {path}: {exc}") from None
    return session_from_dict(doc)


def persist_results(bundle: ResultBundle, out_dir: Path) -> dict[str, Path]:
    """Write the bundle as bit-stable CSV/JSON files under ``out_dir``.

    Re-reading the files round-trips every value at full precision; writing
    the same bundle twice produces byte-identical output.
    """
    from .metrics import write_window_csv  # runtime import: metrics depends on this module

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "windows": out_dir / "windows.csv",
        "session": out_dir / "session.json",
    }
    write_window_csv(bundle.summaries, paths["windows"])
    write_session_json(bundle.session, bundle.drift, paths["session"])
    return paths
