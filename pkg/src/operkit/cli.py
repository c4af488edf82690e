"""Command-line pipeline: decompose, monitor, rhythm, compare, synth.

Exit codes: 0 success, 2 input error, 3 precondition violation. With
``--json-errors`` failures are reported as a JSON object on stderr.
All commands are deterministic for fixed inputs, seeds, and config.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import time
from pathlib import Path

import numpy as np

from .errors import InputFormatError, OperkitError, PreconditionError
from .extraction import ExtractionConfig, decompose
from .ingest import (
    DriftModel,
    Recording,
    ResultBundle,
    SessionInfo,
    correct_clock_drift,
    emit_aefb,
    emit_csv,
    load_session_json,
    parse_recording,
    persist_results,
    slice_windows,
    write_session_json,
)
from .kinematics import FilterSpec, VelocityTrace, body_speed, detrend, integrate_axis
from .lognormal import FEATURE_FIELDS, aggregate_features, eval_component, LognormalComponent, shape_features
from .metrics import load_window_csv, summarize_window
from .rhythm import (
    Photoperiod,
    consensus_series,
    cosinor_fit,
    coupling_correlation,
    daily_profile,
    metric_series_from_summaries,
    load_rhythm_report,
    rhythm_report_entry,
    trim_partial_phases,
    write_daily_profile_csv,
    write_rhythm_report,
)
from .stats import mann_whitney_u, pearson, t_test
from .synth import (
    SEA_BASS_LIKE,
    SEA_BREAM_LIKE,
    synth_accel_session,
    vary_mesors,
)

COMPARISON_CSV_HEADER = "metric,group_a,group_b,method,statistic,p_value"

COMPONENT_CSV_HEADER = (
    "trace,t0_s,D,mu,sigma,width_s,rise_s,drop_s,skew,kurtosis"
)


def _parse_clock(text: str) -> time:
    try:
        hh, mm = text.split(":")
        return time(int(hh), int(mm))
    except (ValueError, TypeError):
        raise InputFormatError(f"bad clock time {text!r}; expected HH:MM") from None


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative pipeline settings; file values override these defaults."""

    filter_spec: FilterSpec = FilterSpec(cutoff_hz=1.0, order=2)
    extraction: ExtractionConfig = ExtractionConfig()
    window_period_s: float = 900.0
    window_duration_s: float = 120.0
    photoperiod: Photoperiod = Photoperiod(time(8, 0), time(20, 0))
    activity_scale: float = 1.0
    detrend_enabled: bool = True

    def __post_init__(self) -> None:
        if self.window_duration_s > self.window_period_s:
            raise InputFormatError("window duration_s must not exceed period_s")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {
            "filter",
            "extraction",
            "window",
            "photoperiod",
            "activity_scale",
            "detrend_enabled",
        }
        unknown = set(doc) - known
        if unknown:
            raise InputFormatError(f"unknown config keys: {sorted(unknown)}")
        try:
            filt = doc.get("filter", {})
            extr = doc.get("extraction", {})
            win = doc.get("window", {})
            photo = doc.get("photoperiod", {})
            return cls(
                filter_spec=FilterSpec(
                    cutoff_hz=filt.get("cutoff_hz", 1.0),
                    order=filt.get("order", 2),
                ),
                extraction=ExtractionConfig(
                    snr_target_db=extr.get("snr_target_db", 25.0),
                    max_components=extr.get("max_components"),
                    min_peak_fraction=extr.get("min_peak_fraction", 0.05),
                    refine_max_iter=extr.get("refine_max_iter", 200),
                ),
                window_period_s=win.get("period_s", 900.0),
                window_duration_s=win.get("duration_s", 120.0),
                photoperiod=Photoperiod(
                    lights_on=_parse_clock(photo.get("lights_on", "08:00")),
                    lights_off=_parse_clock(photo.get("lights_off", "20:00")),
                ),
                activity_scale=doc.get("activity_scale", 1.0),
                detrend_enabled=doc.get("detrend_enabled", True),
            )
        except ValueError as exc:
            raise InputFormatError(f"bad config value: {exc}") from None

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InputFormatError(f"config {path} must hold a JSON object")
        return cls.from_dict(doc)


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.from_file(args.config)
    return PipelineConfig()


def _detect_format(path: Path, flag: str) -> str:
    if flag != "auto":
        return flag
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".aefb":
        return "aefb"
    raise InputFormatError(
        f"cannot infer format of {path.name!r}; pass --format csv|aefb"
    )


def _sidecar_path(path: Path) -> Path | None:
    for candidate in (path.with_name(path.stem + ".session.json"), path.parent / "session.json"):
        if candidate.exists():
            return candidate
    return None


def _load_recording(path: Path, format_flag: str) -> tuple[Recording, DriftModel]:
    fmt = _detect_format(path, format_flag)
    drift = DriftModel()
    session = None
    sidecar = _sidecar_path(path)
    if sidecar is not None:
        session, drift = load_session_json(sidecar)
    rec = parse_recording(path, format=fmt, session=session)
    return rec, drift


def _write_lines(path: Path, lines: list[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _json_float(value: float) -> float | None:
    return value if math.isfinite(value) else None


# ---------------------------------------------------------------------------
# decompose


def _trim_transient(v: VelocityTrace) -> VelocityTrace:
    sl = v.steady_slice()
    return VelocityTrace(v.values[sl], v.rate_hz, v.origin, transient_s=0.0)


def _prepared_traces(rec: Recording, cfg: PipelineConfig) -> dict[str, VelocityTrace]:
    vz = integrate_axis(rec.az, rec.rate_hz, "z")
    vx = integrate_axis(rec.ax, rec.rate_hz, "x")
    vy = integrate_axis(rec.ay, rec.rate_hz, "y")
    if cfg.detrend_enabled:
        vz = detrend(vz, cfg.filter_spec)
        vx = detrend(vx, cfg.filter_spec)
        vy = detrend(vy, cfg.filter_spec)
    return {
        "operculum": _trim_transient(vz),
        "body": _trim_transient(body_speed(vx, vy)),
    }


def cmd_decompose(args) -> int:
    cfg = _load_config(args)
    rec, drift = _load_recording(args.input, args.format)
    rec = correct_clock_drift(rec, drift)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    component_rows: list[str] = []
    summary_groups: dict[str, dict[str, tuple[float, float]]] = {}
    trace_docs: dict[str, dict] = {}
    for label, trace in _prepared_traces(rec, cfg).items():
        result = decompose(trace, cfg.extraction)
        if result.zero_trace or len(result.sequence) == 0:
            print(f"warning: {label} trace carries no signal; skipped", file=sys.stderr)
            trace_docs[label] = {"zero_trace": True, "components": []}
            continue
        feats = [shape_features(c) for c in result.sequence]
        for c, f in zip(result.sequence, feats):
            component_rows.append(
                f"{label},{c.t0!r},{c.D!r},{c.mu!r},{c.sigma!r},"
                f"{f.width_s!r},{f.rise_s!r},{f.drop_s!r},{f.skew!r},{f.kurtosis!r}"
            )
        summary_groups[label] = aggregate_features(feats)
        trace_docs[label] = {
            "zero_trace": False,
            "snr_db": _json_float(result.snr_db),
            "residual_rms": result.residual_rms,
            "converged": result.converged,
            "components": [
                {"t0": c.t0, "D": c.D, "mu": c.mu, "sigma": c.sigma}
                for c in result.sequence
            ],
        }

    _write_lines(out_dir / "components.csv", [COMPONENT_CSV_HEADER, *component_rows])
    labels = sorted(summary_groups)
    header = "parameter" + "".join(f",{g}_mean,{g}_sd" for g in labels)
    rows = [header]
    for field in FEATURE_FIELDS:
        cells = [field]
        for g in labels:
            mean, sd = summary_groups[g][field]
            cells += [repr(mean), repr(sd)]
        rows.append(",".join(cells))
    _write_lines(out_dir / "features_summary.csv", rows)
    (out_dir / "extraction.json").write_text(
        json.dumps({"traces": trace_docs}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(out_dir / "components.csv")
    print(out_dir / "features_summary.csv")
    print(out_dir / "extraction.json")
    return 0


# ---------------------------------------------------------------------------
# monitor


def cmd_monitor(args) -> int:
    cfg = _load_config(args)
    rec, drift = _load_recording(args.input, args.format)
    rec = correct_clock_drift(rec, drift)
    windows = slice_windows(rec, (cfg.window_period_s, cfg.window_duration_s))
    if not windows:
        raise PreconditionError(
            f"recording covers no complete {cfg.window_duration_s:.0f} s window"
        )

    def _one(w):
        return summarize_window(w, scale=cfg.activity_scale, filter_spec=cfg.filter_spec)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            summaries = tuple(pool.map(_one, windows))
    else:
        summaries = tuple(_one(w) for w in windows)
    bundle = ResultBundle(session=rec.session, drift=drift, summaries=summaries)
    paths = persist_results(bundle, Path(args.out))
    print(paths["windows"])
    return 0


# ---------------------------------------------------------------------------
# rhythm


def cmd_rhythm(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_metric: dict[str, list] = {"activity": [], "respiration": []}
    entries: list[dict] = []
    for path in args.inputs:
        summaries = load_window_csv(path)
        sidecar = _sidecar_path(Path(path))
        weight = None
        subject = Path(path).stem
        if sidecar is not None:
            session, _ = load_session_json(sidecar)
            weight = session.body_weight_g
            subject = session.device_id
        series = metric_series_from_summaries(summaries, subject=subject)
        for metric, s in series.items():
            trimmed = trim_partial_phases(s, cfg.photoperiod)
            if trimmed.span_h < 24.0:
                raise PreconditionError(
                    f"insufficient span for {subject}/{metric}: "
                    f"{trimmed.span_h:.2f} h after phase trimming"
                )
            per_metric[metric].append(trimmed)
            entries.append(rhythm_report_entry(subject, metric, cosinor_fit(trimmed), weight))

    consensus = {}
    for metric, series_list in per_metric.items():
        cons = consensus_series(series_list)
        consensus[metric] = cons
        entries.append(rhythm_report_entry("consensus", metric, cosinor_fit(cons)))
        profile = daily_profile(series_list, bin_minutes=15)
        write_daily_profile_csv(
            profile, cfg.photoperiod, out_dir / f"profile_{metric}.csv"
        )
    coupling_doc = None
    try:
        coupling = coupling_correlation(consensus["activity"], consensus["respiration"])
        coupling_doc = {
            "pearson_r": coupling.statistic,
            "p_value": coupling.p_value,
            "n_points": coupling.n[0],
        }
    except (PreconditionError, ValueError) as exc:
        print(f"warning: coupling correlation unavailable: {exc}", file=sys.stderr)

    entries.sort(key=lambda e: (e["subject"], e["metric"]))
    write_rhythm_report(entries, out_dir / "rhythm.json", coupling_doc)
    print(out_dir / "rhythm.json")
    return 0


# ---------------------------------------------------------------------------
# compare


def _group_values(report: dict, metric: str) -> tuple[list[float], list[float] | None]:
    mesors = []
    weights = []
    have_all_weights = True
    for entry in report.get("fits", []):
        if entry.get("subject") == "consensus" or entry.get("metric") != metric:
            continue
        mesors.append(float(entry["mesor"]))
        if "weight_g" in entry:
            weights.append(float(entry["weight_g"]))
        else:
            have_all_weights = False
    return mesors, (weights if have_all_weights and weights else None)


def cmd_compare(args) -> int:
    report_a = load_rhythm_report(args.report_a)
    report_b = load_rhythm_report(args.report_b)
    label_a, label_b = args.label_a, args.label_b
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [COMPARISON_CSV_HEADER]
    for metric in ("activity", "respiration"):
        a, weights_a = _group_values(report_a, metric)
        b, weights_b = _group_values(report_b, metric)
        if not a or not b:
            raise PreconditionError(f"both groups need {metric} fits")
        for result in (t_test(a, b), mann_whitney_u(a, b)):
            rows.append(
                f"{metric}_mesor,{label_a},{label_b},{result.method},"
                f"{result.statistic!r},{result.p_value!r}"
            )
        for label, mesors, weights in (
            (label_a, a, weights_a),
            (label_b, b, weights_b),
        ):
            if weights is None or len(weights) != len(mesors):
                print(
                    f"warning: group {label!r} lacks body weights; "
                    f"Pearson row for {metric} omitted",
                    file=sys.stderr,
                )
                continue
            result = pearson(weights, mesors)
            rows.append(
                f"weight_vs_{metric},{label},,{result.method},"
                f"{result.statistic!r},{result.p_value!r}"
            )
    path = out_dir / "comparison.csv"
    _write_lines(path, rows)
    print(path)
    return 0


# ---------------------------------------------------------------------------
# synth


_SPECIES = {"bream": SEA_BREAM_LIKE, "bass": SEA_BASS_LIKE}


def _write_recording(rec: Recording, path: Path, fmt: str) -> None:
    data = emit_csv(rec) if fmt == "csv" else emit_aefb(rec)
    path.write_bytes(data)


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    manifest: dict = {"kind": args.kind, "seed": args.seed, "format": args.format, "files": []}

    if args.kind == "pulse":
        pulse = LognormalComponent(t0=0.1, D=0.1, mu=-0.5, sigma=0.09)
        rate = args.rate_hz
        n = int(round(2.0 * rate))
        t = np.arange(n) / rate
        velocity = np.asarray(eval_component(pulse, t))
        accel = np.gradient(velocity, 1.0 / rate)
        rec = Recording(
            t=t,
            ax=np.zeros(n),
            ay=np.zeros(n),
            az=accel,
            rate_hz=rate,
            session=SessionInfo(device_id=f"pulse-{args.seed:04d}"),
        )
        path = out_dir / f"pulse.{args.format}"
        _write_recording(rec, path, args.format)
        manifest["pulse"] = {"t0": pulse.t0, "D": pulse.D, "mu": pulse.mu, "sigma": pulse.sigma}
        manifest["files"].append(path.name)
    else:
        profile = _SPECIES[args.species]
        for k in range(args.subjects):
            subject_profile = vary_mesors(
                profile, rng, args.activity_sd, args.respiration_sd
            )
            weight = (
                float(rng.normal(args.weight_mean_g, args.weight_mean_g * 0.05))
                if args.weight_mean_g
                else None
            )
            rec = synth_accel_session(
                subject_profile,
                duration_h=args.duration_h,
                rate_hz=args.rate_hz,
                seed=args.seed * 1000 + k,
                body_weight_g=weight,
                device_id=f"{args.species}-{k:02d}",
            )
            stem = f"{args.species}_s{k:02d}"
            path = out_dir / f"{stem}.{args.format}"
            _write_recording(rec, path, args.format)
            write_session_json(rec.session, DriftModel(), out_dir / f"{stem}.session.json")
            manifest["files"].append(path.name)
        manifest["species"] = profile.name
        manifest["subjects"] = args.subjects
        manifest["duration_h"] = args.duration_h
        manifest["rate_hz"] = args.rate_hz
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(out_dir / "manifest.json")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="operkit",
        description="Accelerometer-tag movement analysis pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON pipeline config")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json-errors", action="store_true", help="JSON error reports on stderr")

    p = sub.add_parser("decompose", parents=[common], help="lognormal decomposition + feature tables")
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=("auto", "csv", "aefb"), default="auto")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("monitor", parents=[common], help="windowed activity/respiration summaries")
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=("auto", "csv", "aefb"), default="auto")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("rhythm", parents=[common], help="cosinor fits and daily profiles")
    p.add_argument("inputs", nargs="+", type=Path, help="window CSVs, one per subject")
    p.set_defaults(func=cmd_rhythm)

    p = sub.add_parser("compare", parents=[common], help="group statistics over rhythm reports")
    p.add_argument("report_a", type=Path)
    p.add_argument("report_b", type=Path)
    p.add_argument("--label-a", default="group_a")
    p.add_argument("--label-b", default="group_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic fixtures")
    p.add_argument("--kind", choices=("session", "pulse"), default="session")
    p.add_argument("--species", choices=sorted(_SPECIES), default="bream")
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--duration-h", type=float, default=48.0)
    p.add_argument("--rate-hz", type=float, default=25.0)
    p.add_argument("--format", choices=("csv", "aefb"), default="csv")
    p.add_argument("--activity-sd", type=float, default=0.0)
    p.add_argument("--respiration-sd", type=float, default=0.0)
    p.add_argument("--weight-mean-g", type=float, default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def _report_error(args, exc: Exception) -> None:
    if getattr(args, "json_errors", False):
        doc = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        _report_error(args, exc)
        return 3
    except (InputFormatError, FileNotFoundError, OperkitError) as exc:
        _report_error(args, exc)
        return 2


def entrypoint() -> None:
    sys.exit(main())
