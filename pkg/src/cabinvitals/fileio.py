"""Frame files, JSON scenario/config loaders and report writers.

Frame file layout (little-endian): a fixed header

    magic b"V2IF" | version u16 | K u32 | L u32 |
    frame_rate f64 | fast_time_interval f64 | carrier f64 | bandwidth f64

followed by K*L complex samples stored as interleaved float32 I/Q pairs,
slow time as the major axis.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigParseError, FrameFormatError, UnsupportedVersionError
from .msvmd import ModeSet, MsVmdConfig
from .pipeline import PipelineConfig, RunSummary
from .preprocess import FilterSpec
from .rf import (
    FrameMatrix,
    MotionBurst,
    Oscillation,
    RadioConfig,
    RateStep,
    SimScenario,
    SimTarget,
    TargetTruth,
)
from .vitals import BandConfig, VitalReport

MAGIC = b"V2IF"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHIIdddd")
SAMPLE_DTYPE = np.dtype("<c8")

REPORT_COLUMNS = ("window_start_s", "resp_rpm", "hr_bpm", "n_beats", "mean_ibi_ms", "sdnn_ms", "flags")


def write_frames(path, frames: FrameMatrix) -> None:
    cfg = frames.config
    k, n_bins = frames.samples.shape
    header = HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        k,
        n_bins,
        cfg.frame_rate_hz,
        cfg.fast_time_sample_interval_s,
        cfg.carrier_freq_hz,
        cfg.bandwidth_hz,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(frames.samples, dtype=SAMPLE_DTYPE).tobytes())


def read_frames(path) -> FrameMatrix:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise FrameFormatError(f"{path}: file shorter than the {HEADER.size}-byte header")
    magic, version, k, n_bins, fs, t_n, fc, bw = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: format version {version} is not supported")
    payload = raw[HEADER.size:]
    expected = k * n_bins * SAMPLE_DTYPE.itemsize
    if len(payload) != expected:
        raise FrameFormatError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    if k < 1 or n_bins < 1:
        raise FrameFormatError(f"{path}: empty frame matrix {k}x{n_bins}")
    samples = np.frombuffer(payload, dtype=SAMPLE_DTYPE).reshape(k, n_bins)
    try:
        config = RadioConfig(
            carrier_freq_hz=fc,
            bandwidth_hz=bw,
            frame_rate_hz=fs,
            fast_time_sample_interval_s=t_n,
            fast_time_bins=n_bins,
        )
        return FrameMatrix(samples, config)
    except ValueError as exc:
        raise FrameFormatError(f"{path}: {exc}") from exc


def _load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be an object")
    return data


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build(cls, data, nested: dict | None = None, where: str = ""):
    """Instantiate dataclass ``cls`` from a JSON object, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigParseError(f"{where or cls.__name__}: expected an object")
    nested = nested or {}
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigParseError(f"{where or cls.__name__}: unknown field(s) {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if key in nested:
            kwargs[key] = nested[key](value, path)
        else:
            if isinstance(value, dict):
                raise ConfigParseError(f"{path}: unexpected object")
            kwargs[key] = _tupled(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigParseError(f"{where or cls.__name__}: {exc}") from exc


def _check_numbers(obj, path: str) -> None:
    """Numeric-looking fields must hold numbers, not strings or booleans."""
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if f.name.endswith(("_hz", "_m", "_s", "_std", "_weight", "_step", "_fraction")) or f.name in (
            "beta", "tolerance", "reflectivity", "noise_std", "pulse_amplitude",
        ):
            items = value if isinstance(value, tuple) else (value,)
            for item in items:
                if item is not None and (isinstance(item, bool) or not isinstance(item, (int, float))):
                    raise ConfigParseError(f"{path}{f.name}: expected a number, got {item!r}")


def _osc(value, path):
    if value is None:
        return None
    osc = _build(Oscillation, value, where=path)
    _check_numbers(osc, path + ".")
    return osc


def _list_of(cls):
    def build(value, path):
        if not isinstance(value, list):
            raise ConfigParseError(f"{path}: expected a list")
        items = tuple(_build(cls, v, where=f"{path}[{i}]") for i, v in enumerate(value))
        for i, item in enumerate(items):
            _check_numbers(item, f"{path}[{i}].")
        return items
    return build


def _target(value, path):
    target = _build(
        SimTarget,
        value,
        nested={
            "respiration": _osc,
            "heartbeat": _osc,
            "respiration_steps": _list_of(RateStep),
            "motion_bursts": _list_of(MotionBurst),
        },
        where=path,
    )
    _check_numbers(target, path + ".")
    return target


@dataclasses.dataclass(frozen=True)
class ScenarioFile:
    """A scenario plus the radio it is simulated with.

    ``snr_db``, when given, sets the noise level relative to the vital
    motion instead of an absolute ``noise_std``.
    """

    scenario: SimScenario
    radio: RadioConfig
    snr_db: float | None = None


def parse_scenario(data: dict) -> ScenarioFile:
    data = dict(data)
    radio_data = data.pop("radio", {})
    snr_db = data.pop("snr_db", None)
    if "vibration" in data:
        data["vibration_components"] = data.pop("vibration")
    radio = _build(RadioConfig, radio_data, where="radio")
    _check_numbers(radio, "radio.")
    scenario = _build(
        SimScenario,
        data,
        nested={
            "targets": _list_of_targets,
            "vibration_components": _list_of(Oscillation),
        },
    )
    _check_numbers(scenario, "")
    if snr_db is not None:
        if isinstance(snr_db, bool) or not isinstance(snr_db, (int, float)):
            raise ConfigParseError("snr_db: expected a number")
        if "noise_std" in data:
            raise ConfigParseError("give either noise_std or snr_db, not both")
    if isinstance(scenario.seed, bool) or not isinstance(scenario.seed, int):
        raise ConfigParseError("seed: expected an integer")
    return ScenarioFile(scenario, radio, snr_db)


def _list_of_targets(value, path):
    if not isinstance(value, list):
        raise ConfigParseError(f"{path}: expected a list")
    return tuple(_target(v, f"{path}[{i}]") for i, v in enumerate(value))


def load_scenario(path) -> ScenarioFile:
    return parse_scenario(_load_json(path))


def parse_pipeline_config(data: dict) -> PipelineConfig:
    def sub(cls):
        def build(value, path):
            obj = _build(cls, value, where=path)
            _check_numbers(obj, path + ".")
            return obj
        return build

    config = _build(
        PipelineConfig,
        data,
        nested={"filter": sub(FilterSpec), "msvmd": sub(MsVmdConfig), "bands": sub(BandConfig)},
    )
    _check_numbers(config, "")
    return config


def load_pipeline_config(path) -> PipelineConfig:
    return parse_pipeline_config(_load_json(path))


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def config_to_dict(config: PipelineConfig) -> dict:
    return _plain(config)


def scenario_to_dict(spec: ScenarioFile) -> dict:
    out = _plain(spec.scenario)
    out["vibration"] = out.pop("vibration_components")
    out["radio"] = _plain(spec.radio)
    if spec.snr_db is not None:
        out["snr_db"] = spec.snr_db
        out.pop("noise_std")
    return out


def truth_to_dict(truths: list[TargetTruth], scenario: SimScenario) -> dict:
    return {
        "seed": scenario.seed,
        "noise_std": scenario.noise_std,
        "duration_s": scenario.duration_s,
        "targets": [
            {
                "base_range_m": t.base_range_m,
                "respiratory_rate_rpm": t.respiratory_rate_rpm,
                "heart_rate_bpm": t.heart_rate_bpm,
                "respiration_segments": [list(s) for s in t.respiration_segments],
                "beat_times_s": t.beat_times_s.tolist(),
                "ibi_ms": t.ibi_ms.tolist(),
            }
            for t in truths
        ],
    }


def write_json(path, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_finite(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _finite(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _fmt(value) -> str:
    return "" if value is None else f"{value:.6f}"


def report_row(report: VitalReport) -> list[str]:
    return [
        _fmt(report.window_start_s),
        _fmt(report.respiratory_rate_rpm),
        _fmt(report.heart_rate_bpm),
        str(report.n_beats),
        _fmt(report.mean_ibi_ms),
        _fmt(report.sdnn_ms),
        ";".join(report.flags),
    ]


def sidecar_dir(report_path) -> Path:
    return Path(f"{os.fspath(report_path)}.windows")


def write_report(path, summary: RunSummary) -> Path:
    """CSV with one row per kept window plus a JSON sidecar for every window."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in summary.reported:
            writer.writerow(report_row(report))
    folder = sidecar_dir(path)
    folder.mkdir(parents=True, exist_ok=True)
    for old in folder.glob("window_*.json"):
        old.unlink()
    for i, report in enumerate(summary.reports):
        data = _plain(report)
        data["flags"] = list(report.flags)
        data["n_beats"] = report.n_beats
        data["mean_ibi_ms"] = report.mean_ibi_ms
        data["sdnn_ms"] = report.sdnn_ms
        write_json(folder / f"window_{i:04d}.json", data)
    return folder


def read_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_modes(path, modes: ModeSet) -> None:
    """One column per mode; the header row holds the centre frequencies in Hz."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{f:.6f}" for f in modes.center_freqs_hz])
        for row in modes.modes.T:
            writer.writerow([repr(float(v)) for v in row])


def read_modes(path) -> tuple[np.ndarray, np.ndarray]:
    """(centre frequencies, modes as N x T)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    freqs = np.array([float(v) for v in rows[0]])
    values = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, freqs.size)
    return freqs, values.T
