"""Windowed end-to-end processing: preprocess, screen, locate, decompose, estimate."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySpectrumError, NoDriverError, NumericalError, ValidationError
from .ident import (
    DEFAULT_DRIVER_GATE_M,
    DEFAULT_SEARCH_BAND_HZ,
    ObservationWindow,
    TargetDetection,
    best_lag_centre,
    detect_targets,
    doppler_map,
    extract_sequences,
    is_unstable,
    relative_strength,
    select_driver,
)
from .msvmd import ModeSet, MsVmdConfig, ms_vmd
from .preprocess import FilterSpec, preprocess_frames
from .rf import FrameMatrix
from .vitals import BandConfig, VitalReport, estimate_vitals


@dataclass(frozen=True)
class PipelineConfig:
    filter: FilterSpec = field(default_factory=FilterSpec)
    beta: float = 0.97
    short_window_s: float = 5.0
    short_hop_s: float = 2.5
    long_window_s: float = 20.0
    long_hop_s: float = 10.0
    instability_coefficient: float = 1.2
    detection_coef: float = 1.5
    detection_window_m: float = 0.6
    detection_window_hz: float = 0.16
    search_band_hz: tuple[float, float] = DEFAULT_SEARCH_BAND_HZ
    min_relative_peak: float = 0.1
    driver_gate_m: tuple[float, float] = DEFAULT_DRIVER_GATE_M
    n_lags: int = 5
    msvmd: MsVmdConfig = field(default_factory=lambda: MsVmdConfig(band_limit_hz=5.0))
    bands: BandConfig = field(default_factory=BandConfig)
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValidationError("beta must lie in (0, 1)")
        for name in ("short_window_s", "short_hop_s", "long_window_s", "long_hop_s"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.short_window_s > self.long_window_s:
            raise ValidationError("short window longer than long window")
        if self.n_lags < 1 or self.n_lags % 2 == 0:
            raise ValidationError("n_lags must be a positive odd number")
        if not self.instability_coefficient > 0 or not self.detection_coef > 0:
            raise ValidationError("coefficients must be positive")
        lo, hi = self.driver_gate_m
        if not 0 <= lo <= hi:
            raise ValidationError("driver_gate_m must be an ordered interval")
        lo, hi = self.search_band_hz
        if not 0 <= lo < hi:
            raise ValidationError("search_band_hz must be an ordered interval")
        object.__setattr__(self, "driver_gate_m", (float(self.driver_gate_m[0]), float(self.driver_gate_m[1])))
        object.__setattr__(self, "search_band_hz", (float(self.search_band_hz[0]), float(self.search_band_hz[1])))


@dataclass(frozen=True)
class RunSummary:
    windows_processed: int
    windows_discarded: int
    reports: tuple[VitalReport, ...]
    total_seconds: float
    mean_window_seconds: float
    max_window_seconds: float
    seed: int | None = None

    @property
    def reported(self) -> tuple[VitalReport, ...]:
        return tuple(r for r in self.reports if not r.window_discarded)


def window_starts(n_frames: int, frame_rate_hz: float, window_s: float, hop_s: float) -> list[int]:
    """Start frames of every full window; a recording shorter than one window yields none."""
    size = int(round(window_s * frame_rate_hz))
    hop = max(1, int(round(hop_s * frame_rate_hz)))
    if n_frames < size:
        return []
    return list(range(0, n_frames - size + 1, hop))


def _window(amp, start, size, fs, spacing) -> ObservationWindow:
    return ObservationWindow(amp[start:start + size], fs, spacing, start / fs)


def is_window_unstable(window: ObservationWindow, config: PipelineConfig) -> bool:
    """True if any short window inside ``window`` jumps above the long window's prominence."""
    try:
        b_long = relative_strength(doppler_map(window))
    except EmptySpectrumError:
        return False
    fs = window.frame_rate_hz
    size = int(round(config.short_window_s * fs))
    for start in window_starts(window.n_frames, fs, config.short_window_s, config.short_hop_s):
        short = _window(window.amplitude, start, size, fs, window.bin_spacing_m)
        try:
            b_short = relative_strength(doppler_map(short))
        except EmptySpectrumError:
            continue
        if is_unstable(b_short, b_long, config.instability_coefficient):
            return True
    return False


def locate_driver(window: ObservationWindow, config: PipelineConfig) -> tuple[TargetDetection, int]:
    """Driver detection and the lag-window centre to decompose around."""
    dmap = doppler_map(window)
    targets = detect_targets(
        dmap,
        window_m=config.detection_window_m,
        window_hz=config.detection_window_hz,
        coef=config.detection_coef,
        band_hz=config.search_band_hz,
        min_relative_peak=config.min_relative_peak,
    )
    driver = select_driver(targets, config.driver_gate_m)
    if window.amplitude.shape[1] < config.n_lags:
        raise ValidationError(f"{config.n_lags} lags requested but frames have {window.amplitude.shape[1]} bins")
    centre = best_lag_centre(dmap, driver.fast_time_index, config.n_lags, config.search_band_hz)
    return driver, centre


def _check_finite(amp: np.ndarray) -> None:
    if not np.all(np.isfinite(amp)):
        raise NumericalError("preprocessing produced non-finite values")


def process_frames(frames: FrameMatrix, config: PipelineConfig = PipelineConfig()) -> RunSummary:
    """Run every long window of ``frames`` through the pipeline."""
    t_run = time.perf_counter()
    fs = frames.config.frame_rate_hz
    spacing = frames.config.bin_spacing_m
    amp = preprocess_frames(frames, config.filter, config.beta)
    _check_finite(amp)
    size = int(round(config.long_window_s * fs))

    reports, timings = [], []
    for start in window_starts(frames.n_frames, fs, config.long_window_s, config.long_hop_s):
        t0 = time.perf_counter()
        window = _window(amp, start, size, fs, spacing)
        start_s = frames.start_time_s + window.start_time_s
        if is_window_unstable(window, config):
            reports.append(VitalReport(start_s, window_discarded=True))
        else:
            try:
                driver, centre = locate_driver(window, config)
            except NoDriverError:
                reports.append(VitalReport(start_s, no_respiration_mode=True, no_heartbeat_mode=True))
            else:
                seqs = extract_sequences(window.amplitude, centre, config.n_lags)
                modes = ms_vmd(seqs, config.msvmd, fs)
                if not np.all(np.isfinite(modes.modes)):
                    raise NumericalError("decomposition produced non-finite modes")
                reports.append(estimate_vitals(modes, fs, config.bands, start_s, driver.range_m))
        timings.append(time.perf_counter() - t0)

    discarded = sum(r.window_discarded for r in reports)
    return RunSummary(
        windows_processed=len(reports),
        windows_discarded=discarded,
        reports=tuple(reports),
        total_seconds=time.perf_counter() - t_run,
        mean_window_seconds=float(np.mean(timings)) if timings else 0.0,
        max_window_seconds=float(np.max(timings)) if timings else 0.0,
        seed=config.seed,
    )


@dataclass(frozen=True)
class Decomposition:
    modes: ModeSet
    window_start_s: float
    driver: TargetDetection


def decompose(frames: FrameMatrix, config: PipelineConfig = PipelineConfig()) -> Decomposition:
    """Modes of the driver in the first usable long window.

    Recordings shorter than one long window are treated as a single window.
    """
    fs = frames.config.frame_rate_hz
    amp = preprocess_frames(frames, config.filter, config.beta)
    _check_finite(amp)
    starts = window_starts(frames.n_frames, fs, config.long_window_s, config.long_hop_s)
    size = int(round(config.long_window_s * fs))
    if not starts:
        starts, size = [0], frames.n_frames
    last_error: Exception = NoDriverError("no targets detected")
    for start in starts:
        window = _window(amp, start, size, fs, frames.config.bin_spacing_m)
        if len(starts) > 1 and is_window_unstable(window, config):
            continue
        try:
            driver, centre = locate_driver(window, config)
        except NoDriverError as exc:
            last_error = exc
            continue
        seqs = extract_sequences(window.amplitude, centre, config.n_lags)
        modes = ms_vmd(seqs, config.msvmd, fs)
        if not np.all(np.isfinite(modes.modes)):
            raise NumericalError("decomposition produced non-finite modes")
        return Decomposition(modes, frames.start_time_s + window.start_time_s, driver)
    raise last_error

