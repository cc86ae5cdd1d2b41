"""Respiration and heart rate from decomposed modes, plus beat segmentation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySpectrumError, InsufficientSamplesError, ValidationError
from .msvmd import ModeSet

HR_LIMITS_BPM = (30.0, 180.0)


@dataclass(frozen=True)
class BandConfig:
    respiration_band_hz: tuple[float, float] = (0.16, 0.6)
    heartbeat_band_hz: tuple[float, float] = (1.0, 2.0)
    ibi_min_fraction: float = 0.7
    merge_tolerance_hz: float = 0.02

    def __post_init__(self):
        r, h = tuple(map(float, self.respiration_band_hz)), tuple(map(float, self.heartbeat_band_hz))
        for lo, hi in (r, h):
            if not 0 <= lo < hi:
                raise ValidationError("bands need 0 <= lower < upper")
        if r[0] < h[1] and h[0] < r[1]:
            raise ValidationError("respiration and heartbeat bands overlap")
        if not 0 < self.ibi_min_fraction < 1:
            raise ValidationError("ibi_min_fraction must lie in (0, 1)")
        if self.merge_tolerance_hz < 0:
            raise ValidationError("merge_tolerance_hz must be non-negative")
        object.__setattr__(self, "respiration_band_hz", r)
        object.__setattr__(self, "heartbeat_band_hz", h)


@dataclass(frozen=True)
class VitalReport:
    window_start_s: float
    respiratory_rate_rpm: float | None = None
    heart_rate_bpm: float | None = None
    beat_times_s: tuple[float, ...] = ()
    ibi_ms: tuple[float, ...] = ()
    no_respiration_mode: bool = False
    no_heartbeat_mode: bool = False
    window_discarded: bool = False
    driver_range_m: float | None = None

    @property
    def n_beats(self) -> int:
        return len(self.beat_times_s)

    @property
    def mean_ibi_ms(self) -> float | None:
        return float(np.mean(self.ibi_ms)) if self.ibi_ms else None

    @property
    def sdnn_ms(self) -> float | None:
        return sdnn(self.ibi_ms) if len(self.ibi_ms) >= 2 else None

    @property
    def flags(self) -> tuple[str, ...]:
        names = ("no_respiration_mode", "no_heartbeat_mode", "window_discarded")
        return tuple(n for n in names if getattr(self, n))


def _peak_spectrum(x: np.ndarray, frame_rate_hz: float, zero_pad: int = 4):
    x = np.asarray(x, dtype=float)
    n_fft = zero_pad * x.size
    mag = np.abs(np.fft.rfft(x * np.hanning(x.size), n=n_fft))
    mag[0] = 0.0
    return mag, np.fft.rfftfreq(n_fft, 1.0 / frame_rate_hz)


def _parabolic_offset(mag: np.ndarray, k: int) -> float:
    if 0 < k < mag.size - 1:
        a, b, c = mag[k - 1], mag[k], mag[k + 1]
        denom = a - 2.0 * b + c
        if denom != 0:
            return 0.5 * (a - c) / denom
    return 0.0


def spectral_peak(x, frame_rate_hz: float) -> tuple[float, float]:
    """(frequency, magnitude) of the largest non-DC spectral bin, parabolically refined."""
    mag, freqs = _peak_spectrum(x, frame_rate_hz)
    k = int(np.argmax(mag))
    return float(freqs[k] + _parabolic_offset(mag, k) * (freqs[1] - freqs[0])), float(mag[k])


def merge_duplicate_modes(modes: ModeSet, tolerance_hz: float) -> ModeSet:
    """Sum modes whose centre frequencies lie within ``tolerance_hz`` of their neighbour.

    Two modes that settle on the same component split its energy between
    them, and each half has a skewed spectral peak.
    """
    freqs = np.asarray(modes.center_freqs_hz, dtype=float)
    if freqs.size < 2:
        return modes
    groups = [[0]]
    for k in range(1, freqs.size):
        if freqs[k] - freqs[groups[-1][-1]] <= tolerance_hz:
            groups[-1].append(k)
        else:
            groups.append([k])
    if len(groups) == freqs.size:
        return modes
    waves = np.array([modes.modes[g].sum(axis=0) for g in groups])
    centres = np.empty(len(groups))
    for n, g in enumerate(groups):
        energy = np.sum(modes.modes[g] ** 2, axis=1)
        centres[n] = np.average(freqs[g], weights=energy) if energy.sum() > 0 else freqs[g].mean()
    degenerate = tuple(all(modes.degenerate[k] for k in g) for g in groups) if modes.degenerate else ()
    return replace(modes, modes=waves, center_freqs_hz=centres, degenerate=degenerate)


def select_mode(modes, band_hz, frame_rate_hz: float, exclude: int | None = None) -> int | None:
    """Index of the mode whose spectral peak lies in ``band_hz`` with the most power."""
    waves = modes.modes if isinstance(modes, ModeSet) else np.atleast_2d(modes)
    if waves.shape[0] == 0:
        raise ValidationError("no modes to select from")
    best, best_mag = None, -1.0
    for k, wave in enumerate(waves):
        if k == exclude:
            continue
        freq, mag = spectral_peak(wave, frame_rate_hz)
        if band_hz[0] <= freq <= band_hz[1] and mag > best_mag:
            best, best_mag = k, mag
    return best


def rate_from_mode(mode, frame_rate_hz: float, min_duration_s: float = 4.0) -> float:
    """Dominant frequency of ``mode`` in cycles per minute.

    Hann taper, 4x zero padding and a parabolic fit through the peak bin
    and its neighbours.
    """
    mode = np.asarray(mode, dtype=float)
    if mode.size < min_duration_s * frame_rate_hz:
        raise InsufficientSamplesError(f"need at least {min_duration_s} s of samples")
    if not np.any(mode != 0):
        raise EmptySpectrumError("mode has no energy")
    return 60.0 * spectral_peak(mode, frame_rate_hz)[0]


def min_beat_distance(hr_bpm: float, frame_rate_hz: float, fraction: float = 0.7) -> int:
    """Minimum samples between beats: a fraction of the expected interval."""
    return int(round(fraction * frame_rate_hz * 60.0 / hr_bpm))


def detect_beats(heart_mode, hr_bpm: float, frame_rate_hz: float, fraction: float = 0.7) -> np.ndarray:
    """Indices of samples that dominate their +-d_min neighbourhood.

    Ties go to the earlier sample, the first and last samples never count,
    so consecutive beats are always more than d_min apart.
    """
    lo, hi = HR_LIMITS_BPM
    if not lo < hr_bpm < hi:
        raise ValidationError(f"heart rate {hr_bpm} bpm outside ({lo}, {hi})")
    x = np.asarray(heart_mode, dtype=float)
    d = min_beat_distance(hr_bpm, frame_rate_hz, fraction)
    if x.size < 2 * d:
        raise InsufficientSamplesError(f"{x.size} samples, need at least {2 * d}")
    padded = np.concatenate([np.full(d, -np.inf), x, np.full(d, -np.inf)])
    view = sliding_window_view(padded, d)
    before = view[: x.size].max(axis=1)
    after = view[d + 1: d + 1 + x.size].max(axis=1)
    hits = (x > before) & (x >= after)
    hits[0] = hits[-1] = False
    return np.flatnonzero(hits)


def ibi_series(beat_indices, frame_rate_hz: float) -> np.ndarray:
    """Interbeat intervals in milliseconds."""
    idx = np.asarray(beat_indices)
    if idx.size < 2:
        raise InsufficientSamplesError("need at least two beats")
    return np.diff(idx) * 1000.0 / frame_rate_hz


def sdnn(ibi_ms) -> float:
    """Sample standard deviation of the intervals."""
    ibi = np.asarray(ibi_ms, dtype=float)
    if ibi.size < 2:
        raise InsufficientSamplesError("need at least two intervals")
    return float(np.std(ibi, ddof=1))


def estimate_vitals(
    modes: ModeSet,
    frame_rate_hz: float,
    bands: BandConfig = BandConfig(),
    window_start_s: float = 0.0,
    driver_range_m: float | None = None,
) -> VitalReport:
    """Pick the respiration and heartbeat modes and turn them into rates and beats."""
    modes = merge_duplicate_modes(modes, bands.merge_tolerance_hz)
    resp_idx = select_mode(modes, bands.respiration_band_hz, frame_rate_hz)
    heart_idx = select_mode(modes, bands.heartbeat_band_hz, frame_rate_hz, exclude=resp_idx)
    resp = rate_from_mode(modes.modes[resp_idx], frame_rate_hz) if resp_idx is not None else None
    heart = rate_from_mode(modes.modes[heart_idx], frame_rate_hz) if heart_idx is not None else None

    beats: tuple[float, ...] = ()
    ibi: tuple[float, ...] = ()
    if heart is not None and HR_LIMITS_BPM[0] < heart < HR_LIMITS_BPM[1]:
        try:
            idx = detect_beats(modes.modes[heart_idx], heart, frame_rate_hz, bands.ibi_min_fraction)
        except InsufficientSamplesError:
            idx = np.empty(0, dtype=int)
        beats = tuple(float(window_start_s + i / frame_rate_hz) for i in idx)
        if idx.size >= 2:
            ibi = tuple(float(v) for v in ibi_series(idx, frame_rate_hz))
    return VitalReport(
        window_start_s=window_start_s,
        respiratory_rate_rpm=resp,
        heart_rate_bpm=heart,
        beat_times_s=beats,
        ibi_ms=ibi,
        no_respiration_mode=resp_idx is None,
        no_heartbeat_mode=heart_idx is None,
        driver_range_m=driver_range_m,
    )
