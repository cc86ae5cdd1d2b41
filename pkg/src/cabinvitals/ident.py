"""Occupant localisation and window screening on slow-time Doppler maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptySpectrumError, NoDriverError, ValidationError

DEFAULT_SEARCH_BAND_HZ = (0.16, 2.0)
DEFAULT_DRIVER_GATE_M = (0.3, 1.2)


@dataclass(frozen=True)
class ObservationWindow:
    """Slice of the amplitude matrix (frames x bins) starting at ``start_time_s``."""

    amplitude: np.ndarray
    frame_rate_hz: float
    bin_spacing_m: float
    start_time_s: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=float)
        if amp.ndim != 2 or amp.shape[0] < 2 or amp.shape[1] < 1:
            raise ValidationError("window needs at least 2 frames and 1 bin")
        if not self.frame_rate_hz > 0 or not self.bin_spacing_m > 0:
            raise ValidationError("frame_rate_hz and bin_spacing_m must be positive")
        object.__setattr__(self, "amplitude", amp)

    @property
    def n_frames(self) -> int:
        return self.amplitude.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.frame_rate_hz


@dataclass(frozen=True)
class DopplerMap:
    """Magnitude over (range bin, Doppler frequency); the DC column is dropped."""

    magnitude: np.ndarray
    freq_axis_hz: np.ndarray
    range_axis_m: np.ndarray

    @property
    def freq_step_hz(self) -> float:
        return float(self.freq_axis_hz[1] - self.freq_axis_hz[0]) if self.freq_axis_hz.size > 1 else float(self.freq_axis_hz[0])

    @property
    def bin_spacing_m(self) -> float:
        return float(self.range_axis_m[1] - self.range_axis_m[0]) if self.range_axis_m.size > 1 else 1.0

    def band(self, lo_hz: float, hi_hz: float) -> "DopplerMap":
        keep = (self.freq_axis_hz >= lo_hz) & (self.freq_axis_hz <= hi_hz)
        return DopplerMap(self.magnitude[:, keep], self.freq_axis_hz[keep], self.range_axis_m)


@dataclass(frozen=True)
class TargetDetection:
    fast_time_index: int
    range_m: float
    peak_freq_hz: float
    peak_amplitude: float


def doppler_map(window: ObservationWindow, zero_pad: int = 4) -> DopplerMap:
    """Per-bin magnitude spectrum of the mean-removed, Hann-tapered slow-time series."""
    x = window.amplitude - window.amplitude.mean(axis=0)
    x = x * np.hanning(window.n_frames)[:, None]
    n_fft = zero_pad * window.n_frames
    spec = np.abs(np.fft.rfft(x, n=n_fft, axis=0))[1:].T
    freqs = np.fft.rfftfreq(n_fft, 1.0 / window.frame_rate_hz)[1:]
    ranges = np.arange(window.amplitude.shape[1]) * window.bin_spacing_m
    return DopplerMap(spec, freqs, ranges)


def relative_strength(dmap: DopplerMap) -> float:
    """Peak cell over mean cell of the map."""
    mag = np.asarray(dmap.magnitude)
    if mag.size == 0:
        raise EmptySpectrumError("map has no cells")
    mean = float(mag.mean())
    if not mean > 0:
        raise EmptySpectrumError("map carries no energy")
    return float(mag.max()) / mean


def is_unstable(b_short: float, b_long: float, coefficient: float = 1.2) -> bool:
    """True when the short window's peak prominence jumps above the long one's."""
    if not (b_short > 0 and b_long > 0):
        raise ValidationError("relative strengths must be positive")
    return bool(b_short > coefficient * b_long)


def odd_cells(extent: float, step: float) -> int:
    """Nearest odd cell count covering ``extent``, at least 3."""
    n = 2 * int(np.floor((extent / step - 1.0) / 2.0 + 0.5)) + 1
    return max(3, n)


def detect_targets(
    dmap: DopplerMap,
    window_m: float = 0.6,
    window_hz: float = 0.16,
    coef: float = 1.5,
    band_hz: tuple[float, float] | None = DEFAULT_SEARCH_BAND_HZ,
    guard_cells: int = 1,
    min_relative_peak: float = 0.1,
    min_separation_m: float = 0.6,
) -> list[TargetDetection]:
    """Peak-average detection over a sliding range x Doppler window.

    A cell is declared when it exceeds ``coef`` times the mean of its window
    (the cell and a guard ring excluded), is the window maximum and reaches
    ``min_relative_peak`` of the map peak. Detections closer than
    ``min_separation_m`` keep only the strongest. Sorted by range.
    """
    if band_hz is not None:
        dmap = dmap.band(*band_hz)
    mag = np.asarray(dmap.magnitude, dtype=float)
    if mag.size == 0 or not np.any(mag > 0):
        return []
    nr = odd_cells(window_m, dmap.bin_spacing_m)
    nf = odd_cells(window_hz, dmap.freq_step_hz)
    g = 2 * guard_cells + 1
    outer = ndimage.uniform_filter(mag, size=(nr, nf), mode="reflect") * (nr * nf)
    inner = ndimage.uniform_filter(mag, size=(g, g), mode="reflect") * (g * g)
    th_motion = (outer - inner) / (nr * nf - g * g)
    is_peak = mag >= ndimage.maximum_filter(mag, size=(nr, nf), mode="reflect")
    hits = (mag > coef * th_motion) & is_peak & (mag >= min_relative_peak * mag.max())

    rows, cols = np.nonzero(hits)
    order = np.argsort(-mag[rows, cols], kind="stable")
    kept: list[TargetDetection] = []
    for k in order:
        i, j = int(rows[k]), int(cols[k])
        r = float(dmap.range_axis_m[i])
        if any(abs(r - d.range_m) < min_separation_m for d in kept):
            continue
        kept.append(TargetDetection(i, r, float(dmap.freq_axis_hz[j]), float(mag[i, j])))
    return sorted(kept, key=lambda d: d.range_m)


def select_driver(
    targets: list[TargetDetection], driver_gate_m: tuple[float, float] = DEFAULT_DRIVER_GATE_M
) -> TargetDetection:
    """Strongest detection inside the gate, else the nearest one."""
    if not targets:
        raise NoDriverError("no targets detected")
    lo, hi = driver_gate_m
    gated = [t for t in targets if lo <= t.range_m <= hi]
    if gated:
        return max(gated, key=lambda t: t.peak_amplitude)
    return min(targets, key=lambda t: t.range_m)


def best_lag_centre(
    dmap: DopplerMap, index: int, n_lags: int, band_hz: tuple[float, float] | None = DEFAULT_SEARCH_BAND_HZ
) -> int:
    """Lag-window centre near ``index`` that captures the most in-band Doppler energy.

    Amplitude modulation is strongest on the flanks of the pulse envelope,
    so a detection usually sits one bin off the reflector; shifting the
    window by up to ``n_lags // 2`` bins keeps both flanks inside it.
    """
    if band_hz is not None:
        dmap = dmap.band(*band_hz)
    energy = (np.asarray(dmap.magnitude) ** 2).sum(axis=1)
    half = n_lags // 2
    n_bins = energy.size
    lo, hi = max(half, index - half), min(n_bins - 1 - half, index + half)
    if lo > hi:
        return index
    totals = [energy[c - half:c + half + 1].sum() for c in range(lo, hi + 1)]
    return lo + int(np.argmax(totals))


def extract_sequences(amplitude, driver, n_lags: int = 5, align_polarity: bool = True) -> np.ndarray:
    """Mean-removed slow-time series of ``n_lags`` bins centred on the driver.

    ``driver`` is a :class:`TargetDetection` or a bin index. With
    ``align_polarity`` each lag is sign-flipped to correlate positively with
    the strongest lag; bins on opposite flanks of the pulse envelope swing
    in opposite directions.
    """
    amp = np.asarray(amplitude, dtype=float)
    if n_lags < 1:
        raise ValidationError("n_lags must be >= 1")
    centre = driver.fast_time_index if isinstance(driver, TargetDetection) else int(driver)
    half = n_lags // 2
    lo, hi = centre - half, centre - half + n_lags
    if amp.ndim != 2 or lo < 0 or hi > amp.shape[1]:
        raise ValidationError(f"lags {lo}..{hi - 1} fall outside the {amp.shape[-1]} available bins")
    seqs = amp[:, lo:hi].T.copy()
    seqs -= seqs.mean(axis=1, keepdims=True)
    if align_polarity and n_lags > 1:
        reference = seqs[int(np.argmax(np.sum(seqs**2, axis=1)))]
        signs = np.sign(seqs @ reference)
        signs[signs == 0] = 1.0
        seqs *= signs[:, None]
    return seqs
