"""Noise reduction and static-clutter removal for baseband frames.

Default chain, all along slow time: low-pass FIR, moving-average smoother,
magnitude, then the loopback (exponential background) filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import InsufficientSamplesError, ValidationError
from .rf import FrameMatrix

SLOW_TIME = "slow"
FAST_TIME = "fast"
_AXES = {SLOW_TIME: 0, FAST_TIME: 1}


@dataclass(frozen=True)
class FilterSpec:
    """Cascade settings.

    ``cutoff_fraction`` is relative to the Nyquist rate of whichever axis
    the FIR runs along.
    """

    fir_order: int = 26
    window: str = "hamming"
    cutoff_fraction: float = 0.25
    smooth_window: int = 50
    fir_axis: str = SLOW_TIME
    smooth_axis: str = SLOW_TIME

    def __post_init__(self):
        if self.fir_order < 0 or self.fir_order % 2:
            raise ValidationError("fir_order must be a non-negative even integer")
        if not 0 < self.cutoff_fraction < 1:
            raise ValidationError("cutoff_fraction must lie in (0, 1)")
        if self.smooth_window < 1:
            raise ValidationError("smooth_window must be >= 1")
        for axis in (self.fir_axis, self.smooth_axis):
            if axis not in _AXES:
                raise ValidationError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")

    @property
    def n_taps(self) -> int:
        return self.fir_order + 1


@dataclass
class BackgroundState:
    """Running clutter estimate for the loopback filter."""

    clutter_estimate: np.ndarray
    beta: float = 0.97

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValidationError("beta must lie in (0, 1)")
        self.clutter_estimate = np.asarray(self.clutter_estimate)
        if self.clutter_estimate.ndim != 1:
            raise ValidationError("clutter_estimate must be a vector")

    @classmethod
    def from_frame(cls, frame, beta: float = 0.97) -> "BackgroundState":
        """Start at the fixed point for a static scene."""
        return cls(np.array(frame, copy=True), beta)


def design_fir(spec: FilterSpec) -> np.ndarray:
    """Symmetric windowed-sinc low-pass kernel with unit DC gain."""
    h = signal.firwin(spec.n_taps, spec.cutoff_fraction, window=spec.window)
    return 0.5 * (h + h[::-1])  # exact palindrome despite rounding


def _convolve(x: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    if np.iscomplexobj(x):
        return _convolve(x.real, kernel, axis) + 1j * _convolve(x.imag, kernel, axis)
    return ndimage.convolve1d(np.asarray(x, dtype=float), kernel, axis=axis, mode="reflect")


def fir_lowpass(x, spec: FilterSpec = FilterSpec(), axis: int = -1) -> np.ndarray:
    """Zero-phase FIR low-pass of ``x`` along ``axis`` with reflect padding."""
    x = np.asarray(x)
    if x.shape[axis] <= spec.fir_order:
        raise InsufficientSamplesError(
            f"{x.shape[axis]} samples, the {spec.n_taps}-tap kernel needs more than {spec.fir_order}"
        )
    return _convolve(x, design_fir(spec), axis)


def smooth(x, window: int, axis: int = -1) -> np.ndarray:
    """Centred moving average with reflect padding."""
    if window < 1:
        raise ValidationError("window must be >= 1")
    x = np.asarray(x)
    if window == 1:
        return x.copy()
    if np.iscomplexobj(x):
        return smooth(x.real, window, axis) + 1j * smooth(x.imag, window, axis)
    return ndimage.uniform_filter1d(np.asarray(x, dtype=float), window, axis=axis, mode="reflect")


def subtract_background(frame, state: BackgroundState) -> tuple[np.ndarray, BackgroundState]:
    """One loopback step: c_k = β·c_{k-1} + (1-β)·r_k, output r_k - c_k."""
    frame = np.asarray(frame)
    if frame.shape != state.clutter_estimate.shape:
        raise ValidationError(
            f"frame length {frame.shape} does not match state {state.clutter_estimate.shape}"
        )
    clutter = state.beta * state.clutter_estimate + (1.0 - state.beta) * frame
    return frame - clutter, BackgroundState(clutter, state.beta)


def subtract_background_matrix(rows, beta: float = 0.97, initial=None) -> np.ndarray:
    """Loopback filter over every row of a K×L matrix at once.

    Equivalent to calling :func:`subtract_background` row by row starting
    from ``initial`` (default: the first row).
    """
    if not 0 < beta < 1:
        raise ValidationError("beta must lie in (0, 1)")
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValidationError("expected a K x L matrix")
    if rows.shape[0] == 0:
        return rows.copy()
    c0 = rows[0] if initial is None else np.asarray(initial)
    clutter, _ = signal.lfilter([1.0 - beta], [1.0, -beta], rows, axis=0, zi=beta * c0[None, :])
    return rows - clutter


def amplitude(frames) -> np.ndarray:
    """Elementwise magnitude of a frame matrix."""
    samples = frames.samples if isinstance(frames, FrameMatrix) else frames
    return np.abs(np.asarray(samples))


def preprocess_frames(frames, spec: FilterSpec = FilterSpec(), beta: float = 0.97) -> np.ndarray:
    """Run the full cascade and return the clutter-free amplitude matrix."""
    y = frames.samples if isinstance(frames, FrameMatrix) else np.asarray(frames)
    if y.ndim != 2:
        raise ValidationError("expected a K x L matrix")
    y = fir_lowpass(y, spec, axis=_AXES[spec.fir_axis])
    y = smooth(y, spec.smooth_window, axis=_AXES[spec.smooth_axis])
    return subtract_background_matrix(np.abs(y), beta)
