"""Radio parameters and synthetic impulse-radio baseband frames.

The simulator reproduces the in-cabin channel: every reflector returns a
delayed copy of the Gaussian pulse, phase-rotated by the carrier, and the
delay of each reflector follows its chest displacement over slow time.
Doppler is carried implicitly by the time-varying range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal.windows import tukey

from .errors import ValidationError

SPEED_OF_LIGHT = 299_792_458.0

DEFAULT_WINDOW_M = 3.0

RESPIRATION_BAND_HZ = (0.16, 0.6)
HEARTBEAT_BAND_HZ = (1.0, 2.0)


@dataclass(frozen=True)
class RadioConfig:
    """Carrier, bandwidth, pulse and sampling parameters.

    ``fast_time_sample_interval_s`` defaults to the time resolution
    1/(2B) and ``fast_time_bins`` to enough bins for a 0-3 m window.
    """

    carrier_freq_hz: float = 7.3e9
    bandwidth_hz: float = 1.4e9
    pulse_duration_s: float = 0.4e-9
    pulse_amplitude: float = 1.0
    frame_rate_hz: float = 400.0
    fast_time_sample_interval_s: float | None = None
    fast_time_bins: int | None = None

    def __post_init__(self):
        if not self.carrier_freq_hz > 0:
            raise ValidationError("carrier_freq_hz must be positive")
        if not self.bandwidth_hz > 0:
            raise ValidationError("bandwidth_hz must be positive")
        if not self.frame_rate_hz > 0:
            raise ValidationError("frame_rate_hz must be positive")
        if self.pulse_duration_s < 0:
            raise ValidationError("pulse_duration_s must be non-negative")
        if self.fast_time_sample_interval_s is None:
            object.__setattr__(self, "fast_time_sample_interval_s", 1.0 / (2.0 * self.bandwidth_hz))
        if not self.fast_time_sample_interval_s > 0:
            raise ValidationError("fast_time_sample_interval_s must be positive")
        if self.fast_time_bins is None:
            object.__setattr__(self, "fast_time_bins", math.ceil(DEFAULT_WINDOW_M / self.bin_spacing_m))
        if int(self.fast_time_bins) != self.fast_time_bins or self.fast_time_bins < 1:
            raise ValidationError("fast_time_bins must be an integer >= 1")
        object.__setattr__(self, "fast_time_bins", int(self.fast_time_bins))

    @property
    def sigma_p_s(self) -> float:
        """Pulse standard deviation for the -10 dB bandwidth."""
        return 1.0 / (2.0 * math.pi * self.bandwidth_hz * math.sqrt(math.log10(math.e)))

    @property
    def range_resolution_m(self) -> float:
        return range_resolution(self)

    @property
    def time_resolution_s(self) -> float:
        return 1.0 / (2.0 * self.bandwidth_hz)

    @property
    def frame_interval_s(self) -> float:
        return 1.0 / self.frame_rate_hz

    @property
    def bin_spacing_m(self) -> float:
        """Range covered by one fast-time sample."""
        return SPEED_OF_LIGHT * self.fast_time_sample_interval_s / 2.0

    @property
    def max_range_m(self) -> float:
        """Unambiguous window L·T_n·c/2."""
        return self.fast_time_bins * self.bin_spacing_m

    def range_axis_m(self) -> np.ndarray:
        return np.arange(self.fast_time_bins) * self.bin_spacing_m


def gaussian_pulse(config: RadioConfig, t):
    """Transmitted Gaussian pulse envelope, centred at T_p/2."""
    t = np.asarray(t, dtype=float)
    return config.pulse_amplitude * np.exp(
        -((t - config.pulse_duration_s / 2.0) ** 2) / (2.0 * config.sigma_p_s**2)
    )


def range_resolution(config: RadioConfig) -> float:
    """c/(2B) in metres."""
    if not config.bandwidth_hz > 0:
        raise ValidationError("bandwidth must be positive")
    return SPEED_OF_LIGHT / (2.0 * config.bandwidth_hz)


@dataclass(frozen=True)
class Oscillation:
    freq_hz: float
    amplitude_m: float


@dataclass(frozen=True)
class RateStep:
    """Respiration switches to ``freq_hz`` at ``time_s`` (phase continuous)."""

    time_s: float
    freq_hz: float


@dataclass(frozen=True)
class MotionBurst:
    """Large transient body motion, e.g. turning the steering wheel."""

    start_s: float
    duration_s: float
    amplitude_m: float = 0.02
    freq_hz: float = 1.0


@dataclass(frozen=True)
class SimTarget:
    """A reflector in the cabin.

    A target without respiration and heartbeat is a static reflector.
    """

    base_range_m: float
    reflectivity: float = 1.0
    respiration: Oscillation | None = None
    heartbeat: Oscillation | None = None
    beat_jitter_std_s: float = 0.0
    respiration_steps: tuple[RateStep, ...] = ()
    motion_bursts: tuple[MotionBurst, ...] = ()

    def validate(self, physiological: bool = True) -> None:
        if not self.base_range_m > 0:
            raise ValidationError("base_range_m must be positive")
        if self.beat_jitter_std_s < 0:
            raise ValidationError("beat_jitter_std_s must be non-negative")
        for osc in (self.respiration, self.heartbeat):
            if osc is not None and (osc.freq_hz <= 0 or osc.amplitude_m < 0):
                raise ValidationError("oscillations need freq_hz > 0 and amplitude_m >= 0")
        for step in self.respiration_steps:
            if step.freq_hz <= 0:
                raise ValidationError("respiration step frequency must be positive")
            if self.respiration is None:
                raise ValidationError("respiration_steps given without respiration")
        for burst in self.motion_bursts:
            if burst.duration_s <= 0 or burst.freq_hz <= 0:
                raise ValidationError("motion bursts need positive duration and frequency")
        if not physiological:
            return
        resp = [self.respiration.freq_hz] if self.respiration else []
        resp += [s.freq_hz for s in self.respiration_steps]
        lo, hi = RESPIRATION_BAND_HZ
        if any(not lo <= f <= hi for f in resp):
            raise ValidationError(f"respiration outside [{lo}, {hi}] Hz")
        lo, hi = HEARTBEAT_BAND_HZ
        if self.heartbeat is not None and not lo <= self.heartbeat.freq_hz <= hi:
            raise ValidationError(f"heartbeat outside [{lo}, {hi}] Hz")

    def max_excursion_m(self, vibration_m: float = 0.0) -> float:
        amp = vibration_m
        amp += self.respiration.amplitude_m if self.respiration else 0.0
        amp += self.heartbeat.amplitude_m if self.heartbeat else 0.0
        amp += max((b.amplitude_m for b in self.motion_bursts), default=0.0)
        return amp


@dataclass(frozen=True)
class SimScenario:
    targets: tuple[SimTarget, ...] = ()
    vibration_components: tuple[Oscillation, ...] = ()
    noise_std: float = 0.0
    duration_s: float = 60.0
    seed: int = 0
    allow_nonphysiological: bool = False

    def validate(self, config: RadioConfig | None = None) -> None:
        if not self.duration_s > 0:
            raise ValidationError("duration_s must be positive")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be non-negative")
        for target in self.targets:
            target.validate(physiological=not self.allow_nonphysiological)
        if config is None:
            return
        nyquist = config.frame_rate_hz / 2.0
        for vib in self.vibration_components:
            if not 0 < vib.freq_hz < nyquist:
                raise ValidationError(f"vibration at {vib.freq_hz} Hz outside (0, {nyquist}) Hz")
        vib_amp = sum(abs(v.amplitude_m) for v in self.vibration_components)
        for target in self.targets:
            far = target.base_range_m + target.max_excursion_m(vib_amp)
            if far > config.max_range_m:
                raise ValidationError(
                    f"target reaches {far:.3f} m, beyond the {config.max_range_m:.3f} m window"
                )


@dataclass(frozen=True)
class FrameMatrix:
    """Complex baseband samples, slow-time rows by fast-time columns."""

    samples: np.ndarray
    config: RadioConfig = field(default_factory=RadioConfig)
    start_time_s: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValidationError("samples must be a K x L matrix with K >= 1")
        if samples.shape[1] != self.config.fast_time_bins:
            raise ValidationError(
                f"{samples.shape[1]} columns, config expects {self.config.fast_time_bins}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def n_frames(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.config.frame_rate_hz

    def times_s(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.n_frames) / self.config.frame_rate_hz


@dataclass(frozen=True)
class TargetTruth:
    """Exact vital-sign parameters used while synthesising one target."""

    base_range_m: float
    respiratory_rate_rpm: float | None
    heart_rate_bpm: float | None
    beat_times_s: np.ndarray
    respiration_segments: tuple[tuple[float, float, float], ...] = ()

    @property
    def ibi_ms(self) -> np.ndarray:
        return np.diff(self.beat_times_s) * 1000.0

    def respiration_rpm_at(self, t: float) -> float | None:
        for start, end, rpm in self.respiration_segments:
            if start <= t < end:
                return rpm
        return self.respiratory_rate_rpm

    def dominant_respiration_rpm(self, start_s: float, end_s: float) -> float | None:
        """Rate of the segment that covers most of [start_s, end_s)."""
        if not self.respiration_segments:
            return self.respiratory_rate_rpm
        best, best_cover = None, -1.0
        for seg_start, seg_end, rpm in self.respiration_segments:
            cover = min(end_s, seg_end) - max(start_s, seg_start)
            if cover > best_cover:
                best, best_cover = rpm, cover
        return best

    def beats_in(self, start_s: float, end_s: float) -> np.ndarray:
        b = self.beat_times_s
        return b[(b >= start_s) & (b < end_s)]

    def heart_rate_in(self, start_s: float, end_s: float) -> float | None:
        """60 / mean interbeat interval over the beats inside the span."""
        if self.heart_rate_bpm is None:
            return None
        beats = self.beats_in(start_s, end_s)
        if beats.size < 2:
            return self.heart_rate_bpm
        return 60.0 / float(np.mean(np.diff(beats)))


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *stream])


def _respiration_segments(target: SimTarget, duration_s: float):
    resp = target.respiration
    edges = [(0.0, resp.freq_hz)] + [(s.time_s, s.freq_hz) for s in sorted(target.respiration_steps, key=lambda s: s.time_s)]
    segments = []
    for i, (start, freq) in enumerate(edges):
        end = edges[i + 1][0] if i + 1 < len(edges) else math.inf
        segments.append((start, end, freq))
    return segments


def _respiration_phase(target: SimTarget, t: np.ndarray) -> np.ndarray:
    phase = np.zeros_like(t)
    for start, end, freq in _respiration_segments(target, float(t[-1]) if t.size else 0.0):
        span = np.clip(t, start, end) - start
        phase += 2.0 * np.pi * freq * span
    return phase


def _beat_times(target: SimTarget, seed: int, index: int, duration_s: float) -> np.ndarray:
    """Beat instants covering one interval either side of [0, duration)."""
    if target.heartbeat is None:
        return np.empty(0)
    rng = _rng(seed, 1, index)
    period = 1.0 / target.heartbeat.freq_hz
    floor = 0.25 * period
    t = -rng.uniform(0.0, period)
    beats = [t]
    while t <= duration_s + period:
        step = period + (rng.normal(0.0, target.beat_jitter_std_s) if target.beat_jitter_std_s > 0 else 0.0)
        t += max(step, floor)
        beats.append(t)
    return np.asarray(beats)


def _burst_displacement(burst: MotionBurst, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = (t >= burst.start_s) & (t < burst.start_s + burst.duration_s)
    n = int(inside.sum())
    if n:
        local = t[inside] - burst.start_s
        out[inside] = burst.amplitude_m * np.sin(2.0 * np.pi * burst.freq_hz * local) * tukey(n, 0.2)
    return out


def target_range(scenario: SimScenario, index: int, t: np.ndarray, include_vibration: bool = True) -> np.ndarray:
    """Range of target ``index`` at slow times ``t``."""
    target = scenario.targets[index]
    r = np.full_like(t, target.base_range_m, dtype=float)
    if target.respiration is not None:
        r -= target.respiration.amplitude_m * np.sin(_respiration_phase(target, t))
    if target.heartbeat is not None:
        beats = _beat_times(target, scenario.seed, index, scenario.duration_s)
        phase = np.interp(t, beats, 2.0 * np.pi * np.arange(beats.size))
        r -= target.heartbeat.amplitude_m * np.cos(phase)
    for burst in target.motion_bursts:
        r += _burst_displacement(burst, t)
    if include_vibration and scenario.vibration_components:
        phases = _rng(scenario.seed, 2).uniform(0.0, 2.0 * np.pi, len(scenario.vibration_components))
        for vib, ph in zip(scenario.vibration_components, phases):
            r += vib.amplitude_m * np.sin(2.0 * np.pi * vib.freq_hz * t + ph)
    return r


def _echoes(scenario: SimScenario, config: RadioConfig, include_vibration: bool = True) -> np.ndarray:
    n_frames = int(round(scenario.duration_s * config.frame_rate_hz))
    t = np.arange(n_frames) / config.frame_rate_hz
    # fast-time origin sits on the pulse centre, so bin l <-> range l * bin_spacing
    fast = np.arange(config.fast_time_bins) * config.fast_time_sample_interval_s + config.pulse_duration_s / 2.0
    out = np.zeros((n_frames, config.fast_time_bins), dtype=complex)
    for p, target in enumerate(scenario.targets):
        tau = 2.0 * target_range(scenario, p, t, include_vibration) / SPEED_OF_LIGHT
        carrier = np.exp(-2j * np.pi * config.carrier_freq_hz * tau)
        out += target.reflectivity * carrier[:, None] * gaussian_pulse(config, fast[None, :] - tau[:, None])
    return out


def simulate_frames(scenario: SimScenario, config: RadioConfig | None = None) -> FrameMatrix:
    """Synthesise the baseband frame matrix for ``scenario``.

    Noise is circular complex Gaussian with per-component std ``noise_std``,
    seeded by ``scenario.seed``.
    """
    config = config or RadioConfig()
    scenario.validate(config)
    y = _echoes(scenario, config)
    if scenario.noise_std > 0:
        rng = _rng(scenario.seed, 0)
        y = y + scenario.noise_std * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return FrameMatrix(y, config)


def ground_truth(scenario: SimScenario) -> list[TargetTruth]:
    """Per-target rates and the beat instants used during synthesis."""
    truths = []
    for p, target in enumerate(scenario.targets):
        rpm = 60.0 * target.respiration.freq_hz if target.respiration else None
        segments = ()
        if target.respiration is not None and target.respiration_steps:
            segments = tuple(
                (start, end, 60.0 * freq) for start, end, freq in _respiration_segments(target, scenario.duration_s)
            )
        bpm = 60.0 * target.heartbeat.freq_hz if target.heartbeat else None
        beats = _beat_times(target, scenario.seed, p, scenario.duration_s)
        beats = beats[(beats >= 0.0) & (beats < scenario.duration_s)]
        truths.append(TargetTruth(target.base_range_m, rpm, bpm, beats, segments))
    return truths


def noise_std_for_snr(scenario: SimScenario, config: RadioConfig | None, snr_db: float) -> float:
    """Noise std giving ``snr_db`` against the strongest vital-motion bin.

    Signal power is the largest slow-time variance of the noiseless echo
    amplitude over fast-time bins, counting respiration and heartbeat only
    (no vibration, no bursts); noise power is 2·std².
    """
    config = config or RadioConfig()
    quiet = replace(
        scenario,
        noise_std=0.0,
        targets=tuple(replace(t, motion_bursts=()) for t in scenario.targets),
    )
    quiet.validate(config)
    amp = np.abs(_echoes(quiet, config, include_vibration=False))
    power = float(amp.var(axis=0).max()) if amp.size else 0.0
    if power <= 1e-12 * float(np.max(amp, initial=0.0)) ** 2 or power == 0.0:
        raise ValidationError("scenario has no vital motion to reference the SNR against")
    return math.sqrt(power / (2.0 * 10.0 ** (snr_db / 10.0)))
