"""Multi-sequence variational mode decomposition.

Several slow-time sequences that observe the same motion (neighbouring
range bins) are decomposed jointly into ``N`` narrow-band modes shared by
all of them. The solver is ADMM on one-sided spectra: Wiener-like mode
updates (Gauss-Seidel over modes), spectral-centroid frequency updates and
dual ascent on one multiplier per sequence.

Frequencies inside the solver are physical angular frequencies in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

INIT_STRATEGIES = ("uniform", "zero", "custom")


@dataclass(frozen=True)
class MsVmdConfig:
    """Solver settings.

    Attributes:
        n_modes: number of modes N.
        bandwidth_weight: alpha, weight of the bandwidth penalty (s^2).
        dual_step: eta, dual ascent step; 0 disables the multipliers.
        tolerance: relative mode-change threshold for convergence.
        max_iterations: hard iteration cap.
        init_strategy: "uniform", "zero" or "custom".
        initial_center_freqs_hz: starting frequencies for "custom".
        band_limit_hz: if set, only the spectrum up to this frequency is
            decomposed and uniform init spreads over it instead of Nyquist.
        mirror: extend each sequence by mirrored halves before transforming.
        scale_bandwidth_by_lags: use M*(1 + 2a(w-wi)^2) as the update
            denominator; False gives M + 2a(w-wi)^2.
    """

    n_modes: int = 4
    bandwidth_weight: float = 1.0
    dual_step: float = 0.5
    tolerance: float = 1e-6
    max_iterations: int = 500
    init_strategy: str = "uniform"
    initial_center_freqs_hz: tuple[float, ...] | None = None
    band_limit_hz: float | None = None
    mirror: bool = True
    scale_bandwidth_by_lags: bool = True

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValidationError("n_modes must be >= 1")
        if not self.bandwidth_weight > 0:
            raise ValidationError("bandwidth_weight must be positive")
        if self.dual_step < 0:
            raise ValidationError("dual_step must be non-negative")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ValidationError(f"init_strategy must be one of {INIT_STRATEGIES}")
        if self.init_strategy == "custom":
            freqs = self.initial_center_freqs_hz
            if freqs is None or len(freqs) != self.n_modes:
                raise ValidationError("custom init needs one frequency per mode")
            object.__setattr__(self, "initial_center_freqs_hz", tuple(float(f) for f in freqs))
        if self.band_limit_hz is not None and not self.band_limit_hz > 0:
            raise ValidationError("band_limit_hz must be positive")

    def initial_centers_hz(self, frame_rate_hz: float) -> np.ndarray:
        n = self.n_modes
        if self.init_strategy == "zero":
            return np.zeros(n)
        if self.init_strategy == "custom":
            return np.asarray(self.initial_center_freqs_hz, dtype=float)
        ceiling = frame_rate_hz / 2.0
        if self.band_limit_hz is not None:
            ceiling = min(ceiling, self.band_limit_hz)
        return 0.8 * ceiling * np.arange(1, n + 1) / n


@dataclass
class SpectralWorkspace:
    """Mutable solver state on the one-sided frequency grid."""

    z_hat: np.ndarray  # M x F
    u_hat: np.ndarray  # N x F
    multipliers: np.ndarray  # M x F
    omega: np.ndarray  # F, rad/s
    centers: np.ndarray  # N, rad/s
    bandwidth_weight: float = 1.0
    scale_bandwidth_by_lags: bool = True
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        f = self.omega.shape[0]
        if self.z_hat.shape[1] != f or self.u_hat.shape[1] != f or self.multipliers.shape != self.z_hat.shape:
            raise ValidationError("workspace arrays must share the frequency grid")
        if self.degenerate is None:
            self.degenerate = np.zeros(self.u_hat.shape[0], dtype=bool)

    @classmethod
    def from_spectra(cls, z_hat, omega, centers, n_modes=None, **kwargs) -> "SpectralWorkspace":
        z_hat = np.atleast_2d(np.asarray(z_hat, dtype=complex))
        centers = np.asarray(centers, dtype=float)
        n = centers.size if n_modes is None else n_modes
        return cls(
            z_hat=z_hat,
            u_hat=np.zeros((n, z_hat.shape[1]), dtype=complex),
            multipliers=np.zeros_like(z_hat),
            omega=np.asarray(omega, dtype=float),
            centers=centers.copy(),
            **kwargs,
        )

    @property
    def n_lags(self) -> int:
        return self.z_hat.shape[0]


def imf_denominator(ws: SpectralWorkspace, i: int) -> np.ndarray:
    penalty = 2.0 * ws.bandwidth_weight * (ws.omega - ws.centers[i]) ** 2
    if ws.scale_bandwidth_by_lags:
        return ws.n_lags * (1.0 + penalty)
    return ws.n_lags + penalty


def imf_update(ws: SpectralWorkspace, i: int) -> np.ndarray:
    """Refresh mode ``i`` from the current residual of every sequence."""
    others = ws.u_hat.sum(axis=0) - ws.u_hat[i]
    numerator = ws.z_hat.sum(axis=0) - ws.n_lags * others + ws.multipliers.sum(axis=0) / 2.0
    ws.u_hat[i] = numerator / imf_denominator(ws, i)
    return ws.u_hat[i]


def center_freq_update(ws: SpectralWorkspace, i: int) -> float:
    """Power-weighted centroid of mode ``i`` over non-negative frequencies."""
    power = np.abs(ws.u_hat[i]) ** 2
    total = power.sum()
    if total > 0:
        ws.centers[i] = float((ws.omega * power).sum() / total)
        ws.degenerate[i] = False
    else:
        ws.degenerate[i] = True
    return float(ws.centers[i])


def dual_ascent(ws: SpectralWorkspace, eta: float) -> np.ndarray:
    ws.multipliers += eta * (ws.z_hat - ws.u_hat.sum(axis=0))
    return ws.multipliers


@dataclass(frozen=True)
class ModeSet:
    modes: np.ndarray  # N x T, ascending centre frequency
    center_freqs_hz: np.ndarray
    iterations_used: int
    final_residual: float
    converged: bool
    degenerate: tuple[bool, ...] = ()
    residual_history: tuple[float, ...] = ()

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    def reconstruction(self) -> np.ndarray:
        return self.modes.sum(axis=0)


def validate_sequences(sequences, n_modes: int) -> np.ndarray:
    if isinstance(sequences, (list, tuple)) and len({np.shape(s) for s in sequences}) > 1:
        raise ValidationError("all sequences must have the same length")
    z = np.asarray(sequences, dtype=float)
    if z.ndim == 1:
        z = z[None, :]
    if z.ndim != 2 or z.shape[0] < 1:
        raise ValidationError("expected M sequences of equal length")
    if not np.all(np.isfinite(z)):
        raise ValidationError("sequences must be finite")
    if z.shape[1] < 2 * n_modes:
        raise ValidationError(f"{n_modes} modes need at least {2 * n_modes} samples, got {z.shape[1]}")
    return z


def mirror_extend(z: np.ndarray) -> tuple[np.ndarray, int]:
    half = z.shape[-1] // 2
    ext = np.concatenate([z[:, :half][:, ::-1], z, z[:, z.shape[1] - half:][:, ::-1]], axis=1)
    return ext, half


def ms_vmd(sequences, config: MsVmdConfig = MsVmdConfig(), frame_rate_hz: float = 1.0) -> ModeSet:
    """Jointly decompose M equal-length sequences into ``config.n_modes`` modes.

    Sequences should be mean-removed. Returned modes are sorted by ascending
    centre frequency and have the input length.
    """
    if not frame_rate_hz > 0:
        raise ValidationError("frame_rate_hz must be positive")
    z = validate_sequences(sequences, config.n_modes)
    length = z.shape[1]
    offset = 0
    if config.mirror:
        z, offset = mirror_extend(z)
    n_ext = z.shape[1]

    omega_all = 2.0 * np.pi * np.fft.rfftfreq(n_ext, 1.0 / frame_rate_hz)
    keep = np.ones(omega_all.size, dtype=bool)
    if config.band_limit_hz is not None:
        keep = omega_all <= 2.0 * np.pi * config.band_limit_hz
    z_hat = np.fft.rfft(z, axis=1)[:, keep]

    ws = SpectralWorkspace.from_spectra(
        z_hat,
        omega_all[keep],
        2.0 * np.pi * config.initial_centers_hz(frame_rate_hz),
        bandwidth_weight=config.bandwidth_weight,
        scale_bandwidth_by_lags=config.scale_bandwidth_by_lags,
    )

    history = []
    residual = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        previous = ws.u_hat.copy()
        for i in range(config.n_modes):
            imf_update(ws, i)
            center_freq_update(ws, i)
        dual_ascent(ws, config.dual_step)
        energy = float(np.sum(np.abs(ws.u_hat) ** 2))
        change = float(np.sum(np.abs(ws.u_hat - previous) ** 2))
        residual = change / energy if energy > 0 else 0.0
        history.append(residual)
        if residual < config.tolerance:
            converged = True
            break

    order = np.argsort(ws.centers, kind="stable")
    full = np.zeros((config.n_modes, omega_all.size), dtype=complex)
    full[:, keep] = ws.u_hat[order]
    modes = np.fft.irfft(full, n=n_ext, axis=1)[:, offset:offset + length]
    return ModeSet(
        modes=modes,
        center_freqs_hz=ws.centers[order] / (2.0 * np.pi),
        iterations_used=iterations,
        final_residual=float(residual),
        converged=converged,
        degenerate=tuple(bool(d) for d in ws.degenerate[order]),
        residual_history=tuple(history),
    )


def band_purity(mode, frame_rate_hz: float, band_hz: tuple[float, float]) -> float:
    """Fraction of a mode's spectral energy that lies inside ``band_hz``."""
    mode = np.asarray(mode, dtype=float)
    power = np.abs(np.fft.rfft(mode)) ** 2
    total = power.sum()
    if not total > 0:
        return 0.0
    freqs = np.fft.rfftfreq(mode.size, 1.0 / frame_rate_hz)
    inside = (freqs >= band_hz[0]) & (freqs <= band_hz[1])
    return float(power[inside].sum() / total)
