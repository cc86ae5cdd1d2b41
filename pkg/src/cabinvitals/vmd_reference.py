"""Plain single-sequence VMD, written independently of the multi-sequence solver.

It works on the full two-sided FFT, restricts the solve to non-negative
bins and rebuilds a Hermitian spectrum before inverting. Used as a
cross-check oracle and as the single-lag baseline.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .msvmd import ModeSet, MsVmdConfig


def reference_vmd(sequence, config: MsVmdConfig = MsVmdConfig(), frame_rate_hz: float = 1.0) -> ModeSet:
    x = np.asarray(sequence, dtype=float)
    if x.ndim == 2 and x.shape[0] == 1:
        x = x[0]
    if x.ndim != 1:
        raise ValidationError("reference_vmd takes a single sequence")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sequence must be finite")
    n = config.n_modes
    if x.size < 2 * n:
        raise ValidationError(f"{n} modes need at least {2 * n} samples")

    length = x.size
    half = length // 2 if config.mirror else 0
    ext = np.pad(x, (half, half), mode="symmetric")
    total = ext.size

    spectrum = np.fft.fft(ext)
    freqs_hz = np.fft.fftfreq(total, 1.0 / frame_rate_hz)
    pos = np.arange(total // 2 + 1)
    freqs_hz = np.abs(freqs_hz[pos])  # the Nyquist bin is reported as negative
    if config.band_limit_hz is not None:
        pos = pos[freqs_hz <= config.band_limit_hz]
        freqs_hz = freqs_hz[: pos.size]
    w = 2.0 * np.pi * freqs_hz
    f_hat = spectrum[pos]

    centers = 2.0 * np.pi * config.initial_centers_hz(frame_rate_hz)
    u = np.zeros((n, pos.size), dtype=complex)
    lam = np.zeros(pos.size, dtype=complex)
    alpha = config.bandwidth_weight
    stuck = np.zeros(n, dtype=bool)

    history = []
    converged = False
    residual = np.inf
    it = 0
    for it in range(1, config.max_iterations + 1):
        before = u.copy()
        for k in range(n):
            rest = np.zeros(pos.size, dtype=complex)
            for j in range(n):
                if j != k:
                    rest += u[j]
            weight = 2.0 * alpha * (w - centers[k]) ** 2
            u[k] = (f_hat - rest + lam / 2.0) / (1.0 + weight)
            p = u[k].real ** 2 + u[k].imag ** 2
            if p.sum() > 0:
                centers[k] = np.dot(w, p) / p.sum()
                stuck[k] = False
            else:
                stuck[k] = True
        lam = lam + config.dual_step * (f_hat - u.sum(axis=0))
        num = sum(np.vdot(u[k] - before[k], u[k] - before[k]).real for k in range(n))
        den = sum(np.vdot(u[k], u[k]).real for k in range(n))
        residual = num / den if den > 0 else 0.0
        history.append(float(residual))
        if residual < config.tolerance:
            converged = True
            break

    order = np.argsort(centers, kind="stable")
    modes = np.empty((n, length))
    for out, k in enumerate(order):
        full = np.zeros(total, dtype=complex)
        full[pos] = u[k]
        mirrored = pos[(pos > 0) & (2 * pos != total)]
        full[total - mirrored] = np.conj(full[mirrored])
        modes[out] = np.real(np.fft.ifft(full))[half:half + length]
    return ModeSet(
        modes=modes,
        center_freqs_hz=centers[order] / (2.0 * np.pi),
        iterations_used=it,
        final_residual=float(residual),
        converged=converged,
        degenerate=tuple(bool(s) for s in stuck[order]),
        residual_history=tuple(history),
    )
