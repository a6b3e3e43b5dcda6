"""Morlet-wavelet time-frequency power decomposition.

The wavelet at frequency f is a complex exponential under a Gaussian
envelope with sigma_t = width / (2*pi*f), where the width in cycles
varies linearly from ``width_lo`` at the lowest analysis frequency to
``width_hi`` at the highest. Wavelets are L2-normalized and truncated at
5 sigma; power is the squared magnitude of the signal/wavelet dot
product evaluated directly at each requested time point. Requested
points whose wavelet support leaves the recorded span raise an error
rather than being zero-padded, so edge bins are never silently biased.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TFRTensor, TrialSet

__all__ = ["MorletConfig", "wavelet_width", "morlet_power"]

SUPPORT_SIGMAS = 5.0


@dataclass(frozen=True)
class MorletConfig:
    """Analysis axes and the cycle-count range of the wavelet family."""

    freq_axis: np.ndarray
    time_axis: np.ndarray
    width_lo: float = 4.0
    width_hi: float = 8.0

    def __post_init__(self):
        freqs = np.asarray(self.freq_axis, dtype=np.float64)
        times = np.asarray(self.time_axis, dtype=np.float64)
        if freqs.ndim != 1 or freqs.size == 0 or times.ndim != 1 or times.size == 0:
            raise ValueError("freq_axis and time_axis must be non-empty 1-D arrays")
        if np.any(freqs <= 0):
            raise ValueError("analysis frequencies must be positive")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("freq_axis must be strictly increasing")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("time_axis must be strictly increasing")
        if self.width_lo < 1 or self.width_hi < 1:
            raise ValueError("wavelet widths must be >= 1 cycle")
        object.__setattr__(self, "freq_axis", freqs)
        object.__setattr__(self, "time_axis", times)


def wavelet_width(f: float, cfg: MorletConfig) -> float:
    """Cycle count at frequency ``f``: linear between width_lo and width_hi."""
    f_min = float(cfg.freq_axis[0])
    f_max = float(cfg.freq_axis[-1])
    if not f_min <= f <= f_max:
        raise ValueError(f"frequency {f} outside analysis range [{f_min}, {f_max}]")
    if f_max == f_min:
        return float(cfg.width_lo)
    frac = (f - f_min) / (f_max - f_min)
    return float(cfg.width_lo + frac * (cfg.width_hi - cfg.width_lo))


def _wavelet(f: float, cfg: MorletConfig, fs: float) -> np.ndarray:
    sigma_t = wavelet_width(f, cfg) / (2.0 * np.pi * f)
    half = int(np.ceil(SUPPORT_SIGMAS * sigma_t * fs))
    t = np.arange(-half, half + 1) / fs
    w = np.exp(-(t**2) / (2.0 * sigma_t**2)) * np.exp(2j * np.pi * f * t)
    return w / np.sqrt(np.sum(np.abs(w) ** 2))


def morlet_power(ts: TrialSet, cfg: MorletConfig) -> TFRTensor:
    """Time-frequency power tensor of a TrialSet.

    Output shape is (trials, channels, len(freq_axis), len(time_axis));
    entry (r, c, fi, tj) is |<signal window, wavelet(f_i)>|^2 centered on
    the sample nearest to time_axis[tj] (times measured from trial start).
    """
    fs = ts.sample_rate
    nyquist = fs / 2.0
    if cfg.freq_axis[-1] >= nyquist:
        raise ValueError(
            f"max analysis frequency {cfg.freq_axis[-1]} must be below Nyquist {nyquist}"
        )
    n_samples = ts.n_timepoints
    flat = ts.samples.reshape(ts.n_trials * ts.n_channels, n_samples)
    power = np.empty(
        (ts.n_trials, ts.n_channels, cfg.freq_axis.size, cfg.time_axis.size)
    )
    centers = np.rint(cfg.time_axis * fs).astype(int)
    for fi, f in enumerate(cfg.freq_axis):
        w = _wavelet(float(f), cfg, fs)
        half = (w.size - 1) // 2
        for tj, k0 in enumerate(centers):
            lo, hi = k0 - half, k0 + half
            if lo < 0 or hi >= n_samples:
                raise ValueError(
                    f"time point {cfg.time_axis[tj]:g}s at {f:g}Hz needs samples "
                    f"[{lo}, {hi}] but the trial has [0, {n_samples - 1}]"
                )
            seg = flat[:, lo : hi + 1]
            coef = seg @ w
            power[:, :, fi, tj] = (np.abs(coef) ** 2).reshape(ts.n_trials, ts.n_channels)
    return TFRTensor(
        power=power,
        freq_axis=cfg.freq_axis,
        time_axis=cfg.time_axis,
        channel_names=ts.channel_names,
        labels=ts.labels,
    )
