"""Log mel-scale spectrogram frontend with non-overlapping ~1 s patching.

Constants follow the common audio-classification frontend: 16 kHz mono input,
25 ms windows with 10 ms hop, 64 triangular mel bands, log(mel + 0.01), and
patches of 96 consecutive spectrogram frames (0.96 s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import resample_poly

from ..errors import EmptyMediaError, FormatError, ValidationError


@dataclass(frozen=True)
class LogMelParams:
    sample_rate: int = 16000
    window_s: float = 0.025
    hop_s: float = 0.010
    n_bands: int = 64
    n_fft: int = 1024
    fmin: float = 125.0
    fmax: float = 7500.0
    log_offset: float = 0.01
    patch_frames: int = 96

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate))


@dataclass(frozen=True)
class LogMelPatches:
    """(P, patch_frames, n_bands) log-energies; patches tile time contiguously."""

    patches: np.ndarray
    params: LogMelParams

    def __post_init__(self):
        expected = (self.params.patch_frames, self.params.n_bands)
        if self.patches.ndim != 3 or self.patches.shape[1:] != expected:
            raise ValidationError(f"patches must be (P, {expected[0]}, {expected[1]}), got {self.patches.shape}")

    def __len__(self) -> int:
        return self.patches.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def _filterbank_cached(n_bands, n_fft, sample_rate, fmin, fmax):
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bin_mels = hz_to_mel(bin_freqs)
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2)
    fb = np.zeros((n_bands, len(bin_freqs)))
    for k in range(n_bands):
        lower, center, upper = mel_pts[k], mel_pts[k + 1], mel_pts[k + 2]
        rising = (bin_mels - lower) / (center - lower)
        falling = (upper - bin_mels) / (upper - center)
        fb[k] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def mel_filterbank(params: LogMelParams = LogMelParams()) -> np.ndarray:
    """(n_bands, n_fft//2 + 1) triangular filters, piecewise linear in mel."""
    return _filterbank_cached(params.n_bands, params.n_fft, params.sample_rate,
                              params.fmin, params.fmax)


def band_center_frequency(band: int, params: LogMelParams = LogMelParams()) -> float:
    mel_pts = np.linspace(hz_to_mel(params.fmin), hz_to_mel(params.fmax), params.n_bands + 2)
    return float(mel_to_hz(mel_pts[band + 1]))


def stft_magnitude(waveform: np.ndarray, params: LogMelParams) -> np.ndarray:
    win_len = params.window_samples
    hop = params.hop_samples
    n = len(waveform)
    if n < win_len:
        return np.zeros((0, params.n_fft // 2 + 1))
    n_frames = 1 + (n - win_len) // hop
    idx = np.arange(win_len)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = waveform[idx]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win_len) / win_len)
    return np.abs(np.fft.rfft(frames * window, n=params.n_fft, axis=1))


def num_spectrogram_frames(n_samples: int, params: LogMelParams = LogMelParams()) -> int:
    if n_samples < params.window_samples:
        return 0
    return 1 + (n_samples - params.window_samples) // params.hop_samples


def compute_log_mel(waveform: np.ndarray, sample_rate: int,
                    params: LogMelParams = LogMelParams()) -> LogMelPatches:
    """Mono waveform -> non-overlapping log-mel patches; trailing partial dropped."""
    waveform = np.asarray(waveform, dtype=np.float64)
    if waveform.ndim != 1:
        raise FormatError(f"expected a mono waveform, got shape {waveform.shape}")
    if waveform.size == 0:
        raise EmptyMediaError("empty waveform")
    if sample_rate <= 0:
        raise FormatError(f"sample rate must be positive, got {sample_rate}")
    if sample_rate != params.sample_rate:
        g = math.gcd(int(sample_rate), params.sample_rate)
        waveform = resample_poly(waveform, params.sample_rate // g, int(sample_rate) // g)
    spectra = stft_magnitude(waveform, params)
    mel = spectra @ mel_filterbank(params).T
    logmel = np.log(mel + params.log_offset)
    n_patches = logmel.shape[0] // params.patch_frames
    used = logmel[: n_patches * params.patch_frames]
    patches = used.reshape(n_patches, params.patch_frames, params.n_bands)
    return LogMelPatches(patches, params)
