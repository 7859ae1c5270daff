import math

import numpy as np
import pytest

from traitnet.errors import EmptyMediaError, ValidationError
from traitnet.preprocess import (
    LogMelParams,
    band_center_frequency,
    compute_log_mel,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    num_spectrogram_frames,
    stft_magnitude,
)

P = LogMelParams()


def brute_force_frames(n_samples, params=P):
    """Enumeration oracle: count full windows at the hop spacing."""
    count = 0
    start = 0
    while start + params.window_samples <= n_samples:
        count += 1
        start += params.hop_samples
    return count


class TestMelScale:
    def test_round_trip(self):
        for f in (0.0, 125.0, 1000.0, 7500.0):
            assert abs(mel_to_hz(hz_to_mel(f)) - f) < 1e-9

    def test_1000hz_reference(self):
        # HTK formula: 1000 Hz -> 2595 log10(1 + 1000/700)
        assert abs(hz_to_mel(1000.0) - 2595.0 * math.log10(1 + 1000.0 / 700.0)) < 1e-12

    def test_monotone(self):
        f = np.linspace(0, 8000, 100)
        assert np.all(np.diff(hz_to_mel(f)) > 0)


class TestFilterbank:
    def test_shape(self):
        fb = mel_filterbank(P)
        assert fb.shape == (P.n_bands, P.n_fft // 2 + 1)

    def test_triangles_bounded_by_one(self):
        # sampled triangles peak near (at most) 1; narrow low bands undersample the apex
        fb = mel_filterbank(P)
        assert fb.max() <= 1.0 + 1e-12
        assert fb.max(axis=1).min() > 0.75

    def test_adjacent_triangles_sum_to_one_between_centers(self):
        fb = mel_filterbank(P)
        freqs = np.arange(P.n_fft // 2 + 1) * P.sample_rate / P.n_fft
        centers = [band_center_frequency(b, P) for b in range(P.n_bands)]
        inside = (freqs > centers[0]) & (freqs < centers[-1])
        col_sums = fb.sum(axis=0)[inside]
        np.testing.assert_allclose(col_sums, 1.0, atol=1e-9)

    def test_band_support_ordered(self):
        centers = [band_center_frequency(b, P) for b in range(P.n_bands)]
        assert all(a < b for a, b in zip(centers, centers[1:]))
        assert centers[0] > P.fmin and centers[-1] < P.fmax


class TestFrameCounts:
    def test_formula_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(P.window_samples, 20 * P.sample_rate))
            assert num_spectrogram_frames(n, P) == brute_force_frames(n)

    def test_closed_form(self):
        n = 16000
        assert num_spectrogram_frames(n, P) == 1 + (n - 400) // 160

    def test_patch_count_floor(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            duration = float(rng.uniform(1.0, 20.0))
            n = int(duration * P.sample_rate)
            waveform = rng.standard_normal(n) * 0.1
            patches = compute_log_mel(waveform, P.sample_rate, P)
            assert patches.patches.shape[0] == brute_force_frames(n) // P.patch_frames


class TestSpectrogram:
    def test_silence_gives_uniform_log_floor(self):
        waveform = np.zeros(P.sample_rate * 2)
        patches = compute_log_mel(waveform, P.sample_rate, P)
        np.testing.assert_allclose(patches.patches, math.log(P.log_offset), atol=1e-12)

    def test_pure_tone_argmax_band(self):
        for band in (8, 20, 32, 45, 58):
            freq = band_center_frequency(band, P)
            t = np.arange(P.sample_rate * 2) / P.sample_rate
            waveform = 0.5 * np.sin(2 * np.pi * freq * t)
            patches = compute_log_mel(waveform, P.sample_rate, P)
            frames = patches.patches.reshape(-1, P.n_bands)
            assert np.all(frames.argmax(axis=1) == band), f"band {band} at {freq:.1f} Hz"

    def test_stft_shape(self):
        waveform = np.random.default_rng(0).standard_normal(16000)
        mag = stft_magnitude(waveform, P)
        assert mag.shape == (num_spectrogram_frames(16000, P), P.n_fft // 2 + 1)
        assert np.all(mag >= 0)

    def test_parseval_tone_energy_concentrated(self):
        freq = band_center_frequency(30, P)
        t = np.arange(P.sample_rate) / P.sample_rate
        mag = stft_magnitude(0.5 * np.sin(2 * np.pi * freq * t), P)
        bin_freqs = np.arange(P.n_fft // 2 + 1) * P.sample_rate / P.n_fft
        peak_bin = (mag ** 2).sum(axis=0).argmax()
        assert abs(bin_freqs[peak_bin] - freq) < P.sample_rate / P.n_fft * 1.5


class TestResampling:
    def test_odd_rate_resampled(self):
        rng = np.random.default_rng(2)
        waveform = rng.standard_normal(44100) * 0.1
        patches = compute_log_mel(waveform, 44100, P)
        assert patches.patches.shape[1:] == (P.patch_frames, P.n_bands)

    def test_tone_survives_resampling(self):
        freq = band_center_frequency(20, P)
        sr = 48000
        t = np.arange(sr * 2) / sr
        patches = compute_log_mel(0.5 * np.sin(2 * np.pi * freq * t), sr, P)
        frames = patches.patches.reshape(-1, P.n_bands)
        assert np.all(frames.argmax(axis=1) == 20)

    def test_sub_patch_waveform_yields_zero_patches(self):
        patches = compute_log_mel(np.zeros(P.sample_rate // 2), P.sample_rate, P)
        assert len(patches) == 0

    def test_empty_waveform_rejected(self):
        with pytest.raises(EmptyMediaError):
            compute_log_mel(np.zeros(0), P.sample_rate, P)
