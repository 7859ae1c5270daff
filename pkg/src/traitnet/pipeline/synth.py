"""Deterministic synthetic dataset generation for desk-scale runs.

Frames carry the planted traits as five vertical intensity stripes, audio
encodes them as sinusoid amplitudes at known mel-band centers, and transcripts
quantize them into per-trait tokens the fake embedder maps to fixed vectors.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np
from PIL import Image

from ..core import DatasetManifest, TraitVector, VideoRecord, serialize_manifest, split_dataset
from ..errors import ValidationError
from ..preprocess import LogMelParams, band_center_frequency

FRAME_SIZE = 64
TONE_BANDS = (10, 20, 30, 40, 50)


def trait_frame(traits: np.ndarray, size: int = FRAME_SIZE) -> np.ndarray:
    """(size, size, 3) uint8 image with five vertical stripes at trait intensity."""
    img = np.empty((size, size), dtype=np.float64)
    edges = np.linspace(0, size, 6).astype(int)
    for i in range(5):
        img[:, edges[i]:edges[i + 1]] = traits[i]
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    return np.round(rgb * 255.0).astype(np.uint8)


def trait_waveform(traits: np.ndarray, duration_s: float, sample_rate: int = 16000) -> np.ndarray:
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    params = LogMelParams(sample_rate=sample_rate)
    wave_sum = np.zeros_like(t)
    for band, trait in zip(TONE_BANDS, traits):
        freq = band_center_frequency(band, params)
        wave_sum += (0.02 + 0.13 * trait) * np.sin(2.0 * np.pi * freq * t)
    return wave_sum


def trait_transcript(traits: np.ndarray) -> str:
    return " ".join(f"{c}{int(round(t * 99)):02d}" for c, t in zip("ocean", traits))


def _write_wav(path: Path, samples: np.ndarray, sample_rate: int):
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def read_wav(path) -> tuple:
    with wave.open(str(path), "rb") as wf:
        sr = wf.getframerate()
        n = wf.getnframes()
        raw = wf.readframes(n)
        width = wf.getsampwidth()
        channels = wf.getnchannels()
    if width != 2:
        raise ValidationError(f"{path}: only 16-bit PCM supported, got width {width}")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data, sr


def generate_synthetic_dataset(n_videos: int, seed: int, out_dir,
                               duration_s: float = 6.5, fps: float = 2.0,
                               sample_rate: int = 16000, ratio=(3, 1, 1)) -> DatasetManifest:
    """Write frames/, audio/, and manifest.jsonl under out_dir; returns the manifest."""
    if n_videos < 1:
        raise ValidationError(f"n_videos must be at least 1, got {n_videos}")
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    n_source_frames = int(round(duration_s * fps))
    for k in range(n_videos):
        vid = f"synth{k:04d}"
        traits = rng.uniform(0.05, 0.95, size=5)
        frame_dir = out_dir / "frames" / vid
        frame_dir.mkdir(exist_ok=True)
        img = Image.fromarray(trait_frame(traits))
        for j in range(n_source_frames):
            img.save(frame_dir / f"frame_{j:05d}.png")
        audio_path = out_dir / "audio" / f"{vid}.wav"
        _write_wav(audio_path, trait_waveform(traits, duration_s, sample_rate), sample_rate)
        records.append(VideoRecord(
            id=vid,
            frames_path=str(Path("frames") / vid),
            audio_path=str(Path("audio") / f"{vid}.wav"),
            transcript=trait_transcript(traits),
            labels=TraitVector.from_array(traits),
            split="train",
            duration_s=duration_s,
            fps=fps,
        ))
    if n_videos >= sum(ratio):
        manifest = split_dataset(records, ratio=ratio, seed=seed)
    else:
        manifest = DatasetManifest(tuple(records), tuple(ratio))
    (out_dir / "manifest.jsonl").write_text(serialize_manifest(manifest))
    return manifest
