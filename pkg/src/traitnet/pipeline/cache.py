"""Per-video preprocessing and the cached-tensor artifact files."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional

import numpy as np
from PIL import Image

from ..core import DatasetManifest, VideoRecord
from ..errors import DatasetError, EmptyMediaError
from ..nnkit import load_container, save_container
from ..preprocess import (
    FaceDetectorContract,
    HashTextEmbedder,
    IdentityFaceDetector,
    TextEmbedderContract,
    compute_log_mel,
    embed_transcript,
    extract_face_frames,
    resize_and_scale,
    sample_frames,
)
from .synth import read_wav

CACHE_KEYS = ("ambient_frames", "face_frames", "logmel_patches", "transcript_embedding")


def load_source_frames(frame_dir: Path) -> np.ndarray:
    files = sorted(frame_dir.glob("*.png")) + sorted(frame_dir.glob("*.jpg"))
    if not files:
        raise EmptyMediaError(f"no frame images under {frame_dir}")
    return np.stack([np.asarray(Image.open(f).convert("RGB")) for f in files])


def preprocess_record(record: VideoRecord, base_dir,
                      detector: Optional[FaceDetectorContract] = None,
                      embedder: Optional[TextEmbedderContract] = None) -> Dict[str, np.ndarray]:
    """All four cached modality tensors for one video."""
    base_dir = Path(base_dir)
    detector = detector or IdentityFaceDetector()
    embedder = embedder or HashTextEmbedder()
    try:
        source = load_source_frames(base_dir / record.frames_path)
        sampled = sample_frames(source, record.fps, record.duration_s)
        prepared = np.stack([resize_and_scale(f) for f in sampled.frames])
        ambient = type(sampled)(prepared, sampled.timestamps_s)
        faces = extract_face_frames(ambient, detector)
        waveform, sr = read_wav(base_dir / record.audio_path)
        patches = compute_log_mel(waveform, sr)
        embedding = embed_transcript(record.transcript, embedder)
    except Exception as exc:
        raise type(exc)(f"record {record.id!r}: {exc}") from exc
    return {
        "ambient_frames": ambient.frames,
        "face_frames": faces.frames,
        "logmel_patches": patches.patches,
        "transcript_embedding": embedding.vector,
    }


def build_feature_cache(manifest: DatasetManifest, base_dir, cache_dir=None,
                        detector: Optional[FaceDetectorContract] = None,
                        embedder: Optional[TextEmbedderContract] = None) -> Dict[str, Dict[str, np.ndarray]]:
    """Preprocess every record; optionally persist per-video container files."""
    cache = {}
    for record in manifest.records:
        feats = preprocess_record(record, base_dir, detector, embedder)
        cache[record.id] = feats
        if cache_dir is not None:
            cache_dir = Path(cache_dir)
            cache_dir.mkdir(parents=True, exist_ok=True)
            save_container(cache_dir / f"{record.id}.ckpt", {"kind": "features", "id": record.id}, feats)
    return cache


def load_feature_cache(manifest: DatasetManifest, cache_dir) -> Dict[str, Dict[str, np.ndarray]]:
    cache_dir = Path(cache_dir)
    cache = {}
    for record in manifest.records:
        path = cache_dir / f"{record.id}.ckpt"
        if not path.exists():
            raise DatasetError(f"no cached features for record {record.id!r} under {cache_dir}")
        _, tensors, _ = load_container(path)
        cache[record.id] = tensors
    return cache


def get_feature_cache(manifest: DatasetManifest, base_dir, cache_dir=None) -> Dict[str, Dict[str, np.ndarray]]:
    """Load the cache when present, otherwise preprocess (and persist if asked)."""
    if cache_dir is not None and Path(cache_dir).exists():
        try:
            return load_feature_cache(manifest, cache_dir)
        except DatasetError:
            pass
    return build_feature_cache(manifest, base_dir, cache_dir)
