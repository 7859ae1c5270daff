"""Transcript embedding behind a fixed-parameter text-embedder contract.

A real language model is out of scope; a deterministic hash-based fake stands
in for it. The embedder's parameters are never updated by this package.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import ShapeError, ValidationError

EMBEDDING_DIM = 1024


@dataclass(frozen=True)
class TranscriptEmbedding:
    vector: np.ndarray
    token_count: int

    def __post_init__(self):
        if self.vector.shape != (EMBEDDING_DIM,):
            raise ShapeError(f"transcript embedding must have dimension {EMBEDDING_DIM}, got {self.vector.shape}")
        if self.token_count < 0:
            raise ValidationError("token_count must be nonnegative")


@runtime_checkable
class TextEmbedderContract(Protocol):
    def embed(self, text: str) -> TranscriptEmbedding:
        ...


@lru_cache(maxsize=65536)
def _token_vector(token: str) -> np.ndarray:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    vec = np.random.default_rng(seed).standard_normal(EMBEDDING_DIM)
    vec.flags.writeable = False
    return vec


class HashTextEmbedder:
    """Mean-pooled per-token hash vectors; deterministic, parameter-free."""

    def embed(self, text: str) -> TranscriptEmbedding:
        tokens = text.split()
        if not tokens:
            return TranscriptEmbedding(np.zeros(EMBEDDING_DIM), 0)
        pooled = np.mean([_token_vector(t) for t in tokens], axis=0)
        return TranscriptEmbedding(pooled, len(tokens))


def embed_transcript(text: str, embedder: TextEmbedderContract) -> TranscriptEmbedding:
    """Embed a transcript; empty or whitespace-only text maps to the zero vector."""
    if not text.split():
        return TranscriptEmbedding(np.zeros(EMBEDDING_DIM), 0)
    emb = embedder.embed(text)
    if emb.vector.shape != (EMBEDDING_DIM,):
        raise ShapeError(f"embedder returned dimension {emb.vector.shape}, expected ({EMBEDDING_DIM},)")
    return emb
