"""Shared domain types: trait vectors, video records, manifests, reports.

All types are immutable after construction and safe to share across threads.
Serialization order for the five traits is fixed to O, C, E, A, N everywhere.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import IntegrityError, ParseError, SizingError, ValidationError

TRAIT_NAMES = ("openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism")
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class TraitVector:
    """Five continuous trait scores in [0, 1], canonical OCEAN order."""

    openness: float
    conscientiousness: float
    extraversion: float
    agreeableness: float
    neuroticism: float

    def __post_init__(self):
        for name in TRAIT_NAMES:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"trait component '{name}' is not finite: {v!r}")
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"trait component '{name}' outside [0, 1]: {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in TRAIT_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "TraitVector":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (5,):
            raise ValidationError(f"trait vector needs exactly 5 components, got shape {values.shape}")
        return cls(*(float(v) for v in values))

    def as_list(self) -> list:
        return [float(getattr(self, n)) for n in TRAIT_NAMES]


def absolute_trait_error(truth: TraitVector, pred: TraitVector) -> np.ndarray:
    """Component-wise |truth - pred| in canonical order; each entry in [0, 1]."""
    return np.abs(truth.as_array() - pred.as_array())


@dataclass(frozen=True)
class VideoRecord:
    id: str
    frames_path: str
    audio_path: str
    transcript: str
    labels: Optional[TraitVector]
    split: str
    duration_s: float
    fps: float

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if self.split not in SPLITS:
            raise ValidationError(f"record '{self.id}': unknown split {self.split!r}")
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValidationError(f"record '{self.id}': duration_s must be positive, got {self.duration_s!r}")
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise ValidationError(f"record '{self.id}': fps must be positive, got {self.fps!r}")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple
    split_ratio: tuple = (3, 1, 1)

    def __post_init__(self):
        if len(self.split_ratio) != 3 or any(r <= 0 for r in self.split_ratio):
            raise ValidationError(f"split_ratio must be three positive integers, got {self.split_ratio!r}")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise IntegrityError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def split_counts(self) -> tuple:
        counts = {s: 0 for s in SPLITS}
        for rec in self.records:
            counts[rec.split] += 1
        return tuple(counts[s] for s in SPLITS)

    def split_records(self, split: str) -> list:
        if split not in SPLITS:
            raise ValidationError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def check_ratio(self):
        """Split counts must respect the declared ratio within +-1 per split."""
        n = len(self.records)
        if n == 0:
            return
        total = sum(self.split_ratio)
        counts = self.split_counts()
        for count, share in zip(counts, self.split_ratio):
            expected = n * share / total
            if abs(count - expected) > 1.0 + 1e-9:
                raise IntegrityError(
                    f"split counts {counts} do not respect ratio {self.split_ratio} "
                    f"for {n} records (off by more than one record)"
                )


@dataclass(frozen=True)
class EvaluationReport:
    per_trait_accuracy: tuple
    mean_accuracy: float
    n_videos: int
    split_name: str = ""

    def __post_init__(self):
        if len(self.per_trait_accuracy) != 5:
            raise ValidationError("per_trait_accuracy needs exactly 5 entries")
        for a in self.per_trait_accuracy:
            if not (math.isfinite(a) and 0.0 <= a <= 1.0):
                raise ValidationError(f"per-trait accuracy outside [0, 1]: {a!r}")
        if self.n_videos <= 0:
            raise ValidationError("n_videos must be positive")
        if abs(self.mean_accuracy - sum(self.per_trait_accuracy) / 5.0) > 1e-12:
            raise ValidationError("mean_accuracy must equal the mean of per_trait_accuracy")

    def to_dict(self) -> dict:
        return {
            "per_trait_accuracy": {n: float(a) for n, a in zip(TRAIT_NAMES, self.per_trait_accuracy)},
            "mean_accuracy": float(self.mean_accuracy),
            "n_videos": int(self.n_videos),
            "split_name": self.split_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        per = tuple(float(d["per_trait_accuracy"][n]) for n in TRAIT_NAMES)
        return cls(per, float(d["mean_accuracy"]), int(d["n_videos"]), d.get("split_name", ""))


_MANIFEST_KEYS = {"id", "frames_path", "audio_path", "transcript", "labels", "split", "duration_s", "fps"}


def _record_to_obj(rec: VideoRecord) -> dict:
    obj = {
        "id": rec.id,
        "frames_path": rec.frames_path,
        "audio_path": rec.audio_path,
        "transcript": rec.transcript,
        "split": rec.split,
        "duration_s": rec.duration_s,
        "fps": rec.fps,
    }
    if rec.labels is not None:
        obj["labels"] = rec.labels.as_list()
    return obj


def _record_from_obj(obj: dict, line_no: int) -> VideoRecord:
    unknown = set(obj) - _MANIFEST_KEYS
    if unknown:
        raise ParseError(f"unknown manifest keys {sorted(unknown)}", line=line_no)
    missing = {"id", "frames_path", "audio_path", "split", "duration_s", "fps"} - set(obj)
    if missing:
        raise ParseError(f"missing manifest keys {sorted(missing)}", line=line_no)
    labels = None
    if "labels" in obj and obj["labels"] is not None:
        raw = obj["labels"]
        if not isinstance(raw, list) or len(raw) != 5:
            raise ParseError(f"labels must be a 5-array in OCEAN order, got {raw!r}", line=line_no)
        labels = TraitVector.from_array(raw)
    if labels is None and obj["split"] != "test":
        raise ParseError(f"record {obj['id']!r}: labels required for split {obj['split']!r}",
                         line=line_no)
    return VideoRecord(
        id=str(obj["id"]),
        frames_path=str(obj["frames_path"]),
        audio_path=str(obj["audio_path"]),
        transcript=str(obj.get("transcript", "")),
        labels=labels,
        split=str(obj["split"]),
        duration_s=float(obj["duration_s"]),
        fps=float(obj["fps"]),
    )


def parse_manifest(text: str, split_ratio=(3, 1, 1), validate_ratio: bool = False) -> DatasetManifest:
    """Parse a line-delimited manifest document (one JSON object per line)."""
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed record: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict):
            raise ParseError("record line must be a flat key-value object", line=line_no)
        records.append(_record_from_obj(obj, line_no))
    manifest = DatasetManifest(tuple(records), tuple(split_ratio))
    if validate_ratio:
        manifest.check_ratio()
    return manifest


def serialize_manifest(manifest: DatasetManifest) -> str:
    return "\n".join(json.dumps(_record_to_obj(r)) for r in manifest.records) + ("\n" if manifest.records else "")


def _allocate_counts(n: int, ratio: Sequence[int]) -> list:
    # Largest-remainder apportionment; ties resolved in split order.
    total = sum(ratio)
    raw = [n * r / total for r in ratio]
    counts = [int(math.floor(x)) for x in raw]
    remainder = n - sum(counts)
    order = sorted(range(3), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def split_dataset(records: Iterable[VideoRecord], ratio=(3, 1, 1), seed: int = 0) -> DatasetManifest:
    """Assign each record to train/validation/test deterministically for a seed."""
    records = list(records)
    if not records:
        raise SizingError("cannot split an empty record list")
    ratio = tuple(int(r) for r in ratio)
    if len(ratio) != 3 or any(r <= 0 for r in ratio):
        raise ValidationError(f"ratio must be three positive integers, got {ratio!r}")
    if len(records) < sum(ratio):
        raise SizingError(f"need at least {sum(ratio)} records for ratio {ratio}, got {len(records)}")
    counts = _allocate_counts(len(records), ratio)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(records))
    assignment = {}
    pos = 0
    for split, count in zip(SPLITS, counts):
        for idx in perm[pos:pos + count]:
            assignment[int(idx)] = split
        pos += count
    out = [dataclasses.replace(rec, split=assignment[i]) for i, rec in enumerate(records)]
    return DatasetManifest(tuple(out), ratio)
