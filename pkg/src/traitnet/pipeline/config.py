"""Training configuration mirroring the two-stage recipe."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigurationError, ValidationError
from ..preprocess import AugmentationConfig
from ..subnets import MODALITIES

STAGE1_LEARNING_RATES = {"ambient": 1e-5, "facial": 1e-5, "audio": 1e-4, "transcription": 1e-5}


def default_learning_rate(modality: str) -> float:
    if modality not in STAGE1_LEARNING_RATES:
        raise ValidationError(f"unknown modality {modality!r}")
    return STAGE1_LEARNING_RATES[modality]


@dataclass(frozen=True)
class TrainConfig:
    stage: int = 1
    modality: str = ""
    learning_rate: float | None = None
    batch_videos: int = 8
    frames_per_video: int = 6
    dropout_p: float = 0.5
    max_steps: int = 1000
    seed: int = 0
    eval_every: int = 100
    stop_at_train_accuracy: float | None = None
    lstm_hidden: int = 128
    lstm_layers: int = 6
    lstm_residual: bool = True
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ConfigurationError(f"stage must be 1 or 2, got {self.stage}")
        if self.stage == 1 and self.modality not in MODALITIES:
            raise ConfigurationError(
                f"stage-1 config must name exactly one modality out of {MODALITIES}, got {self.modality!r}")
        if self.stage == 2 and self.modality:
            raise ConfigurationError("stage-2 config must not name a single modality")
        if self.batch_videos < 1 or self.frames_per_video < 1 or self.max_steps < 1:
            raise ConfigurationError("batch_videos, frames_per_video, and max_steps must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigurationError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    @property
    def effective_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        if self.stage == 1:
            return default_learning_rate(self.modality)
        return 1e-4

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "modality": self.modality,
            "learning_rate": self.learning_rate,
            "batch_videos": self.batch_videos,
            "frames_per_video": self.frames_per_video,
            "dropout_p": self.dropout_p,
            "max_steps": self.max_steps,
            "seed": self.seed,
            "eval_every": self.eval_every,
            "stop_at_train_accuracy": self.stop_at_train_accuracy,
            "lstm_hidden": self.lstm_hidden,
            "lstm_layers": self.lstm_layers,
            "lstm_residual": self.lstm_residual,
            "aug_brightness": self.augmentation.brightness,
            "aug_saturation": self.augmentation.saturation,
            "aug_hue": self.augmentation.hue,
            "aug_contrast": self.augmentation.contrast,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        aug = AugmentationConfig(
            brightness=d.pop("aug_brightness", 0.0),
            saturation=d.pop("aug_saturation", 0.0),
            hue=d.pop("aug_hue", 0.0),
            contrast=d.pop("aug_contrast", 0.0),
        )
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown train config keys: {sorted(unknown)}")
        return cls(augmentation=aug, **d)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def for_modality(self, modality: str) -> "TrainConfig":
        return replace(self, modality=modality, stage=1)
