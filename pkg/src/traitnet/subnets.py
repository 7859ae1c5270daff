"""The four modality-specific networks and their stage-2 feature surfaces.

Ambient and facial subnetworks share one architecture (image backbone ->
LSTM stack -> trait head), audio runs a patch encoder before its LSTM stack,
and transcription uses three fully connected layers with no recurrence.
Pretrained backbones are out of scope; small trainable defaults honoring the
same interface contracts stand in for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from .core import TraitVector
from .errors import ConfigurationError, ShapeError, ValidationError
from .nnkit import (
    ConvBlock,
    Dropout,
    GlobalAvgPool,
    Linear,
    LstmStack,
    LstmStackConfig,
    Module,
    ReLU,
    Sigmoid,
    load_container,
    save_container,
    container_hash,
)
from .preprocess import TARGET_SIZE, EMBEDDING_DIM, FrameSequence, LogMelPatches

MODALITIES = ("ambient", "facial", "audio", "transcription")
STAGE2_DIMS = {"ambient": 80, "facial": 80, "audio": 20, "transcription": 20}


@runtime_checkable
class ImageBackboneContract(Protocol):
    feature_dim: int
    trainable: bool

    def features(self, images: np.ndarray) -> np.ndarray:
        """(N, 224, 224, 3) -> (N, feature_dim)."""
        ...


@runtime_checkable
class AudioEncoderContract(Protocol):
    embedding_dim: int
    trainable: bool

    def embed(self, patches: np.ndarray) -> np.ndarray:
        """(N, 96, 64) -> (N, 128)."""
        ...


class DefaultImageBackbone(Module):
    """Four conv+pool blocks down from 224x224x3 to a 256-dim feature."""

    def __init__(self, rng: np.random.Generator, feature_dim: int = 256):
        super().__init__()
        self.feature_dim = feature_dim
        self.trainable = True
        self.b1 = self.add_module("b1", ConvBlock(4, 3, 16, rng, stride=4, pool=2))    # 224 -> 56 -> 28
        self.b2 = self.add_module("b2", ConvBlock(3, 16, 32, rng, pad=1, pool=2))      # 28 -> 14
        self.b3 = self.add_module("b3", ConvBlock(3, 32, 64, rng, pad=1, pool=2))      # 14 -> 7
        self.b4 = self.add_module("b4", ConvBlock(3, 64, 128, rng, pad=1))             # 7 -> 7
        self.gap = GlobalAvgPool()
        self.proj = self.add_module("proj", Linear(128, feature_dim, rng))

    def forward(self, x, train: bool = False):
        if x.ndim != 4 or x.shape[1:] != (TARGET_SIZE, TARGET_SIZE, 3):
            raise ShapeError(f"backbone expects (N, 224, 224, 3), got {x.shape}")
        y = self.b1(x, train=train)
        y = self.b2(y, train=train)
        y = self.b3(y, train=train)
        y = self.b4(y, train=train)
        return self.proj(self.gap(y), train=train)

    def backward(self, dy):
        d = self.gap.backward(self.proj.backward(dy))
        d = self.b4.backward(d)
        d = self.b3.backward(d)
        d = self.b2.backward(d)
        return self.b1.backward(d)

    def features(self, images: np.ndarray) -> np.ndarray:
        return self.forward(np.asarray(images, dtype=np.float64), train=False)


class DefaultAudioEncoder(Module):
    """Three conv+pool blocks over a 96x64 patch ending in a 128-dim projection."""

    def __init__(self, rng: np.random.Generator, embedding_dim: int = 128):
        super().__init__()
        self.embedding_dim = embedding_dim
        self.trainable = True
        self.b1 = self.add_module("b1", ConvBlock(3, 1, 8, rng, pad=1, pool=4))   # 96x64 -> 24x16
        self.b2 = self.add_module("b2", ConvBlock(3, 8, 16, rng, pad=1, pool=2))  # -> 12x8
        self.b3 = self.add_module("b3", ConvBlock(3, 16, 32, rng, pad=1, pool=2)) # -> 6x4
        self.gap = GlobalAvgPool()
        self.proj = self.add_module("proj", Linear(32, embedding_dim, rng))

    def forward(self, x, train: bool = False):
        if x.ndim != 3 or x.shape[1:] != (96, 64):
            raise ShapeError(f"audio encoder expects (N, 96, 64) patches, got {x.shape}")
        y = x[..., None]
        y = self.b1(y, train=train)
        y = self.b2(y, train=train)
        y = self.b3(y, train=train)
        return self.proj(self.gap(y), train=train)

    def backward(self, dy):
        d = self.gap.backward(self.proj.backward(dy))
        d = self.b3.backward(d)
        d = self.b2.backward(d)
        d = self.b1.backward(d)
        return d[..., 0]

    def embed(self, patches: np.ndarray) -> np.ndarray:
        return self.forward(np.asarray(patches, dtype=np.float64), train=False)


@dataclass(frozen=True)
class SubnetConfig:
    modality: str
    lstm: Optional[LstmStackConfig] = None
    image_feature_dim: int = 256
    audio_embedding_dim: int = 128
    fc_sizes: tuple = (256, 64, 32)
    dropout_p: float = 0.0
    stage2_feature_dim: Optional[int] = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if self.modality == "transcription":
            if self.lstm is not None:
                raise ConfigurationError("transcription subnetwork has no recurrent part")
            if len(self.fc_sizes) != 3:
                raise ConfigurationError("transcription subnetwork needs exactly three fully connected layers")
        elif self.lstm is None:
            raise ConfigurationError(f"{self.modality} subnetwork requires an LSTM stack config")
        if self.stage2_feature_dim is None:
            object.__setattr__(self, "stage2_feature_dim", STAGE2_DIMS[self.modality])

    @property
    def penultimate_dim(self) -> int:
        return self.fc_sizes[-1] if self.modality == "transcription" else self.lstm.hidden_size

    def architecture_signature(self) -> dict:
        d = self.to_dict()
        d.pop("modality")
        return d

    def to_dict(self) -> dict:
        d = {
            "modality": self.modality,
            "image_feature_dim": self.image_feature_dim,
            "audio_embedding_dim": self.audio_embedding_dim,
            "fc_sizes": list(self.fc_sizes),
            "dropout_p": self.dropout_p,
            "stage2_feature_dim": self.stage2_feature_dim,
            "lstm": None,
        }
        if self.lstm is not None:
            d["lstm"] = {
                "num_layers": self.lstm.num_layers,
                "hidden_size": self.lstm.hidden_size,
                "residual": self.lstm.residual,
                "dropout_p": self.lstm.dropout_p,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SubnetConfig":
        lstm = LstmStackConfig(**d["lstm"]) if d.get("lstm") else None
        return cls(
            modality=d["modality"],
            lstm=lstm,
            image_feature_dim=d.get("image_feature_dim", 256),
            audio_embedding_dim=d.get("audio_embedding_dim", 128),
            fc_sizes=tuple(d.get("fc_sizes", (256, 64, 32))),
            dropout_p=d.get("dropout_p", 0.0),
            stage2_feature_dim=d.get("stage2_feature_dim"),
        )


def default_subnet_config(modality: str, hidden_size: int = 128, num_layers: int = 6,
                          residual: bool = True, dropout_p: float = 0.0) -> SubnetConfig:
    if modality == "transcription":
        return SubnetConfig(modality="transcription", dropout_p=dropout_p)
    return SubnetConfig(
        modality=modality,
        lstm=LstmStackConfig(num_layers=num_layers, hidden_size=hidden_size,
                             residual=residual, dropout_p=dropout_p),
    )


class Subnet(Module):
    """One stage-1 modality network, optionally carrying a stage-2 projection."""

    def __init__(self, config: SubnetConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        m = config.modality
        if m in ("ambient", "facial"):
            self.backbone = self.add_module("backbone", DefaultImageBackbone(rng, config.image_feature_dim))
            self.in_proj = self.add_module("in_proj", Linear(config.image_feature_dim, config.lstm.hidden_size, rng))
            self.lstm = self.add_module("lstm", LstmStack(config.lstm, config.lstm.hidden_size, rng))
        elif m == "audio":
            self.encoder = self.add_module("encoder", DefaultAudioEncoder(rng, config.audio_embedding_dim))
            self.in_proj = self.add_module("in_proj", Linear(config.audio_embedding_dim, config.lstm.hidden_size, rng))
            self.lstm = self.add_module("lstm", LstmStack(config.lstm, config.lstm.hidden_size, rng))
        else:
            sizes = (EMBEDDING_DIM,) + tuple(config.fc_sizes)
            self.fcs = []
            self.fc_relus = []
            self.fc_drops = []
            for i in range(3):
                self.fcs.append(self.add_module(f"fc{i + 1}", Linear(sizes[i], sizes[i + 1], rng)))
                self.fc_relus.append(ReLU())
                self.fc_drops.append(Dropout(config.dropout_p, rng))
        self.head = self.add_module("head", Linear(config.penultimate_dim, 5, rng))
        self.out_sigmoid = Sigmoid()
        self.stage2_proj: Optional[Linear] = None
        self._seq_shape = None
        self._from_features = False

    # -- construction helpers -------------------------------------------------

    def ensure_stage2_projection(self, rng: np.random.Generator) -> Linear:
        if self.stage2_proj is None:
            self.stage2_proj = self.add_module(
                "stage2_proj", Linear(self.config.penultimate_dim, self.config.stage2_feature_dim, rng))
        return self.stage2_proj

    # -- feature pipeline -----------------------------------------------------

    def _check_inputs(self, x: np.ndarray):
        m = self.config.modality
        if m in ("ambient", "facial"):
            if x.ndim != 5 or x.shape[2:] != (TARGET_SIZE, TARGET_SIZE, 3):
                raise ShapeError(f"{m} input must be (B, T, 224, 224, 3), got {x.shape}")
        elif m == "audio":
            if x.ndim != 4 or x.shape[2:] != (96, 64):
                raise ShapeError(f"audio input must be (B, P, 96, 64), got {x.shape}")
        else:
            if x.ndim != 2 or x.shape[1] != EMBEDDING_DIM:
                raise ShapeError(f"transcription input must be (B, {EMBEDDING_DIM}), got {x.shape}")
        if m != "transcription" and x.shape[1] < 1:
            raise ShapeError(f"{m} input needs at least one timestep, got {x.shape}")

    def backbone_features(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        """Frozen-eligible high-level features: (B, T, D) sequences or (B, 1024)."""
        x = np.asarray(x, dtype=np.float64)
        self._check_inputs(x)
        m = self.config.modality
        if m in ("ambient", "facial"):
            b, t = x.shape[:2]
            flat = self.backbone(x.reshape(b * t, TARGET_SIZE, TARGET_SIZE, 3), train=train)
            self._seq_shape = (b, t)
            return flat.reshape(b, t, -1)
        if m == "audio":
            b, t = x.shape[:2]
            flat = self.encoder(x.reshape(b * t, 96, 64), train=train)
            self._seq_shape = (b, t)
            return flat.reshape(b, t, -1)
        return x

    def penultimate_from_features(self, feats: np.ndarray, train: bool = False) -> np.ndarray:
        m = self.config.modality
        if m == "transcription":
            y = feats
            for fc, relu, drop in zip(self.fcs, self.fc_relus, self.fc_drops):
                y = drop(relu(fc(y, train=train)), train=train)
            return y
        seq = self.in_proj(feats, train=train)
        out = self.lstm(seq, train=train)
        self._t_len = out.shape[1]
        return out[:, -1, :]

    def _backward_penultimate_to_features(self, dpen: np.ndarray) -> np.ndarray:
        m = self.config.modality
        if m == "transcription":
            d = dpen
            for fc, relu, drop in zip(reversed(self.fcs), reversed(self.fc_relus), reversed(self.fc_drops)):
                d = fc.backward(relu.backward(drop.backward(d)))
            return d
        dseq = np.zeros((dpen.shape[0], self._t_len, dpen.shape[1]))
        dseq[:, -1, :] = dpen
        return self.in_proj.backward(self.lstm.backward(dseq))

    def _backward_features_to_input(self, dfeats: np.ndarray):
        m = self.config.modality
        if m == "transcription":
            return dfeats
        b, t = self._seq_shape
        flat = dfeats.reshape(b * t, -1)
        if m == "audio":
            return self.encoder.backward(flat).reshape(b, t, 96, 64)
        return self.backbone.backward(flat).reshape(b, t, TARGET_SIZE, TARGET_SIZE, 3)

    # -- stage-1 trait prediction --------------------------------------------

    def forward(self, x, train: bool = False):
        feats = self.backbone_features(x, train=train)
        self._from_features = False
        pen = self.penultimate_from_features(feats, train=train)
        return self.out_sigmoid(self.head(pen, train=train))

    def forward_from_features(self, feats, train: bool = False):
        self._from_features = True
        pen = self.penultimate_from_features(np.asarray(feats, dtype=np.float64), train=train)
        return self.out_sigmoid(self.head(pen, train=train))

    def backward(self, dprobs):
        dpen = self.head.backward(self.out_sigmoid.backward(dprobs))
        dfeats = self._backward_penultimate_to_features(dpen)
        if self._from_features:
            return dfeats
        return self._backward_features_to_input(dfeats)

    # -- stage-2 feature surface ---------------------------------------------

    def stage2_features(self, x, train: bool = False) -> np.ndarray:
        if self.stage2_proj is None:
            raise ConfigurationError(
                f"{self.config.modality} subnetwork has no stage-2 projection configured")
        feats = self.backbone_features(np.asarray(x, dtype=np.float64), train=train)
        self._from_features = False
        pen = self.penultimate_from_features(feats, train=train)
        return self.stage2_proj(pen, train=train)

    def stage2_features_from_features(self, feats, train: bool = False) -> np.ndarray:
        if self.stage2_proj is None:
            raise ConfigurationError(
                f"{self.config.modality} subnetwork has no stage-2 projection configured")
        self._from_features = True
        pen = self.penultimate_from_features(np.asarray(feats, dtype=np.float64), train=train)
        return self.stage2_proj(pen, train=train)

    def backward_stage2(self, dfeat):
        dpen = self.stage2_proj.backward(dfeat)
        dfeats = self._backward_penultimate_to_features(dpen)
        if self._from_features:
            return dfeats
        return self._backward_features_to_input(dfeats)

    # -- single-sample prediction --------------------------------------------

    def predict(self, sample_input) -> TraitVector:
        x = _as_batch(self.config.modality, sample_input)
        probs = self.forward(x, train=False)
        return TraitVector.from_array(probs[0])


def _as_batch(modality: str, sample_input) -> np.ndarray:
    if isinstance(sample_input, FrameSequence):
        sample_input = sample_input.frames
    elif isinstance(sample_input, LogMelPatches):
        sample_input = sample_input.patches
    elif hasattr(sample_input, "vector"):
        sample_input = sample_input.vector
    arr = np.asarray(sample_input, dtype=np.float64)
    return arr[None, ...]


def _check_modality(subnet: Subnet, modality: str):
    if subnet.config.modality != modality:
        raise ConfigurationError(f"expected a {modality} subnetwork, got {subnet.config.modality}")


def forward_ambient_stage1(subnet: Subnet, frames) -> TraitVector:
    _check_modality(subnet, "ambient")
    return subnet.predict(frames)


def forward_facial_stage1(subnet: Subnet, face_frames) -> TraitVector:
    _check_modality(subnet, "facial")
    return subnet.predict(face_frames)


def forward_audio_stage1(subnet: Subnet, patches) -> TraitVector:
    _check_modality(subnet, "audio")
    return subnet.predict(patches)


def forward_transcript_stage1(subnet: Subnet, embedding) -> TraitVector:
    _check_modality(subnet, "transcription")
    return subnet.predict(embedding)


def extract_stage2_features(subnet: Subnet, sample_input) -> np.ndarray:
    """Bypass the trait head: penultimate state projected to 80 or 20 dims."""
    return subnet.stage2_features(_as_batch(subnet.config.modality, sample_input), train=False)[0]


@dataclass(frozen=True)
class SubnetCheckpoint:
    config: SubnetConfig
    params: dict
    meta: dict = field(default_factory=dict)

    def save(self, path):
        save_container(path, {"kind": "subnet", "subnet": self.config.to_dict()}, self.params, self.meta)

    @classmethod
    def load(cls, path) -> "SubnetCheckpoint":
        config, tensors, meta = load_container(path)
        if config.get("kind") != "subnet":
            raise ValidationError(f"{path}: not a subnet checkpoint")
        return cls(SubnetConfig.from_dict(config["subnet"]), tensors, meta)

    def build(self, seed: int = 0) -> Subnet:
        subnet = Subnet(self.config, np.random.default_rng(seed))
        subnet.load_state_dict(self.params)
        return subnet

    def content_hash(self) -> str:
        return container_hash({"kind": "subnet", "subnet": self.config.to_dict()}, self.params, self.meta)

    @classmethod
    def from_subnet(cls, subnet: Subnet, meta: dict | None = None) -> "SubnetCheckpoint":
        state = {k: v for k, v in subnet.state_dict().items() if not k.startswith("stage2_proj.")}
        return cls(subnet.config, state, meta or {})
