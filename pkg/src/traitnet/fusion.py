"""Stage-2 assembly: transfer stage-1 weights, freeze high-level extractors,
concatenate 80+80+20+20 features, and predict traits through a fusion head."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .core import TraitVector
from .errors import AssemblyError, ConfigurationError, ModalityMissingError, ValidationError
from .nnkit import Dropout, Linear, Module, ReLU, Sigmoid, load_container, save_container
from .subnets import MODALITIES, Subnet, SubnetCheckpoint, SubnetConfig

CONCAT_ORDER = ("ambient", "facial", "audio", "transcription")
DEFAULT_FROZEN_PREFIXES = ("ambient.backbone.", "facial.backbone.", "audio.encoder.")


@dataclass(frozen=True)
class FusedModelConfig:
    subnet_configs: Dict[str, SubnetConfig]
    fusion_hidden: int = 64
    dropout_p: float = 0.0
    frozen_prefixes: tuple = DEFAULT_FROZEN_PREFIXES
    concat_order: tuple = CONCAT_ORDER

    def __post_init__(self):
        missing = set(MODALITIES) - set(self.subnet_configs)
        if missing:
            raise AssemblyError(f"missing modality configs: {sorted(missing)}")
        if tuple(self.concat_order) != CONCAT_ORDER:
            raise ConfigurationError(f"concat order is fixed to {CONCAT_ORDER}")
        total = sum(self.subnet_configs[m].stage2_feature_dim for m in CONCAT_ORDER)
        if total != 200:
            raise ConfigurationError(f"concatenated stage-2 feature length must be 200, got {total}")
        for m in ("ambient", "facial", "audio"):
            cfg = self.subnet_configs[m]
            if cfg.lstm.num_layers != 6:
                raise ConfigurationError(
                    f"{m} stage-2 stack must have six LSTM layers, got {cfg.lstm.num_layers}")

    @property
    def concat_dim(self) -> int:
        return sum(self.subnet_configs[m].stage2_feature_dim for m in self.concat_order)

    def slice_for(self, modality: str) -> slice:
        start = 0
        for m in self.concat_order:
            dim = self.subnet_configs[m].stage2_feature_dim
            if m == modality:
                return slice(start, start + dim)
            start += dim
        raise ValidationError(f"unknown modality {modality!r}")

    def to_dict(self) -> dict:
        return {
            "subnet_configs": {m: c.to_dict() for m, c in self.subnet_configs.items()},
            "fusion_hidden": self.fusion_hidden,
            "dropout_p": self.dropout_p,
            "frozen_prefixes": list(self.frozen_prefixes),
            "concat_order": list(self.concat_order),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FusedModelConfig":
        return cls(
            subnet_configs={m: SubnetConfig.from_dict(c) for m, c in d["subnet_configs"].items()},
            fusion_hidden=d.get("fusion_hidden", 64),
            dropout_p=d.get("dropout_p", 0.0),
            frozen_prefixes=tuple(d.get("frozen_prefixes", DEFAULT_FROZEN_PREFIXES)),
            concat_order=tuple(d.get("concat_order", CONCAT_ORDER)),
        )


class FusedModel(Module):
    def __init__(self, config: FusedModelConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.subnets: Dict[str, Subnet] = {}
        for m in config.concat_order:
            subnet = Subnet(config.subnet_configs[m], rng)
            subnet.ensure_stage2_projection(rng)
            self.subnets[m] = self.add_module(m, subnet)
        self.fusion_drop = Dropout(config.dropout_p, rng)
        self.fusion_fc1 = self.add_module("fusion.fc1", Linear(config.concat_dim, config.fusion_hidden, rng))
        self.fusion_relu = ReLU()
        self.fusion_fc2 = self.add_module("fusion.fc2", Linear(config.fusion_hidden, 5, rng))
        self.out_sigmoid = Sigmoid()

    def frozen_param_names(self) -> set:
        return {name for name, _ in self.named_params()
                if any(name.startswith(p) for p in self.config.frozen_prefixes)}

    def _head(self, concat: np.ndarray, train: bool) -> np.ndarray:
        y = self.fusion_drop(concat, train=train)
        y = self.fusion_relu(self.fusion_fc1(y, train=train))
        return self.out_sigmoid(self.fusion_fc2(y, train=train))

    def _backward_head(self, dprobs: np.ndarray) -> np.ndarray:
        d = self.fusion_fc2.backward(self.out_sigmoid.backward(dprobs))
        d = self.fusion_fc1.backward(self.fusion_relu.backward(d))
        return self.fusion_drop.backward(d)

    def forward(self, inputs: Dict[str, np.ndarray], train: bool = False):
        """inputs maps each modality to its batched prepared input."""
        parts = []
        for m in self.config.concat_order:
            if m not in inputs or inputs[m] is None:
                raise ModalityMissingError(f"missing {m} input for fused forward")
            parts.append(self.subnets[m].stage2_features(inputs[m], train=train))
        return self._head(np.concatenate(parts, axis=1), train=train)

    def forward_from_features(self, features: Dict[str, np.ndarray], train: bool = False):
        """Same as forward but starting from precomputed frozen extractor outputs."""
        parts = []
        for m in self.config.concat_order:
            if m not in features or features[m] is None:
                raise ModalityMissingError(f"missing {m} features for fused forward")
            parts.append(self.subnets[m].stage2_features_from_features(features[m], train=train))
        return self._head(np.concatenate(parts, axis=1), train=train)

    def backward(self, dprobs):
        dconcat = self._backward_head(np.asarray(dprobs, dtype=np.float64))
        grads = {}
        for m in self.config.concat_order:
            grads[m] = self.subnets[m].backward_stage2(dconcat[:, self.config.slice_for(m)])
        return grads

    def predict(self, sample_inputs: Dict) -> TraitVector:
        from .subnets import _as_batch

        batched = {}
        for m in self.config.concat_order:
            if m not in sample_inputs or sample_inputs[m] is None:
                raise ModalityMissingError(f"missing {m} input for sample")
            batched[m] = _as_batch(m, sample_inputs[m])
        return TraitVector.from_array(self.forward(batched, train=False)[0])


def forward_fused(model: FusedModel, sample_inputs: Dict) -> TraitVector:
    return model.predict(sample_inputs)


def transferred_names(ckpt: SubnetCheckpoint, modality: str) -> dict:
    return {f"{modality}.{name}": value for name, value in ckpt.params.items()}


def assemble_fused_model(ckpts: Dict[str, SubnetCheckpoint], config: Optional[FusedModelConfig] = None,
                         seed: int = 0) -> FusedModel:
    """Build the stage-2 model with stage-1 parameters copied bit-exactly.

    The fusion head and the stage-2 projections are freshly initialized;
    frozen groups are defined by config.frozen_prefixes.
    """
    missing = set(MODALITIES) - set(ckpts)
    if missing:
        raise AssemblyError(f"missing stage-1 checkpoints for: {sorted(missing)}")
    if config is None:
        config = FusedModelConfig(subnet_configs={m: ckpts[m].config for m in MODALITIES})
    model = FusedModel(config, np.random.default_rng(seed))
    own = dict(model.named_params())
    for m in MODALITIES:
        if ckpts[m].config.to_dict() != config.subnet_configs[m].to_dict():
            raise ConfigurationError(f"{m} checkpoint config incompatible with fused config")
        for name, value in transferred_names(ckpts[m], m).items():
            if name not in own:
                raise ConfigurationError(f"transferred parameter {name!r} has no slot in fused model")
            if own[name].value.shape != value.shape:
                raise ConfigurationError(
                    f"shape mismatch for {name!r}: checkpoint {value.shape} vs model {own[name].value.shape}")
            own[name].value[...] = value
    return model


def verify_transfer(model: FusedModel, ckpts: Dict[str, SubnetCheckpoint]) -> list:
    """List of transferred parameter names whose current values differ bit-exactly
    from their stage-1 sources. Empty list = transfer intact."""
    own = dict(model.named_params())
    mismatches = []
    for m in MODALITIES:
        for name, value in transferred_names(ckpts[m], m).items():
            if name not in own or own[name].value.shape != value.shape or \
                    not np.array_equal(own[name].value, value):
                mismatches.append(name)
    return sorted(mismatches)


@dataclass(frozen=True)
class FusedCheckpoint:
    config: FusedModelConfig
    params: dict
    provenance: Dict[str, str]
    meta: dict = field(default_factory=dict)

    def save(self, path):
        save_container(
            path,
            {"kind": "fused", "fused": self.config.to_dict(), "provenance": dict(self.provenance)},
            self.params, self.meta)

    @classmethod
    def load(cls, path) -> "FusedCheckpoint":
        config, tensors, meta = load_container(path)
        if config.get("kind") != "fused":
            raise ValidationError(f"{path}: not a fused checkpoint")
        return cls(FusedModelConfig.from_dict(config["fused"]), tensors, config.get("provenance", {}), meta)

    def build(self, seed: int = 0) -> FusedModel:
        model = FusedModel(self.config, np.random.default_rng(seed))
        model.load_state_dict(self.params)
        return model

    @classmethod
    def from_model(cls, model: FusedModel, provenance: Dict[str, str], meta: dict | None = None) -> "FusedCheckpoint":
        return cls(model.config, model.state_dict(), dict(provenance), meta or {})
