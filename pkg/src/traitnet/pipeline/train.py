"""Two-stage training orchestration: minibatching, curves, checkpoints."""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from ..core import DatasetManifest, TraitVector
from ..errors import AssemblyError, DatasetError, NumericError
from ..fusion import FusedCheckpoint, FusedModel, assemble_fused_model, verify_transfer
from ..nnkit import Adam
from ..preprocess import augment
from ..subnets import Subnet, SubnetCheckpoint, default_subnet_config
from .config import TrainConfig
from .evaluate import evaluate_predictions

_FEATURE_KEYS = {
    "ambient": "ambient_frames",
    "facial": "face_frames",
    "audio": "logmel_patches",
    "transcription": "transcript_embedding",
}


def modality_input(features: Dict[str, np.ndarray], modality: str) -> np.ndarray:
    return features[_FEATURE_KEYS[modality]]


def _window(arr: np.ndarray, length: int, rng: Optional[np.random.Generator], record_id: str) -> np.ndarray:
    if arr.shape[0] < length:
        raise DatasetError(
            f"record {record_id!r}: only {arr.shape[0]} timesteps available, need {length}")
    if rng is None:
        return arr[:length]
    start = int(rng.integers(0, arr.shape[0] - length + 1))
    return arr[start:start + length]


def build_batch(cache: Dict[str, Dict[str, np.ndarray]], ids, modality: str,
                config: TrainConfig, rng: Optional[np.random.Generator] = None,
                aug_rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Batched inputs; a contiguous random timestep window when rng is given,
    the leading window otherwise. Photometric augmentation applies to image
    modalities only and only when a training rng is supplied."""
    rows = []
    for rid in ids:
        arr = modality_input(cache[rid], modality)
        if modality == "transcription":
            rows.append(arr)
            continue
        win = _window(arr, config.frames_per_video, rng, rid)
        if modality in ("ambient", "facial") and aug_rng is not None and not config.augmentation.is_identity:
            win = np.stack([augment(f, config.augmentation, aug_rng) for f in win])
        rows.append(win)
    return np.stack(rows)


def _labels(manifest: DatasetManifest, ids) -> np.ndarray:
    by_id = {r.id: r for r in manifest.records}
    return np.stack([by_id[i].labels.as_array() for i in ids])


def mae_loss(preds: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    diff = preds - targets
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


def split_accuracy_stage1(subnet: Subnet, manifest: DatasetManifest,
                          cache: Dict, config: TrainConfig, split: str) -> Optional[float]:
    records = [r for r in manifest.split_records(split) if r.labels is not None]
    if not records:
        return None
    ids = [r.id for r in records]
    x = build_batch(cache, ids, subnet.config.modality, config)
    preds = subnet.forward(x, train=False)
    return evaluate_predictions(_labels(manifest, ids), preds, split).mean_accuracy


def train_stage1(manifest: DatasetManifest, cache: Dict, config: TrainConfig
                 ) -> Tuple[Subnet, SubnetCheckpoint, Dict]:
    """Train one modality subnetwork with Adam on mean-absolute-error loss."""
    modality = config.modality
    train_ids = [r.id for r in manifest.split_records("train")]
    if not train_ids:
        raise DatasetError("training split is empty")
    model_rng = np.random.default_rng([config.seed, 0])
    batch_rng = np.random.default_rng([config.seed, 1])
    aug_rng = np.random.default_rng([config.seed, 2])
    subnet_config = default_subnet_config(
        modality, hidden_size=config.lstm_hidden, num_layers=config.lstm_layers,
        residual=config.lstm_residual, dropout_p=config.dropout_p)
    subnet = Subnet(subnet_config, model_rng)
    optimizer = Adam(list(subnet.named_params()), config.effective_learning_rate)
    history = {"steps": [], "loss": [], "train_accuracy": [], "val_accuracy": []}
    best_val = None
    best_state = None
    last_good = subnet.state_dict()
    steps_run = 0

    def _meta(note=""):
        return {
            "modality": modality,
            "seed": config.seed,
            "steps": steps_run,
            "learning_rate": config.effective_learning_rate,
            "train_config": config.to_dict(),
            "final_train_accuracy": history["train_accuracy"][-1] if history["train_accuracy"] else None,
            "final_val_accuracy": history["val_accuracy"][-1] if history["val_accuracy"] else None,
            "note": note,
        }

    stop = False
    for step in range(1, config.max_steps + 1):
        n = min(config.batch_videos, len(train_ids))
        ids = list(batch_rng.choice(train_ids, size=n, replace=len(train_ids) < config.batch_videos))
        x = build_batch(cache, ids, modality, config, rng=batch_rng, aug_rng=aug_rng)
        preds = subnet.forward(x, train=True)
        loss, dpreds = mae_loss(preds, _labels(manifest, ids))
        if not np.isfinite(loss):
            ckpt = SubnetCheckpoint(subnet_config, last_good, _meta("aborted: non-finite loss"))
            err = NumericError(f"non-finite loss at step {step}; last good checkpoint retained")
            err.last_good_checkpoint = ckpt
            raise err
        subnet.zero_grad()
        subnet.backward(dpreds)
        optimizer.step()
        steps_run = step
        last_good = subnet.state_dict()
        if step % config.eval_every == 0 or step == config.max_steps:
            train_acc = split_accuracy_stage1(subnet, manifest, cache, config, "train")
            val_acc = split_accuracy_stage1(subnet, manifest, cache, config, "validation")
            history["steps"].append(step)
            history["loss"].append(loss)
            history["train_accuracy"].append(train_acc)
            history["val_accuracy"].append(val_acc)
            if val_acc is not None and (best_val is None or val_acc > best_val):
                best_val = val_acc
                best_state = subnet.state_dict()
            if config.stop_at_train_accuracy is not None and train_acc is not None \
                    and train_acc >= config.stop_at_train_accuracy:
                stop = True
        if stop:
            break

    meta = _meta()
    meta["best_val_accuracy"] = best_val
    if best_state is not None:
        subnet.load_state_dict(best_state)
    state = {k: v for k, v in subnet.state_dict().items() if not k.startswith("stage2_proj.")}
    ckpt = SubnetCheckpoint(subnet.config, state, meta)
    return subnet, ckpt, history


def _frozen_feature_cache(model: FusedModel, manifest: DatasetManifest, cache: Dict) -> Dict:
    """Per-record frozen extractor outputs over all available timesteps."""
    out = {}
    for record in manifest.records:
        feats = {}
        for m in model.config.concat_order:
            arr = modality_input(cache[record.id], m)
            feats[m] = model.subnets[m].backbone_features(arr[None, ...], train=False)[0] \
                if m != "transcription" else arr
        out[record.id] = feats
    return out


def _fused_batch_features(frozen: Dict, ids, config: TrainConfig,
                          rng: Optional[np.random.Generator]) -> Dict[str, np.ndarray]:
    batch = {}
    for m in ("ambient", "facial", "audio"):
        batch[m] = np.stack([_window(frozen[i][m], config.frames_per_video, rng, i) for i in ids])
    batch["transcription"] = np.stack([frozen[i]["transcription"] for i in ids])
    return batch


def split_accuracy_stage2(model: FusedModel, manifest: DatasetManifest, frozen: Dict,
                          config: TrainConfig, split: str) -> Optional[float]:
    records = [r for r in manifest.split_records(split) if r.labels is not None]
    if not records:
        return None
    ids = [r.id for r in records]
    preds = model.forward_from_features(_fused_batch_features(frozen, ids, config, None), train=False)
    return evaluate_predictions(_labels(manifest, ids), preds, split).mean_accuracy


def train_stage2(ckpts: Dict[str, SubnetCheckpoint], manifest: DatasetManifest,
                 cache: Dict, config: TrainConfig) -> Tuple[FusedModel, FusedCheckpoint, Dict]:
    """Assemble the fused model from stage-1 checkpoints and fine-tune it.

    Image backbones and the audio encoder stay frozen; their outputs are
    precomputed per record. Refuses to start when transfer verification fails.
    """
    model = assemble_fused_model(ckpts, seed=config.seed)
    discrepancies = verify_transfer(model, ckpts)
    if discrepancies:
        raise AssemblyError(f"transfer verification failed for: {discrepancies}")
    frozen_names = model.frozen_param_names()
    own = dict(model.named_params())
    frozen_before = {n: own[n].value.copy() for n in frozen_names}
    train_ids = [r.id for r in manifest.split_records("train")]
    if not train_ids:
        raise DatasetError("training split is empty")
    frozen_feats = _frozen_feature_cache(model, manifest, cache)
    batch_rng = np.random.default_rng([config.seed, 11])
    optimizer = Adam(list(model.named_params()), config.effective_learning_rate,
                     frozen_prefixes=tuple(model.config.frozen_prefixes))
    history = {"steps": [], "loss": [], "train_accuracy": [], "val_accuracy": []}
    best_val = None
    best_state = None
    steps_run = 0
    stop = False
    for step in range(1, config.max_steps + 1):
        n = min(config.batch_videos, len(train_ids))
        ids = list(batch_rng.choice(train_ids, size=n, replace=len(train_ids) < config.batch_videos))
        batch = _fused_batch_features(frozen_feats, ids, config, batch_rng)
        preds = model.forward_from_features(batch, train=True)
        loss, dpreds = mae_loss(preds, _labels(manifest, ids))
        if not np.isfinite(loss):
            err = NumericError(f"non-finite loss at stage-2 step {step}")
            raise err
        model.zero_grad()
        model.backward(dpreds)
        optimizer.step()
        steps_run = step
        if step % config.eval_every == 0 or step == config.max_steps:
            train_acc = split_accuracy_stage2(model, manifest, frozen_feats, config, "train")
            val_acc = split_accuracy_stage2(model, manifest, frozen_feats, config, "validation")
            history["steps"].append(step)
            history["loss"].append(loss)
            history["train_accuracy"].append(train_acc)
            history["val_accuracy"].append(val_acc)
            if val_acc is not None and (best_val is None or val_acc > best_val):
                best_val = val_acc
                best_state = model.state_dict()
            if config.stop_at_train_accuracy is not None and train_acc is not None \
                    and train_acc >= config.stop_at_train_accuracy:
                stop = True
        if stop:
            break
    for name in frozen_names:
        if not np.array_equal(own[name].value, frozen_before[name]):
            raise NumericError(f"frozen parameter {name!r} changed during stage-2 training")
    if best_state is not None:
        model.load_state_dict(best_state)
    provenance = {m: ckpts[m].content_hash() for m in ckpts}
    meta = {
        "seed": config.seed,
        "steps": steps_run,
        "learning_rate": config.effective_learning_rate,
        "train_config": config.to_dict(),
        "final_train_accuracy": history["train_accuracy"][-1] if history["train_accuracy"] else None,
        "final_val_accuracy": history["val_accuracy"][-1] if history["val_accuracy"] else None,
        "best_val_accuracy": best_val,
    }
    ckpt = FusedCheckpoint.from_model(model, provenance, meta)
    return model, ckpt, history


def subnet_predictor(subnet: Subnet, cache: Dict, config: TrainConfig):
    def predict(record_id: str) -> TraitVector:
        x = build_batch(cache, [record_id], subnet.config.modality, config)
        return TraitVector.from_array(subnet.forward(x, train=False)[0])
    return predict


def fused_predictor(model: FusedModel, cache: Dict, config: TrainConfig):
    def predict(record_id: str) -> TraitVector:
        inputs = {}
        for m in model.config.concat_order:
            arr = modality_input(cache[record_id], m)
            if m != "transcription":
                arr = _window(arr, config.frames_per_video, None, record_id)
            inputs[m] = arr[None, ...]
        return TraitVector.from_array(model.forward(inputs, train=False)[0])
    return predict
