"""The challenge metric: per-trait mean accuracy and its report."""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from ..core import DatasetManifest, EvaluationReport, TraitVector
from ..errors import EvaluationError, ValidationError


def evaluate_predictions(truths: np.ndarray, preds: np.ndarray,
                         split_name: str = "") -> EvaluationReport:
    """Accuracy per trait = 1 - mean absolute error over videos; mean over traits."""
    truths = np.asarray(truths, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if truths.ndim != 2 or truths.shape[1] != 5 or truths.shape != preds.shape:
        raise ValidationError(f"expected matching (N, 5) arrays, got {truths.shape} and {preds.shape}")
    if truths.shape[0] == 0:
        raise EvaluationError("cannot evaluate zero videos")
    per_trait = 1.0 - np.mean(np.abs(truths - preds), axis=0)
    return EvaluationReport(tuple(float(a) for a in per_trait), float(np.mean(per_trait)),
                            truths.shape[0], split_name)


def evaluate(predict: Callable[[str], TraitVector], manifest: DatasetManifest,
             split: str, ) -> EvaluationReport:
    """Run predict(record_id) over a labeled split and score it."""
    records = manifest.split_records(split)
    if not records:
        raise EvaluationError(f"split {split!r} has no records")
    truths, preds = [], []
    for record in records:
        if record.labels is None:
            raise EvaluationError(f"record {record.id!r} in split {split!r} has no labels")
        truths.append(record.labels.as_array())
        preds.append(predict(record.id).as_array())
    return evaluate_predictions(np.stack(truths), np.stack(preds), split_name=split)
