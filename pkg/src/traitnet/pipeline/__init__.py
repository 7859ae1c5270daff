from .config import STAGE1_LEARNING_RATES, TrainConfig, default_learning_rate
from .synth import generate_synthetic_dataset, read_wav, trait_frame, trait_transcript, trait_waveform
from .cache import (
    CACHE_KEYS,
    build_feature_cache,
    get_feature_cache,
    load_feature_cache,
    load_source_frames,
    preprocess_record,
)
from .evaluate import evaluate, evaluate_predictions
from .reference import (
    NJU_LAMDA_TEST,
    PROPOSED_MEAN,
    PROPOSED_PER_TRAIT,
    SUBNET_REFERENCES,
    VALIDATION_REFERENCES,
    ReferenceRow,
    emit_comparison_table,
)
from .train import (
    build_batch,
    fused_predictor,
    mae_loss,
    modality_input,
    split_accuracy_stage1,
    split_accuracy_stage2,
    subnet_predictor,
    train_stage1,
    train_stage2,
)
