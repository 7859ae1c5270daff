from .frames import (
    AugmentationConfig,
    FaceDetectorContract,
    FrameSequence,
    IdentityFaceDetector,
    TARGET_SIZE,
    augment,
    bilinear_resize,
    center_crop_square,
    extract_face_frames,
    nearest_frame_index,
    resize_and_scale,
    sample_frames,
)
from .audio import (
    LogMelParams,
    LogMelPatches,
    band_center_frequency,
    compute_log_mel,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    num_spectrogram_frames,
    stft_magnitude,
)
from .text import (
    EMBEDDING_DIM,
    HashTextEmbedder,
    TextEmbedderContract,
    TranscriptEmbedding,
    embed_transcript,
)
