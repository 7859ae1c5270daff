"""Frame sampling, resizing, photometric augmentation, and face-crop extraction.

All operations are deterministic given their inputs and (for augmentation) a
seeded random stream. Geometry-changing augmentation, in particular flipping,
is never applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from ..errors import EmptyMediaError, FaceAbsentError, FormatError, ValidationError

TARGET_SIZE = 224

# RGB <-> YIQ, used for hue rotation.
_RGB_TO_YIQ = np.array([
    [0.299, 0.587, 0.114],
    [0.595716, -0.274453, -0.321263],
    [0.211456, -0.522591, 0.311135],
])
_YIQ_TO_RGB = np.linalg.inv(_RGB_TO_YIQ)


@dataclass(frozen=True)
class FrameSequence:
    """Prepared frames (N, H, W, 3) in [0, 1] with matching timestamps in seconds."""

    frames: np.ndarray
    timestamps_s: np.ndarray

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise FormatError(f"frames must be (N, H, W, 3), got {self.frames.shape}")
        if self.timestamps_s.shape != (self.frames.shape[0],):
            raise ValidationError("timestamps must match frame count")

    def __len__(self) -> int:
        return self.frames.shape[0]


def nearest_frame_index(t: float, fps: float, n_frames: int) -> int:
    # Nearest source frame to the instant t; equidistant ties go to the later frame.
    return min(int(math.floor(t * fps + 0.5)), n_frames - 1)


def sample_frames(frames: np.ndarray, fps: float, duration_s: float) -> FrameSequence:
    """One frame per whole second at midpoint timestamps t_k = k + 0.5."""
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[0] == 0:
        raise EmptyMediaError("no source frames available")
    if duration_s <= 0 or fps <= 0:
        raise ValidationError(f"duration_s and fps must be positive, got {duration_s}, {fps}")
    count = int(math.floor(duration_s))
    if count < 1:
        raise EmptyMediaError(f"clip of {duration_s} s is shorter than the 1 s sampling interval")
    timestamps = np.arange(count, dtype=np.float64) + 0.5
    indices = [nearest_frame_index(t, fps, frames.shape[0]) for t in timestamps]
    return FrameSequence(frames[indices].copy(), timestamps)


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear interpolation with half-pixel-center alignment and edge clamping."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if image.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    top = image[y0c[:, None], x0c[None, :]] * (1 - wx) + image[y0c[:, None], x1c[None, :]] * wx
    bot = image[y1c[:, None], x0c[None, :]] * (1 - wx) + image[y1c[:, None], x1c[None, :]] * wx
    return top * (1 - wy) + bot * wy


def resize_and_scale(image: np.ndarray, full_scale: Optional[float] = None) -> np.ndarray:
    """Resize to 224x224x3 and scale intensities into [0, 1]."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"expected an (H, W, 3) image, got shape {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise FormatError(f"image has non-positive dimensions: {image.shape}")
    if full_scale is None:
        full_scale = float(np.iinfo(image.dtype).max) if np.issubdtype(image.dtype, np.integer) else 1.0
    scaled = image.astype(np.float64) / full_scale
    if scaled.shape[:2] == (TARGET_SIZE, TARGET_SIZE):
        return scaled
    return bilinear_resize(scaled, TARGET_SIZE, TARGET_SIZE)


@dataclass(frozen=True)
class AugmentationConfig:
    """Max deltas for the four photometric jitters. Flips are never applied."""

    brightness: float = 0.0
    saturation: float = 0.0
    hue: float = 0.0
    contrast: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("brightness", "saturation", "hue", "contrast"):
            if getattr(self, name) < 0:
                raise ValidationError(f"augmentation delta {name!r} must be nonnegative")

    @property
    def is_identity(self) -> bool:
        return self.brightness == self.saturation == self.hue == self.contrast == 0.0


def _luminance(image: np.ndarray) -> np.ndarray:
    return image @ np.array([0.299, 0.587, 0.114])


def augment(image: np.ndarray, config: AugmentationConfig,
            rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Photometric jitter in fixed order brightness -> saturation -> hue -> contrast.

    Jitters with zero max delta are skipped entirely, so a zero config is the
    bit-exact identity. Output is clipped to [0, 1]; geometry is unchanged.
    """
    image = np.asarray(image, dtype=np.float64)
    if config.is_identity:
        return image
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = image
    if config.brightness > 0:
        out = out + rng.uniform(-config.brightness, config.brightness)
    if config.saturation > 0:
        factor = 1.0 + rng.uniform(-config.saturation, config.saturation)
        gray = _luminance(out)[..., None]
        out = gray + factor * (out - gray)
    if config.hue > 0:
        theta = 2.0 * np.pi * rng.uniform(-config.hue, config.hue)
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        rot = np.array([[1.0, 0.0, 0.0], [0.0, cos_t, -sin_t], [0.0, sin_t, cos_t]])
        out = out @ _RGB_TO_YIQ.T @ rot.T @ _YIQ_TO_RGB.T
    if config.contrast > 0:
        factor = 1.0 + rng.uniform(-config.contrast, config.contrast)
        mean = out.mean()
        out = mean + factor * (out - mean)
    return np.clip(out, 0.0, 1.0)


@runtime_checkable
class FaceDetectorContract(Protocol):
    def detect_and_align(self, image: np.ndarray) -> Optional[np.ndarray]:
        """Return an aligned 224x224x3 face crop, or None when no face is found."""
        ...


class IdentityFaceDetector:
    """Deterministic fake: the whole (resized) frame stands in for the face crop."""

    def detect_and_align(self, image: np.ndarray) -> Optional[np.ndarray]:
        image = np.asarray(image, dtype=np.float64)
        if image.shape[:2] == (TARGET_SIZE, TARGET_SIZE):
            return image
        return bilinear_resize(image, TARGET_SIZE, TARGET_SIZE)


def center_crop_square(image: np.ndarray) -> np.ndarray:
    h, w = image.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return image[top:top + side, left:left + side]


def extract_face_frames(frames: FrameSequence, detector: FaceDetectorContract) -> FrameSequence:
    """Face crops on the same timestamp grid as the ambient frames.

    Failed detections carry the last successful crop forward; before any
    success, a center crop of the current frame is used. If every frame fails,
    the sample has no usable face track and is rejected.
    """
    crops = []
    last_success = None
    any_success = False
    for frame in frames.frames:
        face = detector.detect_and_align(frame)
        if face is not None:
            if face.shape != (TARGET_SIZE, TARGET_SIZE, 3):
                raise FormatError(f"detector returned shape {face.shape}, expected (224, 224, 3)")
            last_success = np.asarray(face, dtype=np.float64)
            any_success = True
            crops.append(last_success)
        elif last_success is not None:
            crops.append(last_success)
        else:
            crop = center_crop_square(frame)
            if crop.shape[:2] != (TARGET_SIZE, TARGET_SIZE):
                crop = bilinear_resize(crop, TARGET_SIZE, TARGET_SIZE)
            crops.append(np.asarray(crop, dtype=np.float64))
    if not any_success:
        raise FaceAbsentError("face detection failed on every frame of the sample")
    return FrameSequence(np.stack(crops), frames.timestamps_s.copy())
