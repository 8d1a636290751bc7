# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
The eight-transform augmentation pipeline applied to clean fingerprints before
artifact injection.

Every transform keeps the image dimensions and the [0, 255] range. Geometric
transforms resample back into the input frame and fill uncovered pixels with
255, the white background of fingerprint scans.
"""

import math
from typing import List, Tuple

import cv2
import numpy as np
import pydantic
from scipy import ndimage

from stitchkit.errors import ArgumentError
from stitchkit.imgcore import GrayImage, resize_bilinear, sample_bilinear, to_uint8
from stitchkit.utils.logging import logger

BACKGROUND = 255

TRANSFORM_NAMES = (
    "hflip",
    "rotate",
    "crop",
    "perspective",
    "blur",
    "solarize",
    "posterize",
    "equalize",
)


class AugmentConfig(pydantic.BaseModel):
    """
    Inclusion probabilities and parameter ranges of the augmentation pipeline.

    Serialized as the ``augment`` section of the JSON config file and echoed
    verbatim into every manifest.
    """

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    hflip_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Horizontal flip probability")
    rotate_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Rotation probability")
    crop_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Resized-crop probability")
    perspective_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Perspective probability")
    blur_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Gaussian blur probability")
    solarize_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Solarization probability")
    posterize_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Posterization probability")
    equalize_prob: float = pydantic.Field(0.5, ge=0.0, le=1.0, description="Histogram equalization probability")

    rotation_degrees: float = pydantic.Field(
        15.0, ge=0.0, le=180.0, description="Rotation angle drawn uniformly from [-d, +d]"
    )
    crop_scale: Tuple[float, float] = pydantic.Field(
        (0.7, 1.0), description="Area fraction range of the resized crop"
    )
    perspective_distortion: float = pydantic.Field(
        0.3, ge=0.0, lt=1.0, description="Corner jitter as a fraction of the image dimension"
    )
    blur_sigma: Tuple[float, float] = pydantic.Field(
        (0.1, 2.0), description="Gaussian sigma range in pixels"
    )
    solarize_threshold: int = pydantic.Field(
        128, ge=0, le=256, description="Pixels at or above this value are inverted"
    )
    posterize_bits: Tuple[int, int] = pydantic.Field(
        (4, 8), description="Inclusive range of kept bits"
    )

    @pydantic.field_validator("crop_scale")
    @classmethod
    def _check_crop_scale(cls, value):
        low, high = value
        if not 0.0 < low <= high <= 1.0:
            raise ValueError(f"crop_scale must satisfy 0 < low <= high <= 1, got {value}")
        return value

    @pydantic.field_validator("blur_sigma")
    @classmethod
    def _check_blur_sigma(cls, value):
        low, high = value
        if not 0.0 < low <= high:
            raise ValueError(f"blur_sigma must satisfy 0 < low <= high, got {value}")
        return value

    @pydantic.field_validator("posterize_bits")
    @classmethod
    def _check_posterize_bits(cls, value):
        low, high = value
        if not 1 <= low <= high <= 8:
            raise ValueError(f"posterize_bits must satisfy 1 <= low <= high <= 8, got {value}")
        return value

    def probability(self, name: str) -> float:
        return getattr(self, f"{name}_prob")

    @classmethod
    def disabled(cls, **overrides) -> "AugmentConfig":
        """Config with every transform switched off."""
        probs = {f"{name}_prob": 0.0 for name in TRANSFORM_NAMES}
        probs.update(overrides)
        return cls(**probs)


def hflip(img: GrayImage) -> GrayImage:
    return GrayImage(img.pixels[:, ::-1])


def rotate(img: GrayImage, angle: float) -> GrayImage:
    """
    Rotate counter-clockwise by ``angle`` degrees about the image center.

    Output pixels whose source falls outside the frame become 255, so a
    constant image stays constant only when its value is 255. Any other
    constant keeps its value on the in-frame pixels and turns 255 in the
    uncovered corners.
    """
    if not math.isfinite(angle):
        raise ArgumentError(f"rotation angle must be finite, got {angle}")
    if angle % 360.0 == 0.0:
        return img

    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cx, cy = (img.width - 1) / 2.0, (img.height - 1) / 2.0
    ys, xs = np.mgrid[0 : img.height, 0 : img.width].astype(np.float64)
    rel_x, rel_y = xs - cx, ys - cy
    src_x = cx + rel_x * cos_t - rel_y * sin_t
    src_y = cy + rel_x * sin_t + rel_y * cos_t
    return GrayImage(to_uint8(sample_bilinear(img.pixels, src_y, src_x, fill=BACKGROUND)))


def random_resized_crop(img: GrayImage, scale: float, rng: np.random.Generator) -> GrayImage:
    """Crop a uniformly placed window covering ``scale`` of the area, resize back."""
    if not 0.0 < scale <= 1.0:
        raise ArgumentError(f"crop scale must lie in (0, 1], got {scale}")
    side = math.sqrt(scale)
    crop_w = min(img.width, max(1, int(round(img.width * side))))
    crop_h = min(img.height, max(1, int(round(img.height * side))))
    x0 = int(rng.integers(0, img.width - crop_w + 1))
    y0 = int(rng.integers(0, img.height - crop_h + 1))
    if (crop_w, crop_h) == img.size:
        return img
    window = GrayImage(img.pixels[y0 : y0 + crop_h, x0 : x0 + crop_w])
    return resize_bilinear(window, img.width, img.height)


def _homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 projective map taking each ``src`` point onto the matching ``dst`` point."""
    return cv2.getPerspectiveTransform(src.astype(np.float32), dst.astype(np.float32)).astype(np.float64)


def random_perspective(
    img: GrayImage, distortion: float, rng: np.random.Generator
) -> GrayImage:
    """
    Move each corner inward by up to ``distortion * dim / 2`` per axis and warp
    the image so the original corners land on the jittered ones.
    """
    if not 0.0 <= distortion < 1.0:
        raise ArgumentError(f"perspective distortion must lie in [0, 1), got {distortion}")
    if distortion == 0.0:
        return img

    w, h = img.width - 1, img.height - 1
    max_dx = distortion * img.width / 2.0
    max_dy = distortion * img.height / 2.0
    jitter = rng.uniform(0.0, 1.0, size=(4, 2)) * np.array([max_dx, max_dy])
    corners = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    inward = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=np.float64)
    warped = corners + inward * jitter

    # Inverse map: output pixel -> source coordinate.
    inverse = _homography(warped, corners)
    ys, xs = np.mgrid[0 : img.height, 0 : img.width].astype(np.float64)
    points = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    mapped = inverse @ points
    src_x = (mapped[0] / mapped[2]).reshape(xs.shape)
    src_y = (mapped[1] / mapped[2]).reshape(ys.shape)
    return GrayImage(to_uint8(sample_bilinear(img.pixels, src_y, src_x, fill=BACKGROUND)))


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    """Separable Gaussian of radius ceil(3 sigma) with edge-replicated borders."""
    if not sigma > 0.0:
        raise ArgumentError(f"blur sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    blurred = ndimage.gaussian_filter(
        img.pixels.astype(np.float64), sigma=sigma, mode="nearest", radius=radius
    )
    return GrayImage(to_uint8(blurred))


def solarize(img: GrayImage, threshold: int) -> GrayImage:
    if not 0 <= threshold <= 256:
        raise ArgumentError(f"solarize threshold must lie in [0, 256], got {threshold}")
    pixels = img.pixels
    return GrayImage(np.where(pixels >= threshold, 255 - pixels, pixels).astype(np.uint8))


def posterize(img: GrayImage, bits: int) -> GrayImage:
    if not 1 <= bits <= 8:
        raise ArgumentError(f"posterize bits must lie in [1, 8], got {bits}")
    keep = (0xFF << (8 - bits)) & 0xFF
    return GrayImage(img.pixels & np.uint8(keep))


def equalize_histogram(img: GrayImage) -> GrayImage:
    """
    Cumulative-histogram equalization over 256 bins.

    Level ``v`` maps to ``round(255 * (cdf(v) - cdf_min) / (N - cdf_min))``
    where ``cdf_min`` is the cumulative count at the darkest occupied level.
    A single-level image is returned unchanged.
    """
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(np.int64)
    cdf = np.cumsum(hist)
    total = int(cdf[-1])
    cdf_min = int(cdf[np.flatnonzero(hist)[0]])
    denominator = total - cdf_min
    if denominator == 0:
        return img
    numerator = np.clip(cdf - cdf_min, 0, None) * 255
    lut = ((2 * numerator + denominator) // (2 * denominator)).astype(np.uint8)
    return GrayImage(lut[img.pixels])


def _draw_and_apply(
    name: str, img: GrayImage, cfg: AugmentConfig, rng: np.random.Generator
) -> GrayImage:
    if name == "hflip":
        return hflip(img)
    if name == "rotate":
        angle = float(rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees))
        return rotate(img, angle)
    if name == "crop":
        return random_resized_crop(img, float(rng.uniform(*cfg.crop_scale)), rng)
    if name == "perspective":
        return random_perspective(img, cfg.perspective_distortion, rng)
    if name == "blur":
        return gaussian_blur(img, float(rng.uniform(*cfg.blur_sigma)))
    if name == "solarize":
        return solarize(img, cfg.solarize_threshold)
    if name == "posterize":
        low, high = cfg.posterize_bits
        return posterize(img, int(rng.integers(low, high + 1)))
    if name == "equalize":
        return equalize_histogram(img)
    raise ArgumentError(f"unknown transform {name!r}")


def plan_augmentations(cfg: AugmentConfig, rng: np.random.Generator) -> List[str]:
    """Independent inclusion per transform, then a uniform shuffle of the included ones."""
    included = [name for name in TRANSFORM_NAMES if rng.random() < cfg.probability(name)]
    order = rng.permutation(len(included))
    return [included[i] for i in order]


def apply_augmentations(
    img: GrayImage, cfg: AugmentConfig, rng: np.random.Generator
) -> GrayImage:
    steps = plan_augmentations(cfg, rng)
    logger.trace(f"[AUGMENT] order={steps}")
    for name in steps:
        img = _draw_and_apply(name, img, cfg, rng)
    return img
