# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Self-supervised artifact synthesis.

A clean fingerprint is corrupted with either displaced rectangular patches or
full-span line shifts; the sampled ``ArtifactPlan`` reproduces every integer
that went into the corruption and the returned mask marks exactly the pixels
a detector is expected to segment.

Fraction-to-pixel conversions round toward zero. Patch sides are at least one
pixel; offset components may be zero on tiny images but never both at once.
"""

from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pydantic

from stitchkit.augment import AugmentConfig, apply_augmentations
from stitchkit.errors import ArgumentError, SynthesisError
from stitchkit.imgcore import BinaryMask, GrayImage, Rect, MODEL_INPUT_SIZE, to_model_input
from stitchkit.utils.logging import logger

MIN_IMAGE_SIDE = 16

Axis = Literal["horizontal", "vertical"]
PlanKind = Literal["patch", "line"]


class PatchSpec(pydantic.BaseModel):
    """``rect`` receives the content found at ``rect`` shifted by ``(dx, dy)``."""

    model_config = pydantic.ConfigDict(frozen=True)

    rect: Rect
    dx: int
    dy: int

    @pydantic.model_validator(mode="after")
    def _check_offset(self):
        if self.dx == 0 and self.dy == 0:
            raise ValueError("patch offset must not be (0, 0)")
        return self

    def source_fits(self, width: int, height: int) -> bool:
        x, y, w, h = self.rect.shifted(self.dx, self.dy)
        return x >= 0 and y >= 0 and x + w <= width and y + h <= height


class LineSpec(pydantic.BaseModel):
    """
    A seam at ``coord`` past which content is displaced by ``shift`` pixels.

    ``axis`` is the orientation of the seam: a horizontal seam splits rows and
    shifts content along y, a vertical seam splits columns and shifts along x.
    The artifact band is ``[coord, coord + |shift|)`` across the full span.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    axis: Axis
    coord: int = pydantic.Field(..., ge=0)
    shift: int

    @pydantic.field_validator("shift")
    @classmethod
    def _check_shift(cls, value):
        if value == 0:
            raise ValueError("line shift must be nonzero")
        return value

    @property
    def thickness(self) -> int:
        return abs(self.shift)

    @property
    def band_end(self) -> int:
        return self.coord + self.thickness

    def band_rect(self, width: int, height: int) -> Rect:
        if self.axis == "horizontal":
            return Rect(x=0, y=self.coord, w=width, h=self.thickness)
        return Rect(x=self.coord, y=0, w=self.thickness, h=height)

    def fits(self, width: int, height: int) -> bool:
        extent = height if self.axis == "horizontal" else width
        return self.band_end <= extent


class ArtifactPlan(pydantic.BaseModel):
    """
    The sampled injection recipe; doubles as ground truth.

    ``requested`` is the element count that was drawn, ``shortfall`` how many
    of those could not be placed within the attempt budget.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    kind: PlanKind
    patches: List[PatchSpec] = pydantic.Field(default_factory=list)
    lines: List[LineSpec] = pydantic.Field(default_factory=list)
    requested: int = pydantic.Field(0, ge=0)

    @pydantic.model_validator(mode="after")
    def _check_invariants(self):
        if self.kind == "patch" and self.lines:
            raise ValueError("patch-mode plan must not carry lines")
        if self.kind == "line" and self.patches:
            raise ValueError("line-mode plan must not carry patches")
        for i, first in enumerate(self.patches):
            for second in self.patches[i + 1 :]:
                if first.rect.intersects(second.rect):
                    raise ValueError(f"patches overlap: {first.rect} and {second.rect}")
        if len({line.axis for line in self.lines}) > 1:
            raise ValueError("line-mode plan mixes horizontal and vertical lines")
        for i, first in enumerate(self.lines):
            for second in self.lines[i + 1 :]:
                if first.coord < second.band_end and second.coord < first.band_end:
                    raise ValueError(f"line bands overlap: {first} and {second}")
        return self

    @property
    def elements(self) -> int:
        return len(self.patches) + len(self.lines)

    @property
    def shortfall(self) -> int:
        return max(0, self.requested - self.elements)

    def rects(self, width: int, height: int) -> List[Rect]:
        if self.kind == "patch":
            return [patch.rect for patch in self.patches]
        return [line.band_rect(width, height) for line in self.lines]


class SynthesisParams(pydantic.BaseModel):
    """Sampling ranges of the artifact synthesis; all fractions relate to image dimensions."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    patch_size: Tuple[float, float] = pydantic.Field(
        (0.05, 0.15), description="Patch side as a fraction of the image dimension"
    )
    offset: Tuple[float, float] = pydantic.Field(
        (0.02, 0.07), description="Pixel offset as a fraction of the image dimension"
    )
    max_repetitions: int = pydantic.Field(4, ge=1, description="Upper bound of elements per image")
    count_weights: Optional[List[float]] = pydantic.Field(
        None, description="Relative weights of element counts 1..max_repetitions (uniform if unset)"
    )
    line_probability: float = pydantic.Field(
        0.25, ge=0.0, le=1.0, description="Probability of line mode instead of patch mode"
    )
    warmup: bool = pydantic.Field(False, description="Double the patch size and offset ranges")
    warmup_augment: bool = pydantic.Field(
        False, description="Keep augmentations enabled while warming up"
    )
    shared_fraction: bool = pydantic.Field(
        False, description="Draw one size fraction for both patch axes instead of one per axis"
    )
    min_gap: int = pydantic.Field(
        1, ge=0, description="Empty pixels required between elements of one plan"
    )
    max_attempts: int = pydantic.Field(100, ge=1, description="Rejection attempts per element")

    @pydantic.field_validator("patch_size", "offset")
    @classmethod
    def _check_range(cls, value):
        low, high = value
        if not 0.0 < low <= high < 1.0:
            raise ValueError(f"fraction range must satisfy 0 < low <= high < 1, got {value}")
        return value

    @pydantic.model_validator(mode="after")
    def _check_effective(self):
        for low, high in (self.effective_patch_size(), self.effective_offset()):
            if high >= 1.0:
                raise ValueError("warm-up doubling pushes a fraction range to 1 or beyond")
        if self.count_weights is not None:
            if len(self.count_weights) != self.max_repetitions:
                raise ValueError("count_weights needs one weight per count 1..max_repetitions")
            if any(weight < 0 for weight in self.count_weights) or sum(self.count_weights) <= 0:
                raise ValueError("count_weights must be non-negative with a positive sum")
        return self

    def _scale(self) -> float:
        return 2.0 if self.warmup else 1.0

    def effective_patch_size(self) -> Tuple[float, float]:
        return self.patch_size[0] * self._scale(), self.patch_size[1] * self._scale()

    def effective_offset(self) -> Tuple[float, float]:
        return self.offset[0] * self._scale(), self.offset[1] * self._scale()


def fraction_to_pixels(fraction: float, dim: int, floor_one: bool = False) -> int:
    """Round ``fraction * dim`` toward zero, optionally never below one pixel."""
    pixels = int(fraction * dim)
    return max(1, pixels) if floor_one else pixels


def pixel_range(fractions: Tuple[float, float], dim: int, floor_one: bool = False) -> Tuple[int, int]:
    """Inclusive pixel bounds reachable from a fraction range on ``dim``."""
    return (
        fraction_to_pixels(fractions[0], dim, floor_one),
        fraction_to_pixels(fractions[1], dim, floor_one),
    )


def _draw_count(params: SynthesisParams, rng: np.random.Generator) -> int:
    if params.count_weights is None:
        return int(rng.integers(1, params.max_repetitions + 1))
    weights = np.asarray(params.count_weights, dtype=np.float64)
    return int(rng.choice(np.arange(1, params.max_repetitions + 1), p=weights / weights.sum()))


def _draw_sign(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else -1


def _draw_patch(
    width: int, height: int, params: SynthesisParams, rng: np.random.Generator
) -> Optional[PatchSpec]:
    size_lo, size_hi = params.effective_patch_size()
    off_lo, off_hi = params.effective_offset()

    fx = rng.uniform(size_lo, size_hi)
    fy = fx if params.shared_fraction else rng.uniform(size_lo, size_hi)
    w = fraction_to_pixels(fx, width, floor_one=True)
    h = fraction_to_pixels(fy, height, floor_one=True)
    dx = _draw_sign(rng) * fraction_to_pixels(rng.uniform(off_lo, off_hi), width)
    dy = _draw_sign(rng) * fraction_to_pixels(rng.uniform(off_lo, off_hi), height)
    if dx == 0 and dy == 0:
        return None

    x_lo, x_hi = max(0, -dx), width - w - max(0, dx)
    y_lo, y_hi = max(0, -dy), height - h - max(0, dy)
    if x_lo > x_hi or y_lo > y_hi:
        return None
    x = int(rng.integers(x_lo, x_hi + 1))
    y = int(rng.integers(y_lo, y_hi + 1))
    return PatchSpec(rect=Rect(x=x, y=y, w=w, h=h), dx=dx, dy=dy)


def _draw_line(
    axis: str, width: int, height: int, params: SynthesisParams, rng: np.random.Generator
) -> Optional[LineSpec]:
    off_lo, off_hi = params.effective_offset()
    # The shift runs across the seam, the band runs along it.
    extent, span = (height, width) if axis == "horizontal" else (width, height)
    shift = _draw_sign(rng) * fraction_to_pixels(rng.uniform(off_lo, off_hi), extent)
    thickness = abs(shift)
    if thickness == 0 or thickness >= span:
        return None
    coord_lo = thickness if shift > 0 else 0
    coord_hi = extent - thickness
    if coord_lo > coord_hi:
        return None
    coord = int(rng.integers(coord_lo, coord_hi + 1))
    return LineSpec(axis=axis, coord=coord, shift=shift)


def _patch_conflicts(candidate: PatchSpec, placed: Sequence[PatchSpec], gap: int) -> bool:
    return any(candidate.rect.intersects(other.rect, gap=gap) for other in placed)


def _line_conflicts(candidate: LineSpec, placed: Sequence[LineSpec], gap: int) -> bool:
    return any(
        candidate.coord < other.band_end + gap and other.coord < candidate.band_end + gap
        for other in placed
    )


def sample_artifact_plan(
    width: int, height: int, params: SynthesisParams, rng: np.random.Generator
) -> ArtifactPlan:
    """
    Draw an artifact plan for a ``width`` x ``height`` image.

    Line mode is chosen with ``params.line_probability``; the element count is
    drawn from 1..max_repetitions; each element is placed by rejection sampling
    so that elements stay disjoint and at least ``min_gap`` pixels apart.
    Elements that cannot be placed within ``max_attempts`` are dropped and
    counted in the plan's shortfall.

    Raises:
        SynthesisError: the image is below 16x16 or no element could be placed.
    """
    if width < MIN_IMAGE_SIDE or height < MIN_IMAGE_SIDE:
        raise SynthesisError(
            f"image {width}x{height} is below the {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} minimum"
        )

    line_mode = rng.random() < params.line_probability
    count = _draw_count(params, rng)

    if line_mode:
        axis = "horizontal" if rng.random() < 0.5 else "vertical"
        lines: List[LineSpec] = []
        for index in range(count):
            for attempt in range(params.max_attempts):
                candidate = _draw_line(axis, width, height, params, rng)
                if candidate is not None and not _line_conflicts(candidate, lines, params.min_gap):
                    lines.append(candidate)
                    break
            else:
                logger.trace(f"[SYNTH] line {index} not placed after {params.max_attempts} attempts")
        if not lines:
            raise SynthesisError(f"no line artifact fits a {width}x{height} image")
        lines.sort(key=lambda line: line.coord)
        return ArtifactPlan(kind="line", lines=lines, requested=count)

    patches: List[PatchSpec] = []
    for index in range(count):
        for attempt in range(params.max_attempts):
            candidate = _draw_patch(width, height, params, rng)
            if candidate is not None and not _patch_conflicts(candidate, patches, params.min_gap):
                patches.append(candidate)
                break
        else:
            logger.trace(f"[SYNTH] patch {index} not placed after {params.max_attempts} attempts")
    if not patches:
        raise SynthesisError(f"no patch artifact fits a {width}x{height} image")
    return ArtifactPlan(kind="patch", patches=patches, requested=count)


def inject_patch(img: GrayImage, spec: PatchSpec) -> Tuple[GrayImage, BinaryMask]:
    """Copy the content at ``rect + (dx, dy)`` into ``rect``; everything else is untouched."""
    rect = spec.rect
    if not rect.fits(img.width, img.height):
        raise ArgumentError(f"patch {rect.to_list()} exceeds the {img.width}x{img.height} image")
    if not spec.source_fits(img.width, img.height):
        raise ArgumentError(
            f"patch source {list(rect.shifted(spec.dx, spec.dy))} lies outside the "
            f"{img.width}x{img.height} image"
        )
    pixels = img.pixels.copy()
    sx, sy = rect.x + spec.dx, rect.y + spec.dy
    pixels[rect.y : rect.y2, rect.x : rect.x2] = img.pixels[sy : sy + rect.h, sx : sx + rect.w]
    return GrayImage(pixels), BinaryMask.from_rects(img.width, img.height, [rect])


def line_source_index(extent: int, coord: int, shift: int) -> np.ndarray:
    """
    Source row (or column) for every output row past a seam.

    Positions before ``coord`` keep their own content; positions at or past it
    read ``position - shift``, clamped to the frame (edge replication).
    """
    index = np.arange(extent)
    index[coord:] = np.clip(index[coord:] - shift, 0, extent - 1)
    return index


def inject_line(img: GrayImage, spec: LineSpec) -> Tuple[GrayImage, BinaryMask]:
    if not spec.fits(img.width, img.height):
        raise ArgumentError(
            f"{spec.axis} band [{spec.coord}, {spec.band_end}) exceeds the "
            f"{img.width}x{img.height} image"
        )
    if spec.axis == "horizontal":
        index = line_source_index(img.height, spec.coord, spec.shift)
        pixels = img.pixels[index, :]
    else:
        index = line_source_index(img.width, spec.coord, spec.shift)
        pixels = img.pixels[:, index]
    mask = BinaryMask.from_rects(img.width, img.height, [spec.band_rect(img.width, img.height)])
    return GrayImage(pixels), mask


def apply_plan(img: GrayImage, plan: ArtifactPlan) -> Tuple[GrayImage, BinaryMask]:
    """Apply every element of ``plan`` in order; the mask is the union of their masks."""
    mask = BinaryMask.empty(img.width, img.height)
    for patch in plan.patches:
        img, element_mask = inject_patch(img, patch)
        mask = mask.union(element_mask)
    for line in plan.lines:
        img, element_mask = inject_line(img, line)
        mask = mask.union(element_mask)
    return img, mask


def prepare_source(
    img: GrayImage,
    params: SynthesisParams,
    cfg: AugmentConfig,
    rng: np.random.Generator,
    size: Optional[int] = MODEL_INPUT_SIZE,
) -> GrayImage:
    """Resize to the model input size (unless ``size`` is None) and augment."""
    if size is not None:
        img = to_model_input(img, size)
    if params.warmup and not params.warmup_augment:
        return img
    return apply_augmentations(img, cfg, rng)


def corrupt(
    source: GrayImage, params: SynthesisParams, rng: np.random.Generator
) -> Tuple[GrayImage, BinaryMask, ArtifactPlan]:
    plan = sample_artifact_plan(source.width, source.height, params, rng)
    image, mask = apply_plan(source, plan)
    return image, mask, plan


def synthesize_sample(
    img: GrayImage,
    params: SynthesisParams,
    cfg: AugmentConfig,
    rng: np.random.Generator,
    size: Optional[int] = MODEL_INPUT_SIZE,
) -> Tuple[GrayImage, BinaryMask, ArtifactPlan]:
    """Resize, augment, sample a plan and inject it. Returns image, mask and plan."""
    source = prepare_source(img, params, cfg, rng, size=size)
    return corrupt(source, params, rng)


def analytic_score(
    plan: ArtifactPlan, width: int, height: int, b: float = 5.0, c: float = 0.025
) -> float:
    """
    Mosaicking artifact score of a plan, evaluated term by term from its integers.

    Each patch adds ``b * W * H / 100 + w * h``; each vertical line adds
    ``c * H * |shift|``, each horizontal line ``c * W * |shift|``; the sum is
    normalized by ``100 / (W * H)``.
    """
    image_area = width * height
    patch_sum = sum(b * image_area / 100.0 + p.rect.w * p.rect.h for p in plan.patches)
    vertical = sum(height * line.thickness for line in plan.lines if line.axis == "vertical")
    horizontal = sum(width * line.thickness for line in plan.lines if line.axis == "horizontal")
    return (patch_sum + c * (vertical + horizontal)) * 100.0 / image_area


def verify_sample(
    source: GrayImage, corrupted: GrayImage, mask: BinaryMask, plan: ArtifactPlan
) -> bool:
    """
    Check that a corrupted image differs from its source only as the plan says.

    Patch mode: the mask is the union of the patch rectangles and every pixel
    outside it is bit-identical to the source. Line mode: the mask is the union
    of the bands and every row (or column) equals the source row selected by
    composing the plan's seam shifts.
    """
    if source.size != corrupted.size or source.size != mask.size:
        return False
    width, height = source.size
    expected_mask = BinaryMask.from_rects(width, height, plan.rects(width, height))
    if mask != expected_mask:
        return False

    if plan.kind == "patch":
        outside = ~mask.bits
        return bool(np.array_equal(source.pixels[outside], corrupted.pixels[outside]))

    axis = plan.lines[0].axis if plan.lines else "horizontal"
    extent = height if axis == "horizontal" else width
    composed = np.arange(extent)
    for line in plan.lines:
        composed = composed[line_source_index(extent, line.coord, line.shift)]
    expected = source.pixels[composed, :] if axis == "horizontal" else source.pixels[:, composed]
    return bool(np.array_equal(expected, corrupted.pixels))
