# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Core raster types, lossless image/mask file I/O and the fixed-size resize.

Images are 8-bit single-channel rasters stored row-major as ``(height, width)``
numpy arrays. Masks are boolean rasters of the same layout. Both are immutable
after construction: the backing arrays are flagged read-only so values can be
shared freely between worker processes and threads.

File conventions:
    - PNG (8-bit) and PGM (P5, maxval 255) are read and written.
    - Color inputs are converted with integer luma weights 77/151/28 over 256
      (rounded), i.e. ``(77 R + 151 G + 28 B + 128) >> 8``.
    - Masks are written as 0 (background) / 255 (artifact); on load any
      nonzero value in any channel is an artifact pixel.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from PIL import Image
from scipy import ndimage

from stitchkit.errors import ArgumentError, ImageFormatError, ImageIOError

PathLike = Union[str, Path]

# Working resolution of the segmentation model.
MODEL_INPUT_SIZE = 224

LUMA_WEIGHTS = (77, 151, 28)

_SUPPORTED_SUFFIXES = {".png": "PNG", ".pgm": "PPM"}
_DIRECT_MODES = {"L", "1", "LA"}
_COLOR_MODES = {"RGB", "RGBA", "P", "PA", "CMYK", "YCbCr", "RGBX", "LAB", "HSV"}


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster; ``pixels`` has shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ArgumentError(f"image buffer must be 2-D, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ArgumentError(f"image dimensions must be positive, got {pixels.shape}")
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise ArgumentError("intensities must lie in [0, 255]")
            if np.issubdtype(pixels.dtype, np.floating) and not np.all(
                pixels == np.floor(pixels)
            ):
                raise ArgumentError("intensities must be integers")
            pixels = pixels.astype(np.uint8)
        object.__setattr__(self, "pixels", _freeze(pixels))

    @classmethod
    def from_sequence(cls, width: int, height: int, values: Sequence[int]) -> "GrayImage":
        values = np.asarray(list(values))
        if values.size != width * height:
            raise ArgumentError(
                f"buffer length {values.size} does not match {width}x{height}"
            )
        return cls(values.reshape(height, width))

    @classmethod
    def full(cls, width: int, height: int, value: int) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def tolist(self) -> List[int]:
        return self.pixels.ravel().tolist()

    def transpose(self) -> "GrayImage":
        return GrayImage(self.pixels.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster aligned to an image; true marks artifact pixels."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ArgumentError(f"mask buffer must be 2-D, got shape {bits.shape}")
        if bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ArgumentError(f"mask dimensions must be positive, got {bits.shape}")
        object.__setattr__(self, "bits", _freeze(bits != 0))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rects(cls, width: int, height: int, rects: Iterable["Rect"]) -> "BinaryMask":
        bits = np.zeros((height, width), dtype=bool)
        for rect in rects:
            bits[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w] = True
        return cls(bits)

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def union(self, other: "BinaryMask") -> "BinaryMask":
        if self.size != other.size:
            raise ArgumentError(f"mask sizes differ: {self.size} vs {other.size}")
        return BinaryMask(self.bits | other.bits)

    def invert(self) -> "BinaryMask":
        return BinaryMask(~self.bits)

    def transpose(self) -> "BinaryMask":
        return BinaryMask(self.bits.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"BinaryMask({self.width}x{self.height}, {self.count()} set)"


class Rect(pydantic.BaseModel):
    """Axis-aligned pixel rectangle, top-left anchored."""

    model_config = pydantic.ConfigDict(frozen=True)

    x: int = pydantic.Field(..., ge=0, description="Left column")
    y: int = pydantic.Field(..., ge=0, description="Top row")
    w: int = pydantic.Field(..., ge=1, description="Width in pixels")
    h: int = pydantic.Field(..., ge=1, description="Height in pixels")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def fits(self, width: int, height: int) -> bool:
        return self.x2 <= width and self.y2 <= height

    def intersects(self, other: "Rect", gap: int = 0) -> bool:
        """True when the rectangles overlap or lie closer than ``gap`` pixels."""
        return not (
            self.x2 + gap <= other.x
            or other.x2 + gap <= self.x
            or self.y2 + gap <= other.y
            or other.y2 + gap <= self.y
        )

    def shifted(self, dx: int, dy: int) -> Tuple[int, int, int, int]:
        return self.x + dx, self.y + dy, self.w, self.h

    def to_list(self) -> List[int]:
        return [self.x, self.y, self.w, self.h]


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Round half up to the nearest integer and clamp to [0, 255]."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(
        np.uint8
    )


def luma(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.uint32)
    r, g, b = LUMA_WEIGHTS
    return ((r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2] + 128) >> 8).astype(
        np.uint8
    )


def sample_bilinear(
    pixels: np.ndarray,
    ys: np.ndarray,
    xs: np.ndarray,
    fill: Optional[float] = None,
) -> np.ndarray:
    """
    Bilinear sampling at fractional source coordinates (pixel centers at integers).

    With ``fill`` unset, coordinates outside the frame take the nearest edge
    pixel. With ``fill`` set, samples outside ``[0, n-1]`` take that constant.
    """
    source = np.asarray(pixels, dtype=np.float64)
    coords = np.stack([ys, xs])
    if fill is None:
        return ndimage.map_coordinates(source, coords, order=1, mode="nearest")
    # Snap float noise so that samples landing on the frame edge stay in frame.
    coords = np.round(coords, 9)
    return ndimage.map_coordinates(
        source, coords, order=1, mode="constant", cval=float(fill)
    )


def _read_raster(path: PathLike) -> Tuple[np.ndarray, str]:
    path = Path(path)
    try:
        with Image.open(path) as handle:
            handle.load()
            mode = handle.mode
            if mode in _DIRECT_MODES:
                array = np.asarray(handle.convert("L"))
            elif mode in _COLOR_MODES:
                array = np.asarray(handle.convert("RGB"))
            else:
                raise ImageFormatError(
                    f"{path}: unsupported pixel format {mode!r} (8-bit gray or color only)"
                )
    except ImageFormatError:
        raise
    except FileNotFoundError as e:
        raise ImageIOError(f"{path}: no such file") from e
    except (OSError, ValueError, SyntaxError) as e:
        raise ImageIOError(f"{path}: cannot read image ({e})") from e
    return array, mode


def load_image(path: PathLike) -> GrayImage:
    array, _ = _read_raster(path)
    if array.ndim == 3:
        array = luma(array)
    return GrayImage(array)


def load_mask(path: PathLike) -> BinaryMask:
    array, _ = _read_raster(path)
    if array.ndim == 3:
        array = array.any(axis=2)
    return BinaryMask(array != 0)


def _write_raster(array: np.ndarray, path: PathLike):
    path = Path(path)
    image_format = _SUPPORTED_SUFFIXES.get(path.suffix.lower())
    if image_format is None:
        raise ArgumentError(f"{path}: only .png and .pgm outputs are supported")
    try:
        Image.fromarray(np.ascontiguousarray(array, dtype=np.uint8)).save(
            path, format=image_format
        )
    except OSError as e:
        raise ImageIOError(f"{path}: cannot write image ({e})") from e


def save_image(img: GrayImage, path: PathLike):
    _write_raster(img.pixels, path)


def save_mask(mask: BinaryMask, path: PathLike):
    _write_raster(np.where(mask.bits, 255, 0).astype(np.uint8), path)


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """
    Resize with bilinear interpolation on half-pixel centers.

    Output pixel ``x`` samples source coordinate ``(x + 0.5) * in_w / out_w - 0.5``
    clamped to the frame, and likewise for rows. Results are rounded half up.
    """
    if out_w < 1 or out_h < 1:
        raise ArgumentError(f"target size must be positive, got {out_w}x{out_h}")
    if (out_w, out_h) == img.size:
        return img

    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (img.width / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (img.height / out_h) - 0.5
    xs = np.clip(xs, 0.0, img.width - 1)
    ys = np.clip(ys, 0.0, img.height - 1)
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    return GrayImage(to_uint8(sample_bilinear(img.pixels, grid_y, grid_x)))


def to_model_input(img: GrayImage, size: int = MODEL_INPUT_SIZE) -> GrayImage:
    """Anisotropic resize to the square model input size."""
    return resize_bilinear(img, size, size)
