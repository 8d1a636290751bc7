# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from stitchkit.imgcore import BinaryMask, GrayImage, Rect


class CLOSE_IN_VALUE:
    value: float
    tolerance: float

    def __init__(self, value: float, tolerance: float = 0.0) -> None:
        self.value = value
        self.tolerance = tolerance

    def __eq__(self, __o: float) -> bool:
        # True if __o \in [value - tolerance, value + tolerance]
        # or if value \in [__o - tolerance, __o + tolerance]
        return (
            (self.value - self.tolerance) <= __o and __o <= (self.value + self.tolerance)
        ) or ((__o - self.tolerance) <= self.value and self.value <= (__o + self.tolerance))

    def __repr__(self) -> str:
        return f"CLOSE_IN_VALUE({self.value} ± {self.tolerance})"


def ramp_image(width: int, height: int) -> GrayImage:
    """Pixel (x, y) holds ``(x + 7 * y) % 256``; distinct enough to trace every copy."""
    ys, xs = np.mgrid[0:height, 0:width]
    return GrayImage(((xs + 7 * ys) % 256).astype(np.uint8))


def row_ramp(width: int, height: int) -> GrayImage:
    """Every row holds its own index, so row shifts are visible in any column."""
    return GrayImage(np.repeat(np.arange(height, dtype=np.uint8)[:, None], width, axis=1))


def random_image(rng: np.random.Generator, width: int, height: int) -> GrayImage:
    return GrayImage(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def random_mask(rng: np.random.Generator, width: int, height: int, density: float = 0.3) -> BinaryMask:
    return BinaryMask(rng.random((height, width)) < density)


def rect_mask(width: int, height: int, *rects: Tuple[int, int, int, int]) -> BinaryMask:
    return BinaryMask.from_rects(width, height, [Rect(x=x, y=y, w=w, h=h) for x, y, w, h in rects])


def write_png(array: np.ndarray, path: Union[str, Path]) -> Path:
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")
    return Path(path)


def naive_confusion(pred: BinaryMask, gt: BinaryMask) -> Tuple[int, int, int, int]:
    """Per-pixel double loop: (tp, fp, fn, tn)."""
    tp = fp = fn = tn = 0
    for y in range(gt.height):
        for x in range(gt.width):
            p = bool(pred.bits[y, x])
            g = bool(gt.bits[y, x])
            if p and g:
                tp += 1
            elif p:
                fp += 1
            elif g:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def naive_metrics(tp: int, fp: int, fn: int, tn: int) -> dict:
    both_empty = tp == 0 and fp == 0 and fn == 0

    def ratio(num, den):
        if den == 0:
            return 1.0 if both_empty else 0.0
        return num / den

    def fbeta(beta):
        b2 = beta * beta
        return ratio((1 + b2) * tp, (1 + b2) * tp + b2 * fn + fp)

    return {
        "iou": ratio(tp, tp + fp + fn),
        "f1": fbeta(1.0),
        "f2": fbeta(2.0),
        "accuracy": ratio(tp + tn, tp + fp + fn + tn),
        "recall": ratio(tp, tp + fn),
        "precision": ratio(tp, tp + fp),
    }


def sweep_eer(genuine: Sequence[float], impostor: Sequence[float]) -> float:
    """Exhaustive threshold sweep with plain loops over the pooled candidates."""
    pooled = sorted(set(list(genuine) + list(impostor)))
    candidates = [pooled[0] - 1.0]
    candidates += [(a + b) / 2.0 for a, b in zip(pooled[:-1], pooled[1:])]
    candidates.append(pooled[-1] + 1.0)

    best_gap, best_eer = None, None
    for t in candidates:
        fnmr = sum(1 for s in genuine if s < t) / len(genuine)
        fmr = sum(1 for s in impostor if s >= t) / len(impostor)
        gap = abs(fmr - fnmr)
        if best_gap is None or gap < best_gap:
            best_gap, best_eer = gap, (fmr + fnmr) / 2.0
    return best_eer


def scalar_bilinear(pixels: np.ndarray, y: float, x: float) -> float:
    """Bilinear sample with coordinates clamped to the frame."""
    height, width = pixels.shape
    y = min(max(y, 0.0), height - 1)
    x = min(max(x, 0.0), width - 1)
    y0, x0 = int(math.floor(y)), int(math.floor(x))
    y1, x1 = min(y0 + 1, height - 1), min(x0 + 1, width - 1)
    fy, fx = y - y0, x - x0
    top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
    bottom = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
    return float(top * (1 - fy) + bottom * fy)


def scalar_resize(img: GrayImage, out_w: int, out_h: int) -> List[int]:
    pixels = img.pixels.astype(np.float64)
    values = []
    for oy in range(out_h):
        for ox in range(out_w):
            sy = (oy + 0.5) * img.height / out_h - 0.5
            sx = (ox + 0.5) * img.width / out_w - 0.5
            values.append(int(math.floor(scalar_bilinear(pixels, sy, sx) + 0.5)))
    return values


def gaussian_kernel(sigma: float) -> List[float]:
    radius = int(math.ceil(3.0 * sigma))
    weights = [math.exp(-(k * k) / (2.0 * sigma * sigma)) for k in range(-radius, radius + 1)]
    total = sum(weights)
    return [w / total for w in weights]
