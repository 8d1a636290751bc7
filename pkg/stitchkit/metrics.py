# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Pixel-wise segmentation metrics, dataset aggregates, the mean artifact score
difference and the equal error rate of externally produced match scores.

Empty-denominator convention: when prediction and ground truth are both empty
a ratio metric is 1.0 (perfect agreement on an artifact-free image), otherwise
an undefined ratio is 0.0.
"""

import math
from pathlib import Path
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
import pydantic

from stitchkit.decompose import DecomposeConfig
from stitchkit.errors import ArgumentError, ScoreFileError
from stitchkit.imgcore import BinaryMask
from stitchkit.score import ScoreParams, score_mask

MaskPair = Tuple[BinaryMask, BinaryMask]


class ConfusionCounts(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    tp: int = pydantic.Field(..., ge=0)
    fp: int = pydantic.Field(..., ge=0)
    fn: int = pydantic.Field(..., ge=0)
    tn: int = pydantic.Field(..., ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def both_empty(self) -> bool:
        return self.tp == 0 and self.fp == 0 and self.fn == 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


class MetricsConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    aggregation: Literal["macro", "micro"] = pydantic.Field(
        "macro", description="Average per-image metrics (macro) or pool confusion counts (micro)"
    )


class MetricsReport(pydantic.BaseModel):
    """Dataset aggregate; serialized with the evaluation table's column names."""

    model_config = pydantic.ConfigDict(frozen=True, populate_by_name=True)

    iou: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="IoU")
    f1: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="F1")
    f2: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="F2")
    accuracy: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="Accuracy")
    recall: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="Recall")
    precision: float = pydantic.Field(..., ge=0.0, le=1.0, serialization_alias="Precision")
    mean_score_difference: float = pydantic.Field(
        ..., ge=0.0, serialization_alias="Mean Score Dif."
    )
    samples: int = pydantic.Field(..., ge=1, serialization_alias="Samples")
    aggregation: str = pydantic.Field("macro", serialization_alias="Aggregation")

    def to_json_dict(self) -> Dict[str, object]:
        return self.model_dump(by_alias=True)


class EERReport(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    eer: float = pydantic.Field(..., ge=0.0, le=1.0)
    threshold: float
    fmr: float = pydantic.Field(..., ge=0.0, le=1.0)
    fnmr: float = pydantic.Field(..., ge=0.0, le=1.0)
    genuine: int = pydantic.Field(..., ge=1)
    impostor: int = pydantic.Field(..., ge=1)


class ScoreSummary(pydantic.BaseModel):
    """Distribution of artifact scores over a dataset."""

    model_config = pydantic.ConfigDict(frozen=True)

    count: int
    max: float
    median: float
    mean: float
    std: float
    flagged: int
    flagged_rate: float
    bands: Dict[int, int] = pydantic.Field(
        default_factory=dict, description="Histogram of floor(score / b)"
    )


def confusion_counts(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    if pred.size != gt.size:
        raise ArgumentError(f"mask sizes differ: prediction {pred.size} vs ground truth {gt.size}")
    p, g = pred.bits, gt.bits
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(numerator: float, denominator: float, counts: ConfusionCounts) -> float:
    if denominator == 0:
        return 1.0 if counts.both_empty else 0.0
    return numerator / denominator


def iou(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fp + counts.fn, counts)


def f_beta(counts: ConfusionCounts, beta: float) -> float:
    """Recall weighs ``beta`` times as much as precision."""
    b2 = beta * beta
    return _ratio(
        (1 + b2) * counts.tp, (1 + b2) * counts.tp + b2 * counts.fn + counts.fp, counts
    )


def f1(counts: ConfusionCounts) -> float:
    return f_beta(counts, 1.0)


def f2(counts: ConfusionCounts) -> float:
    return f_beta(counts, 2.0)


def accuracy(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp + counts.tn, counts.total, counts)


def recall(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fn, counts)


def precision(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fp, counts)


def pixel_metrics(counts: ConfusionCounts) -> Dict[str, float]:
    return {
        "iou": iou(counts),
        "f1": f1(counts),
        "f2": f2(counts),
        "accuracy": accuracy(counts),
        "recall": recall(counts),
        "precision": precision(counts),
    }


def _score_differences(
    pairs: Sequence[MaskPair], dcfg: DecomposeConfig, p: ScoreParams
) -> List[float]:
    return [
        abs(score_mask(pred, dcfg, p).score - score_mask(gt, dcfg, p).score)
        for pred, gt in pairs
    ]


def mean_score_difference(
    pairs: Sequence[MaskPair], dcfg: DecomposeConfig, p: ScoreParams
) -> float:
    if not pairs:
        raise ArgumentError("mean score difference needs at least one mask pair")
    for pred, gt in pairs:
        if pred.size != gt.size:
            raise ArgumentError(f"mask sizes differ: {pred.size} vs {gt.size}")
    differences = _score_differences(pairs, dcfg, p)
    return math.fsum(differences) / len(differences)


def dataset_report(
    pairs: Sequence[MaskPair],
    dcfg: DecomposeConfig,
    p: ScoreParams,
    cfg: MetricsConfig = MetricsConfig(),
) -> MetricsReport:
    """
    Aggregate metrics over aligned (prediction, ground truth) pairs.

    Macro aggregation averages the per-image metrics; micro aggregation pools
    the confusion counts first. fsum keeps either independent of pair order.
    """
    if not pairs:
        raise ArgumentError("dataset report needs at least one mask pair")
    counts = [confusion_counts(pred, gt) for pred, gt in pairs]

    if cfg.aggregation == "micro":
        pooled = counts[0]
        for item in counts[1:]:
            pooled = pooled + item
        values = pixel_metrics(pooled)
    else:
        per_image = [pixel_metrics(item) for item in counts]
        values = {
            key: math.fsum(metrics[key] for metrics in per_image) / len(per_image)
            for key in per_image[0]
        }

    return MetricsReport(
        **values,
        mean_score_difference=mean_score_difference(pairs, dcfg, p),
        samples=len(pairs),
        aggregation=cfg.aggregation,
    )


def _candidate_thresholds(pooled: np.ndarray) -> np.ndarray:
    unique = np.unique(pooled)
    midpoints = (unique[:-1] + unique[1:]) / 2.0
    return np.concatenate([[unique[0] - 1.0], midpoints, [unique[-1] + 1.0]])


def error_rates(
    genuine: Sequence[float], impostor: Sequence[float], thresholds: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """FMR (impostors at or above t) and FNMR (genuines below t) per threshold."""
    genuine = np.sort(np.asarray(genuine, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor, dtype=np.float64))
    fnmr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    fmr = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
    return fmr, fnmr


def eer_report(genuine: Sequence[float], impostor: Sequence[float]) -> EERReport:
    """
    Equal error rate by threshold sweep, higher scores meaning more similar.

    Candidate thresholds are one value below the lowest score, the midpoints
    of consecutive distinct pooled scores, and one value above the highest.
    The EER is ``(FMR + FNMR) / 2`` at the first candidate where
    ``|FMR - FNMR|`` is smallest.
    """
    if len(genuine) == 0 or len(impostor) == 0:
        raise ArgumentError("EER needs non-empty genuine and impostor score lists")
    pooled = np.concatenate(
        [np.asarray(genuine, dtype=np.float64), np.asarray(impostor, dtype=np.float64)]
    )
    if not np.all(np.isfinite(pooled)):
        raise ArgumentError("match scores must be finite")

    thresholds = _candidate_thresholds(pooled)
    fmr, fnmr = error_rates(genuine, impostor, thresholds)
    best = int(np.argmin(np.abs(fmr - fnmr)))
    eer = float((fmr[best] + fnmr[best]) / 2.0)
    assert 0.0 <= eer <= 1.0
    return EERReport(
        eer=eer,
        threshold=float(thresholds[best]),
        fmr=float(fmr[best]),
        fnmr=float(fnmr[best]),
        genuine=len(genuine),
        impostor=len(impostor),
    )


def compute_eer(genuine: Sequence[float], impostor: Sequence[float]) -> float:
    return eer_report(genuine, impostor).eer


def read_score_file(path: Union[str, Path]) -> List[float]:
    """One float per line; blank lines are skipped."""
    scores = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError as e:
                raise ScoreFileError(path, line_number, text) from e
            if not math.isfinite(value):
                raise ScoreFileError(path, line_number, text, reason="not finite")
            scores.append(value)
    return scores


def summarize_scores(scores: Sequence[float], p: ScoreParams) -> ScoreSummary:
    if len(scores) == 0:
        raise ArgumentError("score summary needs at least one score")
    values = np.asarray(scores, dtype=np.float64)
    flagged = int(np.count_nonzero(values >= p.threshold))
    band_index, band_count = np.unique(np.floor(values / p.b).astype(int), return_counts=True)
    return ScoreSummary(
        count=int(values.size),
        max=float(values.max()),
        median=float(np.median(values)),
        mean=float(values.mean()),
        std=float(values.std()),
        flagged=flagged,
        flagged_rate=flagged / values.size,
        bands={int(k): int(v) for k, v in zip(band_index, band_count)},
    )
