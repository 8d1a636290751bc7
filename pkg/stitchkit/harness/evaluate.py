# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, TextIO

from stitchkit.decompose import DecomposeConfig
from stitchkit.errors import ImageIOError, StitchkitError, UsageError
from stitchkit.imgcore import load_mask
from stitchkit.metrics import (
    MetricsConfig,
    dataset_report,
    eer_report,
    read_score_file,
    summarize_scores,
)
from stitchkit.score import ScoreParams, score_mask
from stitchkit.utils.logging import logger

MASK_SUFFIXES = (".png", ".pgm")


def _emit(payload: Dict, stream: Optional[TextIO]):
    stream = stream or sys.stdout
    stream.write(json.dumps(payload) + "\n")
    stream.flush()


def list_masks(path: str) -> List[Path]:
    """A single mask file, or the sorted mask files of a directory."""
    root = Path(path)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise UsageError(f"{path} is neither a mask file nor a directory")
    return sorted(
        item for item in root.iterdir() if item.is_file() and item.suffix.lower() in MASK_SUFFIXES
    )


def cmd_score(
    mask: str,
    dcfg: DecomposeConfig,
    params: ScoreParams,
    summary: bool = False,
    stream: Optional[TextIO] = None,
) -> int:
    """
    Print one JSON line per mask. Unreadable masks produce an error record and
    make the command exit nonzero without stopping the batch.
    """
    paths = list_masks(mask)
    if not paths:
        raise UsageError(f"no .png or .pgm masks found in {mask}")

    scores = []
    failures = 0
    for path in paths:
        try:
            report = score_mask(load_mask(path), dcfg, params)
        except StitchkitError as e:
            failures += 1
            logger.error(f"[SCORE] {e}")
            _emit({"path": str(path), "error": str(e)}, stream)
            continue
        scores.append(report.score)
        logger.debug(f"[SCORE] {path.name}: {report.score:.6f} (n={report.n} m={report.m} o={report.o})")
        _emit({"path": str(path), **report.to_json_dict()}, stream)

    if summary and scores:
        _emit({"summary": summarize_scores(scores, params).model_dump()}, stream)
    logger.info(f"[SCORE] scored {len(scores)} of {len(paths)} masks")
    return 1 if failures else 0


def cmd_evaluate(
    pred: str,
    gt: str,
    report: str,
    dcfg: DecomposeConfig,
    params: ScoreParams,
    mcfg: MetricsConfig = MetricsConfig(),
    stream: Optional[TextIO] = None,
) -> int:
    """
    Compare predicted and ground-truth masks matched by filename.

    Files present on one side only are listed, excluded and reported; the
    command fails when nothing matches.
    """
    for directory in (pred, gt):
        if not Path(directory).is_dir():
            raise UsageError(f"{directory} is not a directory")
    pred_files = {path.name: path for path in list_masks(pred)}
    gt_files = {path.name: path for path in list_masks(gt)}
    matched = sorted(set(pred_files) & set(gt_files))
    unmatched = sorted(set(pred_files) ^ set(gt_files))

    for name in unmatched:
        side = "prediction" if name in pred_files else "ground truth"
        logger.warning(f"[EVAL] {name} exists only as {side}; excluded")
    if not matched:
        logger.error(f"[EVAL] no mask filenames match between {pred} and {gt}")
        return 1

    pairs = [(load_mask(pred_files[name]), load_mask(gt_files[name])) for name in matched]
    result = dataset_report(pairs, dcfg, params, mcfg)
    payload = {**result.to_json_dict(), "Unmatched": unmatched}

    report_path = Path(report)
    try:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ImageIOError(f"{report_path}: cannot write report ({e})") from e

    _emit(payload, stream)
    logger.info(
        f"[EVAL] {len(matched)} pairs ({mcfg.aggregation}): IoU={result.iou:.4f} "
        f"F1={result.f1:.4f} mean score dif.={result.mean_score_difference:.4f}"
    )
    return 0


def cmd_eer(genuine: str, impostor: str, stream: Optional[TextIO] = None) -> int:
    genuine_scores = read_score_file(genuine)
    impostor_scores = read_score_file(impostor)
    result = eer_report(genuine_scores, impostor_scores)
    _emit(result.model_dump(), stream)
    logger.info(
        f"[EER] {result.genuine} genuine / {result.impostor} impostor scores: "
        f"EER={result.eer:.6f} at threshold {result.threshold:.6f}"
    )
    return 0
