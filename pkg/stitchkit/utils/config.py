# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

import os
import json
import argparse
from pathlib import Path
from typing import Any, Dict, Optional

import pydantic

from stitchkit.augment import AugmentConfig
from stitchkit.decompose import DecomposeConfig
from stitchkit.errors import ImageIOError, UsageError
from stitchkit.inject import SynthesisParams
from stitchkit.metrics import MetricsConfig
from stitchkit.score import ScoreParams
from stitchkit.utils.logging import logger, setup_events_logger, setup_logging

SECTIONS = ("augment", "synthesis", "decompose", "score", "metrics")


class ToolkitConfig(pydantic.BaseModel):
    """All parameter sections of one run; echoed into manifests."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    augment: AugmentConfig = pydantic.Field(default_factory=AugmentConfig)
    synthesis: SynthesisParams = pydantic.Field(default_factory=SynthesisParams)
    decompose: DecomposeConfig = pydantic.Field(default_factory=DecomposeConfig)
    score: ScoreParams = pydantic.Field(default_factory=ScoreParams)
    metrics: MetricsConfig = pydantic.Field(default_factory=MetricsConfig)


def _nest(namespace: argparse.Namespace) -> Dict[str, Any]:
    """Turn dotted argparse destinations (``score.b``) into nested dicts."""
    nested: Dict[str, Any] = {}
    for key, value in vars(namespace).items():
        node = nested
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return nested


def load_config_file(path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except FileNotFoundError as e:
        raise UsageError(f"config file {path} does not exist") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise UsageError(f"config file {path} has unknown sections {unknown}; expected {list(SECTIONS)}")
    return document


def resolve_config(config: argparse.Namespace) -> ToolkitConfig:
    """
    Merge parameter sources: model defaults, then the JSON config file, then
    every dotted flag that was given explicitly on the command line.
    """
    merged = {section: dict(values) for section, values in load_config_file(config.config).items()}
    nested = _nest(config)
    for section in SECTIONS:
        overrides = {k: v for k, v in nested.get(section, {}).items() if v is not None}
        if overrides:
            merged.setdefault(section, {}).update(overrides)
    try:
        return ToolkitConfig.model_validate(merged)
    except pydantic.ValidationError as e:
        raise UsageError(f"invalid configuration:\n{e}") from e


def check_config(config: argparse.Namespace):
    r"""Checks/validates the config namespace object and sets up console logging."""
    setup_logging(
        debug=bool(getattr(config, "logging.debug", False)),
        trace=bool(getattr(config, "logging.trace", False)),
    )

    output = getattr(config, "output", None)
    if output is not None:
        config.output = os.path.expanduser(output)


def prepare_output(config: argparse.Namespace):
    """
    Creates the run directory and attaches the events log. Called once the
    inputs are known to be usable, so a rejected run leaves nothing behind.
    """
    full_path = config.output
    try:
        os.makedirs(full_path, exist_ok=True)
    except OSError as e:
        raise ImageIOError(f"cannot create output directory {full_path}: {e}") from e

    if not getattr(config, "logging.dont_save_events", False):
        setup_events_logger(full_path, getattr(config, "logging.events_retention_size"))
        logger.debug(f"[CONFIG] events log at {Path(full_path) / 'events.log'}")


def add_args(parser: argparse.ArgumentParser):
    """
    Adds arguments shared by every subcommand.
    """
    parser.add_argument(
        "--config",
        type=str,
        help="JSON file with 'augment', 'synthesis', 'decompose', 'score' and 'metrics' sections.",
        default=None,
    )

    parser.add_argument(
        "--logging.debug",
        action="store_true",
        help="Turn on debug logging.",
        default=False,
    )

    parser.add_argument(
        "--logging.trace",
        action="store_true",
        help="Turn on trace logging (per-element sampling decisions).",
        default=False,
    )


def add_score_args(parser: argparse.ArgumentParser):
    """Score and decomposition overrides, used wherever masks get scored."""

    parser.add_argument(
        "--score.b",
        "--b",
        type=float,
        help="Patch weight b.",
        default=None,
    )

    parser.add_argument(
        "--score.c",
        "--c",
        type=float,
        help="Line weight c.",
        default=None,
    )

    parser.add_argument(
        "--score.threshold",
        type=float,
        help="Flag cutoff; defaults to the patch weight.",
        default=None,
    )

    parser.add_argument(
        "--score.area_mode",
        choices=["bbox", "pixels"],
        help="Patch area from the bounding box or the raw pixel count.",
        default=None,
    )

    parser.add_argument(
        "--decompose.connectivity",
        type=int,
        choices=[4, 8],
        help="Pixel neighbourhood used for labeling.",
        default=None,
    )

    parser.add_argument(
        "--decompose.tau",
        type=float,
        help="Span fraction at which a component is a line.",
        default=None,
    )

    parser.add_argument(
        "--decompose.min_area",
        type=float,
        help="Drop components below this fraction of the image.",
        default=None,
    )


def add_run_args(parser: argparse.ArgumentParser):
    """Arguments of the commands that write an output tree."""

    parser.add_argument("--input", type=str, required=True, help="Directory of clean images.")

    parser.add_argument("--output", type=str, required=True, help="Output directory.")

    parser.add_argument("--seed", type=int, required=True, help="Master seed.")

    parser.add_argument(
        "--count",
        type=int,
        help="Replicas per input image.",
        default=1,
    )

    parser.add_argument(
        "--workers",
        type=int,
        help="Worker processes; outputs do not depend on this.",
        default=1,
    )

    parser.add_argument(
        "--debug",
        action="store_true",
        help="Store the augmented source of every sample and verify the injection.",
        default=False,
    )

    parser.add_argument(
        "--logging.dont_save_events",
        action="store_true",
        help="If set, we dont save events to a log file.",
        default=False,
    )

    parser.add_argument(
        "--logging.events_retention_size",
        type=int,
        help="Events retention size in bytes.",
        default=2 * 1024 * 1024 * 1024,  # 2 GB
    )


def add_synthesis_args(parser: argparse.ArgumentParser):
    """Synthesis overrides for the ``synthesize`` command."""

    parser.add_argument(
        "--synthesis.warmup",
        "--warmup",
        action="store_true",
        help="Warm-up regime: doubled size/offset ranges, no augmentation.",
        default=None,
    )

    parser.add_argument(
        "--synthesis.line_probability",
        type=float,
        help="Probability of line mode.",
        default=None,
    )

    parser.add_argument(
        "--synthesis.max_repetitions",
        type=int,
        help="Maximum number of elements per image.",
        default=None,
    )

    parser.add_argument(
        "--synthesis.max_attempts",
        type=int,
        help="Rejection attempts per element.",
        default=None,
    )

    parser.add_argument(
        "--synthesis.patch_size",
        type=float,
        nargs=2,
        metavar=("LOW", "HIGH"),
        help="Patch side fraction range.",
        default=None,
    )

    parser.add_argument(
        "--synthesis.offset",
        type=float,
        nargs=2,
        metavar=("LOW", "HIGH"),
        help="Offset fraction range.",
        default=None,
    )


def config(argv=None) -> argparse.Namespace:
    """
    Returns the parsed configuration namespace for the ``stitchkit`` command line.
    """
    parser = argparse.ArgumentParser(
        prog="stitchkit",
        description="Fingerprint mosaicking-artifact synthesis, scoring and evaluation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synthesize = commands.add_parser("synthesize", help="Synthesize training samples.")
    add_args(synthesize)
    add_run_args(synthesize)
    add_synthesis_args(synthesize)
    add_score_args(synthesize)

    degrade = commands.add_parser(
        "degrade", help="Corrupt native-resolution images for matcher EER studies."
    )
    add_args(degrade)
    add_run_args(degrade)
    degrade.add_argument(
        "--category",
        type=str,
        required=True,
        help="Offset category: small (1-2%%) or large (2-7%%).",
    )
    add_score_args(degrade)

    score = commands.add_parser("score", help="Score artifact masks.")
    add_args(score)
    score.add_argument("--mask", type=str, required=True, help="Mask file or directory of masks.")
    score.add_argument(
        "--summary",
        action="store_true",
        help="Append a JSON line summarizing the score distribution.",
        default=False,
    )
    add_score_args(score)

    evaluate = commands.add_parser("evaluate", help="Compare predicted masks with ground truth.")
    add_args(evaluate)
    evaluate.add_argument("--pred", type=str, required=True, help="Directory of predicted masks.")
    evaluate.add_argument("--gt", type=str, required=True, help="Directory of ground-truth masks.")
    evaluate.add_argument("--report", type=str, required=True, help="Path of the JSON report.")
    evaluate.add_argument(
        "--metrics.aggregation",
        choices=["macro", "micro"],
        help="Per-image average (macro) or pooled counts (micro).",
        default=None,
    )
    add_score_args(evaluate)

    eer = commands.add_parser("eer", help="Equal error rate from match-score files.")
    add_args(eer)
    eer.add_argument("--genuine", type=str, required=True, help="Genuine scores, one per line.")
    eer.add_argument("--impostor", type=str, required=True, help="Impostor scores, one per line.")

    return parser.parse_args(argv)
