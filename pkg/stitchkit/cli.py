# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
``stitchkit`` command line.

    stitchkit synthesize --input DIR --output DIR --seed N [--count K] [--warmup] [--config FILE]
    stitchkit degrade    --input DIR --output DIR --category small|large --seed N
    stitchkit score      --mask PATH [--b F] [--c F] [--summary]
    stitchkit evaluate   --pred DIR --gt DIR --report FILE
    stitchkit eer        --genuine FILE --impostor FILE

Exit codes: 0 on success, 1 on runtime or I/O failures (including per-file
failures of ``score``), 2 on usage and configuration errors.
"""

import sys
from typing import List, Optional

import pydantic

from stitchkit.errors import StitchkitError, UsageError
from stitchkit.harness.evaluate import cmd_eer, cmd_evaluate, cmd_score
from stitchkit.harness.synthesize import check_run_inputs, cmd_degrade, cmd_synthesize
from stitchkit.utils.config import check_config, config, prepare_output, resolve_config
from stitchkit.utils.logging import close_events_logger, logger

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

TAGS = {
    "synthesize": "[SYNTH]",
    "degrade": "[DEGRADE]",
    "score": "[SCORE]",
    "evaluate": "[EVAL]",
    "eer": "[EER]",
}


def run(args) -> int:
    params = resolve_config(args)
    logger.debug(f"[CONFIG] {params.model_dump_json()}")

    if args.command in ("synthesize", "degrade"):
        check_run_inputs(
            args.input, args.count, args.workers, getattr(args, "category", None)
        )
        prepare_output(args)

    if args.command == "synthesize":
        cmd_synthesize(
            args.input,
            args.output,
            args.seed,
            params,
            count=args.count,
            workers=args.workers,
            debug=args.debug,
        )
        return EXIT_OK
    if args.command == "degrade":
        cmd_degrade(
            args.input,
            args.output,
            args.category,
            args.seed,
            params,
            count=args.count,
            workers=args.workers,
            debug=args.debug,
        )
        return EXIT_OK
    if args.command == "score":
        return cmd_score(args.mask, params.decompose, params.score, summary=args.summary)
    if args.command == "evaluate":
        return cmd_evaluate(
            args.pred, args.gt, args.report, params.decompose, params.score, params.metrics
        )
    if args.command == "eer":
        return cmd_eer(args.genuine, args.impostor)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = config(argv)
    except SystemExit as e:
        # argparse already printed its message.
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        check_config(args)
        status = run(args)
    except (UsageError, pydantic.ValidationError) as e:
        logger.error(f"[CONFIG] {e}")
        return EXIT_USAGE
    except (StitchkitError, OSError) as e:
        logger.error(f"{TAGS[args.command]} {e}")
        return EXIT_FAILURE
    finally:
        close_events_logger()

    if status == EXIT_OK:
        logger.success(f"{TAGS[args.command]} done")
    return status


if __name__ == "__main__":
    sys.exit(main())
