# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Batch synthesis of training samples and of degraded images for matcher studies.

Both commands enumerate the input images in sorted order, expand every image
into ``count`` replicas and give each replica a global index. The index alone
selects the sample's random stream, so the output tree does not depend on the
worker count or on completion order. Records are gathered in index order
after the parallel phase and written as one manifest.
"""

import functools
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, NamedTuple, Optional

import pydantic

from stitchkit.errors import SynthesisError, UsageError
from stitchkit.imgcore import MODEL_INPUT_SIZE, load_image, save_image, save_mask
from stitchkit.inject import corrupt, prepare_source, verify_sample
from stitchkit.score import score_mask
from stitchkit.harness.manifest import (
    DegradeCategory,
    Manifest,
    SampleRecord,
    degrade_category,
    write_manifest,
)
from stitchkit.utils.config import ToolkitConfig
from stitchkit.utils.logging import events_logger, logger
from stitchkit.utils.seeding import sample_rng

IMAGE_SUFFIXES = (".png", ".pgm")


class SampleTask(NamedTuple):
    index: int
    sample_id: str
    source: Path
    relative: str


class SynthesisJob(pydantic.BaseModel):
    """Per-run settings shipped to every worker alongside its task."""

    model_config = pydantic.ConfigDict(frozen=True)

    seed: int
    params: ToolkitConfig
    output: str
    size: Optional[int] = MODEL_INPUT_SIZE
    augment: bool = True
    debug: bool = False


def discover_inputs(input_dir: str) -> List[Path]:
    root = Path(input_dir)
    if not root.is_dir():
        raise UsageError(f"input directory {input_dir} does not exist")
    paths = sorted(
        path for path in root.iterdir() if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
    )
    if not paths:
        raise UsageError(f"input directory {input_dir} holds no .png or .pgm images")
    stems = [path.stem for path in paths]
    duplicates = sorted({stem for stem in stems if stems.count(stem) > 1})
    if duplicates:
        raise UsageError(f"input images share sample ids {duplicates}; rename them")
    return paths


def check_run_inputs(
    input_dir: str, count: int, workers: int, category: Optional[str] = None
) -> List[Path]:
    """Reject unusable inputs before anything is written."""
    paths = discover_inputs(input_dir)
    if count < 1:
        raise UsageError(f"--count must be at least 1, got {count}")
    if workers < 1:
        raise UsageError(f"--workers must be at least 1, got {workers}")
    if category is not None:
        degrade_category(category)
    return paths


def plan_tasks(paths: List[Path], input_dir: str, count: int) -> List[SampleTask]:
    if count < 1:
        raise UsageError(f"--count must be at least 1, got {count}")
    tasks = []
    for path in paths:
        for replica in range(count):
            tasks.append(
                SampleTask(
                    index=len(tasks),
                    sample_id=f"{path.stem}_{replica:03d}",
                    source=path,
                    relative=path.relative_to(input_dir).as_posix(),
                )
            )
    return tasks


def run_sample(task: SampleTask, job: SynthesisJob) -> SampleRecord:
    """Produce one sample and its manifest record. Runs inside worker processes."""
    original = load_image(task.source)
    rng = sample_rng(job.seed, task.index)
    synthesis = job.params.synthesis

    if job.augment:
        source = prepare_source(original, synthesis, job.params.augment, rng, size=job.size)
    else:
        source = original
    try:
        image, mask, plan = corrupt(source, synthesis, rng)
    except SynthesisError as e:
        raise SynthesisError(f"{task.relative}: {e}") from e

    output = Path(job.output)
    save_image(image, output / f"{task.sample_id}_img.png")
    save_mask(mask, output / f"{task.sample_id}_mask.png")
    if job.debug:
        save_image(source, output / f"{task.sample_id}_src.png")
        if not verify_sample(source, image, mask, plan):
            raise SynthesisError(f"{task.sample_id}: corrupted image disagrees with its plan")

    report = score_mask(mask, job.params.decompose, job.params.score)
    return SampleRecord(
        id=task.sample_id,
        index=task.index,
        source=task.relative,
        original_width=original.width,
        original_height=original.height,
        width=image.width,
        height=image.height,
        plan=plan,
        gt_score=report.score,
        requested=plan.requested,
        shortfall=plan.shortfall,
    )


def run_tasks(tasks: List[SampleTask], job: SynthesisJob, workers: int) -> List[SampleRecord]:
    if workers < 1:
        raise UsageError(f"--workers must be at least 1, got {workers}")
    worker = functools.partial(run_sample, job=job)
    if workers == 1 or len(tasks) == 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        # map yields in submission order, i.e. by sample index.
        return list(executor.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _finish(manifest: Manifest, output: str, tag: str) -> Manifest:
    for record in manifest.records:
        events_logger.event(
            f"{tag} {record.id} source={record.source} kind={record.plan.kind} "
            f"elements={record.plan.elements} shortfall={record.shortfall} "
            f"gt_score={record.gt_score:.6f}"
        )
        if record.shortfall:
            logger.warning(
                f"{tag} {record.id}: placed {record.plan.elements} of {record.requested} elements"
            )
    path = write_manifest(manifest, output)
    logger.info(f"{tag} wrote {len(manifest.records)} samples and {path}")
    return manifest


def cmd_synthesize(
    input: str,
    output: str,
    seed: int,
    params: ToolkitConfig,
    count: int = 1,
    workers: int = 1,
    debug: bool = False,
) -> Manifest:
    """
    Synthesize ``count`` corrupted replicas of every input image.

    Each replica is resized to the model input size, augmented (unless the
    warm-up regime disables it), corrupted and written as
    ``<id>_img.png`` / ``<id>_mask.png`` with ``id = <stem>_<replica:03d>``.
    With ``debug`` the augmented source is kept as ``<id>_src.png`` and every
    sample is checked against its plan.
    """
    paths = discover_inputs(input)
    tasks = plan_tasks(paths, input, count)
    logger.info(
        f"[SYNTH] {len(paths)} images x {count} replicas, seed={seed}, workers={workers}, "
        f"warmup={params.synthesis.warmup}"
    )
    Path(output).mkdir(parents=True, exist_ok=True)
    job = SynthesisJob(seed=seed, params=params, output=output, debug=debug)
    records = run_tasks(tasks, job, workers)
    manifest = Manifest(
        command="synthesize",
        seed=seed,
        count=count,
        model_input_size=MODEL_INPUT_SIZE,
        params=params,
        records=records,
    )
    return _finish(manifest, output, "[SYNTH]")


def degrade_params(params: ToolkitConfig, category: DegradeCategory) -> ToolkitConfig:
    """Patch mode only, with the category's offset band and no warm-up scaling."""
    synthesis = params.synthesis.model_copy(
        update={"offset": category.offset, "line_probability": 0.0, "warmup": False}
    )
    # model_copy skips validation; round-trip through the validator instead.
    synthesis = type(synthesis).model_validate(synthesis.model_dump())
    return params.model_copy(update={"synthesis": synthesis})


def cmd_degrade(
    input: str,
    output: str,
    category: str,
    seed: int,
    params: ToolkitConfig,
    count: int = 1,
    workers: int = 1,
    debug: bool = False,
) -> Manifest:
    """
    Corrupt images at native resolution for external matcher experiments.

    No resize and no augmentation happen; only displaced patches are injected,
    with offsets drawn from the category's band (small: 1-2 %, large: 2-7 % of
    each dimension, rounded toward zero).
    """
    band = degrade_category(category)
    params = degrade_params(params, band)
    paths = discover_inputs(input)
    tasks = plan_tasks(paths, input, count)
    logger.info(
        f"[DEGRADE] {len(paths)} images x {count} replicas, category={band.name} "
        f"offset={band.offset}, seed={seed}, workers={workers}"
    )
    Path(output).mkdir(parents=True, exist_ok=True)
    job = SynthesisJob(
        seed=seed, params=params, output=output, size=None, augment=False, debug=debug
    )
    records = run_tasks(tasks, job, workers)
    manifest = Manifest(
        command="degrade",
        seed=seed,
        count=count,
        model_input_size=None,
        category=band,
        params=params,
        records=records,
    )
    return _finish(manifest, output, "[DEGRADE]")
