# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import pydantic

import stitchkit
from stitchkit.errors import ImageIOError, UsageError
from stitchkit.inject import ArtifactPlan
from stitchkit.utils.config import ToolkitConfig

MANIFEST_NAME = "manifest.json"


class DegradeCategory(pydantic.BaseModel):
    """Offset band of a degradation experiment, as fractions of the image dimensions."""

    model_config = pydantic.ConfigDict(frozen=True)

    name: Literal["small", "large"]
    offset: Tuple[float, float]


DEGRADE_CATEGORIES = {
    "small": DegradeCategory(name="small", offset=(0.01, 0.02)),
    "large": DegradeCategory(name="large", offset=(0.02, 0.07)),
}


def degrade_category(name: str) -> DegradeCategory:
    try:
        return DEGRADE_CATEGORIES[name]
    except KeyError:
        raise UsageError(
            f"unknown degrade category {name!r}; expected one of {sorted(DEGRADE_CATEGORIES)}"
        ) from None


class SampleRecord(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    id: str
    index: int = pydantic.Field(..., ge=0, description="Global sample index feeding the seed mix")
    source: str = pydantic.Field(..., description="Input path relative to the input directory")
    original_width: int = pydantic.Field(..., ge=1)
    original_height: int = pydantic.Field(..., ge=1)
    width: int = pydantic.Field(..., ge=1, description="Width of the emitted sample")
    height: int = pydantic.Field(..., ge=1, description="Height of the emitted sample")
    plan: ArtifactPlan
    gt_score: float
    requested: int = pydantic.Field(..., ge=0)
    shortfall: int = pydantic.Field(..., ge=0)


class Manifest(pydantic.BaseModel):
    """
    Everything needed to replay a run: tool and manifest versions, the master
    seed, the full parameter echo and one record per emitted sample, in
    sample-index order.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    version: str = stitchkit.__version__
    manifest_version: int = stitchkit.__manifest_version__
    command: Literal["synthesize", "degrade"]
    seed: int
    count: int = pydantic.Field(..., ge=1)
    model_input_size: Optional[int] = pydantic.Field(
        None, description="Resize target, or None for native resolution"
    )
    category: Optional[DegradeCategory] = None
    params: ToolkitConfig
    records: List[SampleRecord] = pydantic.Field(default_factory=list)

    def to_json(self) -> str:
        # Sorted keys and no timestamps keep repeated runs byte-identical.
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_manifest(manifest: Manifest, output_dir: Union[str, Path]) -> Path:
    path = Path(output_dir) / MANIFEST_NAME
    try:
        path.write_text(manifest.to_json(), encoding="utf-8")
    except OSError as e:
        raise ImageIOError(f"{path}: cannot write manifest ({e})") from e
    return path


def read_manifest(path: Union[str, Path]) -> Manifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ImageIOError(f"{path}: cannot read manifest ({e})") from e
    return Manifest.model_validate_json(text)
