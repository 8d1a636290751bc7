# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Mosaicking artifact score.

    S = ( sum_patches (b * W * H / 100 + w * h)
          + c * (sum_vlines H * w_line + sum_hlines W * h_line) ) * 100 / (W * H)

Each patch therefore contributes ``b`` plus its area as a percentage of the
image, each line ``100 * c`` times its thickness as a fraction of the image
dimension it crosses. A mask is flagged when ``S >= threshold`` (default ``b``),
i.e. as soon as one closed patch is found.
"""

from typing import Any, Dict, List, Literal

import pydantic

from stitchkit.decompose import ComponentClass, DecomposeConfig, DecomposedMask, decompose
from stitchkit.imgcore import BinaryMask, Rect

DEFAULT_PATCH_WEIGHT = 5.0
DEFAULT_LINE_WEIGHT = 0.025


class ScoreParams(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    b: float = pydantic.Field(DEFAULT_PATCH_WEIGHT, gt=0.0, description="Patch weight")
    c: float = pydantic.Field(DEFAULT_LINE_WEIGHT, gt=0.0, description="Line weight")
    threshold: float = pydantic.Field(..., gt=0.0, description="Flag cutoff (defaults to b)")
    area_mode: Literal["bbox", "pixels"] = pydantic.Field(
        "bbox", description="Patch area from the bounding box or from the raw pixel count"
    )

    @pydantic.model_validator(mode="before")
    @classmethod
    def _default_threshold(cls, data: Any):
        if isinstance(data, dict) and data.get("threshold") is None:
            data = dict(data)
            data["threshold"] = data.get("b", DEFAULT_PATCH_WEIGHT)
        return data


class ComponentScore(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    cls: ComponentClass
    bbox: Rect
    contribution: float


class ScoreReport(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    score: float
    flagged: bool
    n: int = pydantic.Field(0, ge=0, description="Patch components")
    m: int = pydantic.Field(0, ge=0, description="Vertical line components")
    o: int = pydantic.Field(0, ge=0, description="Horizontal line components")
    components: List[ComponentScore] = pydantic.Field(default_factory=list)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "score": self.score,
            "flagged": self.flagged,
            "n": self.n,
            "m": self.m,
            "o": self.o,
            "components": [
                {
                    "class": comp.cls.value,
                    "bbox": comp.bbox.to_list(),
                    "contribution": comp.contribution,
                }
                for comp in self.components
            ],
        }


def component_contribution(
    cls: ComponentClass, bbox: Rect, area: int, width: int, height: int, p: ScoreParams
) -> float:
    normalizer = 100.0 / (width * height)
    if cls == ComponentClass.PATCH:
        patch_area = bbox.w * bbox.h if p.area_mode == "bbox" else area
        return (p.b * width * height / 100.0 + patch_area) * normalizer
    if cls == ComponentClass.VLINE:
        return p.c * height * bbox.w * normalizer
    return p.c * width * bbox.h * normalizer


def compute_score(d: DecomposedMask, p: ScoreParams) -> ScoreReport:
    scored = []
    for comp in d.components:
        cls = comp.cls if comp.cls is not None else ComponentClass.PATCH
        scored.append(
            ComponentScore(
                cls=cls,
                bbox=comp.bbox,
                contribution=component_contribution(
                    cls, comp.bbox, comp.area, d.width, d.height, p
                ),
            )
        )
    total = sum(comp.contribution for comp in scored)
    return ScoreReport(
        score=total,
        flagged=total >= p.threshold,
        n=sum(1 for comp in scored if comp.cls == ComponentClass.PATCH),
        m=sum(1 for comp in scored if comp.cls == ComponentClass.VLINE),
        o=sum(1 for comp in scored if comp.cls == ComponentClass.HLINE),
        components=scored,
    )


def score_mask(mask: BinaryMask, dcfg: DecomposeConfig, p: ScoreParams) -> ScoreReport:
    return compute_score(decompose(mask, dcfg), p)
