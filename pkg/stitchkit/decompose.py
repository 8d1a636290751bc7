# The MIT License (MIT)
# Copyright © 2024 stitchkit contributors
#
# See LICENSE for the full license text.

"""
Connected-component census of artifact masks.

Every component is classified as a patch, a vertical line or a horizontal
line by how much of the image its bounding box spans. The resulting counts
are the n, m and o of the mosaicking artifact score.
"""

import enum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pydantic
from scipy import ndimage

from stitchkit.imgcore import BinaryMask, Rect


class ComponentClass(str, enum.Enum):
    PATCH = "patch"
    VLINE = "vline"
    HLINE = "hline"


class DecomposeConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    connectivity: Literal[4, 8] = pydantic.Field(8, description="Pixel neighbourhood for labeling")
    tau: float = pydantic.Field(
        0.9, gt=0.0, le=1.0, description="Span fraction at which a component counts as a line"
    )
    min_area: float = pydantic.Field(
        0.0001, ge=0.0, lt=1.0, description="Components below this fraction of the image are dropped"
    )


class Component(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    area: int = pydantic.Field(..., ge=1, description="Foreground pixel count")
    bbox: Rect
    cls: Optional[ComponentClass] = None

    @pydantic.model_validator(mode="after")
    def _check_area(self):
        if self.area > self.bbox.area:
            raise ValueError(f"area {self.area} exceeds bounding box area {self.bbox.area}")
        return self

    def classified(self, cls: ComponentClass) -> "Component":
        return self.model_copy(update={"cls": cls})


class DecomposedMask(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    width: int = pydantic.Field(..., ge=1)
    height: int = pydantic.Field(..., ge=1)
    components: List[Component] = pydantic.Field(default_factory=list)

    def of_class(self, cls: ComponentClass) -> List[Component]:
        return [comp for comp in self.components if comp.cls == cls]

    def counts(self) -> Dict[str, int]:
        return {
            "n": len(self.of_class(ComponentClass.PATCH)),
            "m": len(self.of_class(ComponentClass.VLINE)),
            "o": len(self.of_class(ComponentClass.HLINE)),
        }


def _structure(connectivity: int) -> np.ndarray:
    return ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)


def label_components(
    mask: BinaryMask, cfg: DecomposeConfig
) -> Tuple[np.ndarray, List[Component]]:
    """
    Label ``mask`` and return the label image together with the retained components.

    Labels of dropped (too small) components are zeroed in the returned image,
    so its foreground is exactly the union of the returned components. The
    component list is ordered by bounding-box top-left, row-major; ties keep
    the raster order of each component's first pixel.
    """
    labels, count = ndimage.label(mask.bits, structure=_structure(cfg.connectivity))
    if count == 0:
        return labels, []

    areas = np.bincount(labels.ravel(), minlength=count + 1)
    min_pixels = cfg.min_area * mask.width * mask.height
    found = []
    for index, slices in enumerate(ndimage.find_objects(labels), start=1):
        area = int(areas[index])
        if area < min_pixels:
            region = labels[slices]
            region[region == index] = 0
            continue
        rows, cols = slices
        bbox = Rect(
            x=cols.start, y=rows.start, w=cols.stop - cols.start, h=rows.stop - rows.start
        )
        found.append((bbox.y, bbox.x, index, Component(area=area, bbox=bbox)))
    found.sort(key=lambda item: item[:3])
    return labels, [item[3] for item in found]


def connected_components(mask: BinaryMask, cfg: DecomposeConfig) -> List[Component]:
    return label_components(mask, cfg)[1]


def classify_component(
    comp: Component, width: int, height: int, cfg: DecomposeConfig
) -> ComponentClass:
    """
    A box spanning at least ``tau`` of the width and wider than tall is a
    horizontal line; spanning ``tau`` of the height and taller than wide, a
    vertical line; everything else, including boxes spanning both, a patch.
    """
    box = comp.bbox
    spans_width = box.w >= cfg.tau * width
    spans_height = box.h >= cfg.tau * height
    if spans_width and spans_height:
        return ComponentClass.PATCH
    if spans_width and box.h < box.w:
        return ComponentClass.HLINE
    if spans_height and box.w < box.h:
        return ComponentClass.VLINE
    return ComponentClass.PATCH


def decompose(mask: BinaryMask, cfg: DecomposeConfig) -> DecomposedMask:
    components = [
        comp.classified(classify_component(comp, mask.width, mask.height, cfg))
        for comp in connected_components(mask, cfg)
    ]
    return DecomposedMask(width=mask.width, height=mask.height, components=components)
