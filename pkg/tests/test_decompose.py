import numpy as np
import pydantic
import pytest
from scipy import ndimage

from stitchkit.decompose import (
    Component,
    ComponentClass,
    DecomposeConfig,
    classify_component,
    connected_components,
    decompose,
    label_components,
)
from stitchkit.imgcore import BinaryMask, Rect
from stitchkit.inject import SynthesisParams, sample_artifact_plan

from tests.helpers import rect_mask


def test_empty_mask_has_no_components():
    assert decompose(BinaryMask.empty(50, 50), DecomposeConfig()).components == []


def test_diagonal_neighbours_merge_only_under_eight_connectivity():
    bits = np.zeros((10, 10), dtype=bool)
    bits[2:4, 2:4] = True
    bits[4:6, 4:6] = True
    mask = BinaryMask(bits)
    assert len(connected_components(mask, DecomposeConfig(connectivity=8, min_area=0.0))) == 1
    assert len(connected_components(mask, DecomposeConfig(connectivity=4, min_area=0.0))) == 2


def test_components_are_ordered_top_left_first():
    mask = rect_mask(60, 60, (40, 5, 4, 4), (2, 30, 4, 4), (10, 5, 4, 4))
    boxes = [comp.bbox.to_list() for comp in connected_components(mask, DecomposeConfig())]
    assert boxes == [[10, 5, 4, 4], [40, 5, 4, 4], [2, 30, 4, 4]]


def test_small_components_are_dropped_from_labels_too():
    mask = rect_mask(224, 224, (10, 10, 2, 2), (100, 100, 20, 20))
    labels, components = label_components(mask, DecomposeConfig())
    assert len(components) == 1
    assert components[0].area == 400
    assert np.count_nonzero(labels) == 400
    assert labels[10, 10] == 0


@pytest.mark.parametrize(
    "rect, expected",
    [
        ((0, 20, 50, 3), ComponentClass.HLINE),
        ((20, 0, 3, 50), ComponentClass.VLINE),
        ((0, 0, 50, 50), ComponentClass.PATCH),
        ((5, 5, 10, 10), ComponentClass.PATCH),
        ((0, 20, 44, 3), ComponentClass.PATCH),
        ((0, 20, 45, 3), ComponentClass.HLINE),
    ],
)
def test_classification_by_span(rect, expected):
    mask = rect_mask(50, 50, rect)
    (comp,) = connected_components(mask, DecomposeConfig())
    assert classify_component(comp, 50, 50, DecomposeConfig()) == expected


def test_counts():
    mask = rect_mask(100, 100, (0, 10, 100, 2), (0, 50, 100, 3), (5, 20, 10, 10), (40, 0, 2, 8))
    assert decompose(mask, DecomposeConfig()).counts() == {"n": 2, "m": 0, "o": 2}


@pytest.mark.parametrize("size", [(64, 64), (224, 224), (300, 170)])
def test_ground_truth_masks_decompose_into_their_plans(size):
    width, height = size
    params = SynthesisParams(line_probability=0.4)
    rng = np.random.default_rng(sum(size))
    for _ in range(150):
        plan = sample_artifact_plan(width, height, params, rng)
        mask = BinaryMask.from_rects(width, height, plan.rects(width, height))
        decomposed = decompose(mask, DecomposeConfig())
        counts = decomposed.counts()
        components = decomposed.components
        vertical = sum(1 for line in plan.lines if line.axis == "vertical")
        horizontal = sum(1 for line in plan.lines if line.axis == "horizontal")
        assert counts == {"n": len(plan.patches), "m": vertical, "o": horizontal}
        boxes = sorted(comp.bbox.to_list() for comp in components)
        assert boxes == sorted(rect.to_list() for rect in plan.rects(width, height))
        assert sum(comp.area for comp in components) == mask.count()


@pytest.mark.parametrize("connectivity", [4, 8])
def test_components_partition_the_retained_foreground(connectivity):
    rng = np.random.default_rng(31 + connectivity)
    cfg = DecomposeConfig(connectivity=connectivity, min_area=0.002)
    min_pixels = cfg.min_area * 60 * 40
    for _ in range(100):
        mask = BinaryMask(rng.random((40, 60)) < rng.uniform(0.05, 0.5))
        labels, components = label_components(mask, cfg)
        retained = labels > 0
        assert not np.any(retained & ~mask.bits)
        assert sum(comp.area for comp in components) == int(np.count_nonzero(retained))

        # One label per component, each with exactly the component's pixels.
        expected = []
        for label, slices in enumerate(ndimage.find_objects(labels), start=1):
            if slices is None:
                continue
            rows, cols = slices
            area = int(np.count_nonzero(labels == label))
            expected.append((cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start, area))
        assert sorted(expected) == sorted((*comp.bbox.to_list(), comp.area) for comp in components)

        # Whatever was dropped consists of components below the area floor.
        dropped = mask.bits & ~retained
        if dropped.any():
            _, small = label_components(BinaryMask(dropped), DecomposeConfig(connectivity=connectivity, min_area=0.0))
            assert all(comp.area < min_pixels for comp in small)


def test_component_area_cannot_exceed_its_box():
    with pytest.raises(pydantic.ValidationError):
        Component(area=10, bbox=Rect(x=0, y=0, w=3, h=3))
