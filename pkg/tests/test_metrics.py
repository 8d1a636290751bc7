import math

import numpy as np
import pytest

from stitchkit.decompose import DecomposeConfig
from stitchkit.errors import ArgumentError, ScoreFileError
from stitchkit.imgcore import BinaryMask
from stitchkit.metrics import (
    ConfusionCounts,
    MetricsConfig,
    compute_eer,
    confusion_counts,
    dataset_report,
    eer_report,
    f1,
    f2,
    iou,
    mean_score_difference,
    pixel_metrics,
    read_score_file,
    recall,
    summarize_scores,
)
from stitchkit.score import ScoreParams

from tests.helpers import CLOSE_IN_VALUE, naive_confusion, naive_metrics, random_mask, rect_mask, sweep_eer

DCFG = DecomposeConfig()
PARAMS = ScoreParams()


def test_half_overlap_counts():
    gt = rect_mask(10, 10, (0, 0, 5, 10))
    pred = rect_mask(10, 10, (0, 0, 10, 5))
    assert confusion_counts(pred, gt) == ConfusionCounts(tp=25, fp=25, fn=25, tn=25)


def test_identity_and_complement_counts():
    gt = random_mask(np.random.default_rng(0), 16, 16)
    same = confusion_counts(gt, gt)
    assert same.fp == 0 and same.fn == 0
    inverted = confusion_counts(gt.invert(), gt)
    assert inverted.tp == 0 and inverted.tn == 0


def test_mismatched_sizes_are_rejected():
    with pytest.raises(ArgumentError):
        confusion_counts(BinaryMask.empty(4, 4), BinaryMask.empty(4, 5))


def test_formula_worked_values():
    counts = ConfusionCounts(tp=50, fp=0, fn=50, tn=900)
    assert iou(counts) == 0.5
    assert f1(counts) == CLOSE_IN_VALUE(2 / 3, 1e-12)
    assert f2(counts) == CLOSE_IN_VALUE(250 / 450, 1e-12)
    assert recall(counts) == 0.5


def test_empty_denominators():
    both_empty = ConfusionCounts(tp=0, fp=0, fn=0, tn=100)
    assert set(pixel_metrics(both_empty).values()) == {1.0}
    missed = ConfusionCounts(tp=0, fp=0, fn=10, tn=90)
    metrics = pixel_metrics(missed)
    assert metrics["iou"] == metrics["f1"] == metrics["f2"] == metrics["recall"] == 0.0
    assert metrics["precision"] == 0.0
    assert metrics["accuracy"] == 0.9


def test_metrics_match_the_per_pixel_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        density = rng.uniform(0.0, 0.6)
        pred = random_mask(rng, 32, 32, density)
        gt = random_mask(rng, 32, 32, rng.uniform(0.0, 0.6))
        tally = naive_confusion(pred, gt)
        counts = confusion_counts(pred, gt)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == tally
        assert pixel_metrics(counts) == naive_metrics(*tally)
        if counts.tp + counts.fp + counts.fn > 0:
            value = iou(counts)
            assert f1(counts) == CLOSE_IN_VALUE(2 * value / (1 + value), 1e-12)


def test_mean_score_difference():
    empty = BinaryMask.empty(224, 224)
    patch = rect_mask(224, 224, (10, 10, 20, 20))
    assert mean_score_difference([(patch, patch)], DCFG, PARAMS) == 0.0
    assert mean_score_difference([(empty, patch)], DCFG, PARAMS) == CLOSE_IN_VALUE(
        5.0 + 400 / 50176, 1e-9
    )
    forward = mean_score_difference([(empty, patch), (patch, patch)], DCFG, PARAMS)
    backward = mean_score_difference([(patch, patch), (empty, patch)], DCFG, PARAMS)
    assert forward == backward
    with pytest.raises(ArgumentError):
        mean_score_difference([], DCFG, PARAMS)


def test_dataset_report_macro_average():
    perfect = rect_mask(20, 20, (2, 2, 5, 5))
    missed = rect_mask(20, 20, (10, 10, 5, 5))
    report = dataset_report([(perfect, perfect), (BinaryMask.empty(20, 20), missed)], DCFG, PARAMS)
    assert report.iou == 0.5
    assert report.recall == 0.5
    assert report.samples == 2


def test_dataset_report_single_pair_and_duplicates():
    rng = np.random.default_rng(9)
    pair = (random_mask(rng, 24, 24), random_mask(rng, 24, 24))
    single = dataset_report([pair], DCFG, PARAMS)
    metrics = pixel_metrics(confusion_counts(*pair))
    assert single.iou == metrics["iou"]
    assert single.f2 == metrics["f2"]
    doubled = dataset_report([pair, pair], DCFG, PARAMS)
    assert doubled.iou == CLOSE_IN_VALUE(single.iou, 1e-15)
    assert doubled.mean_score_difference == CLOSE_IN_VALUE(single.mean_score_difference, 1e-12)


def test_dataset_report_micro_pools_counts():
    a = rect_mask(10, 10, (0, 0, 2, 2))
    b = rect_mask(10, 10, (0, 0, 8, 8))
    pairs = [(a, a), (BinaryMask.empty(10, 10), b)]
    micro = dataset_report(pairs, DCFG, PARAMS, MetricsConfig(aggregation="micro"))
    assert micro.iou == CLOSE_IN_VALUE(4 / 68, 1e-12)
    assert micro.aggregation == "micro"


def test_report_json_uses_table_column_names():
    mask = rect_mask(10, 10, (1, 1, 3, 3))
    payload = dataset_report([(mask, mask)], DCFG, PARAMS).to_json_dict()
    assert set(payload) == {
        "IoU",
        "F1",
        "F2",
        "Accuracy",
        "Recall",
        "Precision",
        "Mean Score Dif.",
        "Samples",
        "Aggregation",
    }
    assert payload["IoU"] == 1.0
    assert payload["Mean Score Dif."] == 0.0


def test_dataset_report_rejects_empty_input():
    with pytest.raises(ArgumentError):
        dataset_report([], DCFG, PARAMS)


def test_eer_worked_examples():
    assert compute_eer([0.6, 0.7, 0.8, 0.9], [0.1, 0.2, 0.3]) == 0.0
    assert compute_eer([0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 0.5
    report = eer_report([0.6, 0.7, 0.8, 0.9], [0.2, 0.3, 0.5, 0.65])
    assert report.eer == 0.25
    assert report.threshold == CLOSE_IN_VALUE(0.625, 1e-12)
    assert (report.fmr, report.fnmr) == (0.25, 0.25)
    assert (report.genuine, report.impostor) == (4, 4)


def test_eer_matches_the_sweep_oracle():
    rng = np.random.default_rng(77)
    for _ in range(1000):
        genuine = np.round(rng.normal(0.6, 0.2, size=rng.integers(1, 13)), 2).tolist()
        impostor = np.round(rng.normal(0.4, 0.2, size=rng.integers(1, 13)), 2).tolist()
        eer = compute_eer(genuine, impostor)
        assert 0.0 <= eer <= 1.0
        assert eer == CLOSE_IN_VALUE(sweep_eer(genuine, impostor), 1e-9)


def test_eer_rejects_empty_or_non_finite_scores():
    with pytest.raises(ArgumentError):
        compute_eer([], [0.1])
    with pytest.raises(ArgumentError):
        compute_eer([0.1, math.nan], [0.2])


def test_read_score_file(tmp_path):
    path = tmp_path / "genuine.csv"
    path.write_text("0.5\n\n  0.25 \n1e-3\n")
    assert read_score_file(path) == [0.5, 0.25, 0.001]


def test_read_score_file_reports_the_bad_line(tmp_path):
    path = tmp_path / "impostor.csv"
    path.write_text("0.5\n0.7\nnot-a-number\n")
    with pytest.raises(ScoreFileError) as info:
        read_score_file(path)
    assert info.value.line_number == 3
    assert ":3:" in str(info.value)


def test_score_summary():
    summary = summarize_scores([0.0, 0.3, 5.8, 12.0, 6.1], PARAMS)
    assert summary.count == 5
    assert summary.max == 12.0
    assert summary.median == 5.8
    assert summary.flagged == 3
    assert summary.flagged_rate == 0.6
    assert summary.bands == {0: 2, 1: 2, 2: 1}
