import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import brute_force_map, instances
from tsl.core import ClassLabel, Detection, DetectionSet, EventSet, SoundEvent, TimeInterval, Vocabulary
from tsl.errors import (
    ConfigError,
    DuplicateVideoId,
    EmptyGroundTruth,
    NoGroundTruth,
    UnknownVideoId,
    ValidationError,
    VideoIdMismatch,
)
from tsl.metrics import (
    DEFAULT_THRESHOLDS,
    TiouThresholds,
    average_precision,
    evaluate,
    match_detections,
    pairwise_tiou,
    tiou,
)

VOCAB = Vocabulary(("dog", "car"))
DOG = ClassLabel(0, VOCAB)
CAR = ClassLabel(1, VOCAB)


def _interval(start, length):
    return TimeInterval(start, start + length)


intervals = st.builds(
    _interval,
    st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
    st.floats(min_value=0.01, max_value=50.0, allow_nan=False),
)


def test_tiou_examples():
    assert tiou(TimeInterval(0, 1), TimeInterval(0, 1)) == 1.0
    assert tiou(TimeInterval(0, 1), TimeInterval(2, 3)) == 0.0
    assert tiou(TimeInterval(0, 1), TimeInterval(1, 2)) == 0.0
    assert tiou(TimeInterval(0, 2), TimeInterval(1, 3)) == pytest.approx(1 / 3)
    assert tiou(TimeInterval(0, 4), TimeInterval(1, 2)) == pytest.approx(0.25)


@given(intervals, intervals)
def test_tiou_symmetric_and_bounded(a, b):
    assert tiou(a, b) == tiou(b, a)
    assert 0.0 <= tiou(a, b) <= 1.0
    assert tiou(a, a) == 1.0


@given(intervals, intervals, st.floats(min_value=0.0, max_value=100.0, allow_nan=False))
def test_tiou_shift_invariant(a, b, shift):
    moved_a = TimeInterval(a.start + shift, a.end + shift)
    moved_b = TimeInterval(b.start + shift, b.end + shift)
    assert tiou(moved_a, moved_b) == pytest.approx(tiou(a, b), abs=1e-6)


def test_pairwise_tiou_matches_scalar():
    a = np.array([[0.0, 1.0], [0.5, 2.0]])
    b = np.array([[0.0, 1.0], [1.5, 3.0], [5.0, 6.0]])
    matrix = pairwise_tiou(a, b)
    assert matrix.shape == (2, 3)
    for i in range(2):
        for j in range(3):
            expected = tiou(TimeInterval(*a[i]), TimeInterval(*b[j]))
            assert matrix[i, j] == pytest.approx(expected)


def test_match_single_true_positive():
    dets = DetectionSet("v1", (Detection.build(0, 1, DOG, 0.9),))
    gt = EventSet("v1", (SoundEvent.build(0, 1, DOG),))
    assert match_detections(dets, gt, 0.5) == [(0, 0)]


def test_match_duplicate_is_false_positive():
    dets = DetectionSet("v1", (Detection.build(0, 1, DOG, 0.8), Detection.build(0, 1, DOG, 0.9)))
    gt = EventSet("v1", (SoundEvent.build(0, 1, DOG),))
    # processed by descending score: index 1 first
    assert match_detections(dets, gt, 0.5) == [(1, 0), (0, None)]


def test_match_requires_same_class():
    dets = DetectionSet("v1", (Detection.build(0, 1, DOG, 0.9),))
    gt = EventSet("v1", (SoundEvent.build(0, 1, CAR),))
    assert match_detections(dets, gt, 0.5) == [(0, None)]


def test_match_prefers_highest_overlap():
    dets = DetectionSet("v1", (Detection.build(1.0, 3.0, DOG, 0.9),))
    gt = EventSet("v1", (SoundEvent.build(0.0, 2.0, DOG), SoundEvent.build(1.0, 2.8, DOG)))
    assert match_detections(dets, gt, 0.3) == [(0, 1)]


def test_match_video_mismatch():
    with pytest.raises(VideoIdMismatch):
        match_detections(DetectionSet("v1"), EventSet("v2"), 0.5)


def test_ap_examples():
    gts = [("v1", SoundEvent.build(0, 1, DOG))]
    assert average_precision([("v1", Detection.build(0, 1, DOG, 0.9))], gts, 0.5) == 1.0
    assert average_precision([], gts, 0.5) == 0.0


def test_ap_tp_fp_tp():
    gts = [("v1", SoundEvent.build(0, 1, DOG)), ("v1", SoundEvent.build(5, 6, DOG))]
    dets = [
        ("v1", Detection.build(0, 1, DOG, 0.9)),
        ("v1", Detection.build(10, 11, DOG, 0.8)),
        ("v1", Detection.build(5, 6, DOG, 0.7)),
    ]
    assert average_precision(dets, gts, 0.5) == pytest.approx(0.5 * 1.0 + 0.5 * (2 / 3), abs=1e-12)


def test_ap_without_ground_truth():
    with pytest.raises(NoGroundTruth):
        average_precision([("v1", Detection.build(0, 1, DOG, 0.9))], [], 0.5)


def test_ap_depends_only_on_rank():
    for _, preds, gts in instances(11, 20):
        squashed = [
            DetectionSet(p.video_id, tuple(Detection(d.event, d.score ** 2) for d in p.detections))
            for p in preds
        ]
        assert evaluate(squashed, gts).per_threshold_map == evaluate(preds, gts).per_threshold_map


def _perfect(gts):
    return [DetectionSet(g.video_id, tuple(Detection(e, 1.0) for e in g.events)) for g in gts]


def test_perfect_predictor_is_exactly_one():
    events = (
        SoundEvent.build(0.0, 1.5, DOG),
        SoundEvent.build(0.7, 3.1, DOG),
        SoundEvent.build(2.0, 2.3, CAR),
    )
    gts = [EventSet("v1", events), EventSet("v2", (SoundEvent.build(4.0, 9.0, CAR),))]
    report = evaluate(_perfect(gts), gts, TiouThresholds.parse("0.1:0.5:0.1"))
    assert report.overall_map == 1.0
    assert report.per_threshold_map == (1.0,) * 5


def test_two_classes_one_missed():
    gts = [EventSet("v1", (SoundEvent.build(0, 1, DOG), SoundEvent.build(2, 3, CAR)))]
    preds = [DetectionSet("v1", (Detection.build(0, 1, DOG, 0.9),))]
    report = evaluate(preds, gts)
    assert report.per_threshold_map == (0.5,) * len(DEFAULT_THRESHOLDS)
    assert report.overall_map == 0.5
    assert report.ap[1] == (0.0,) * len(DEFAULT_THRESHOLDS)


def test_class_without_ground_truth_is_excluded():
    vocab = Vocabulary(("dog", "car", "bird"))
    gts = [EventSet("v1", (SoundEvent.build(0, 1, ClassLabel(0, vocab)),))]
    preds = [DetectionSet("v1", (Detection.build(0, 1, ClassLabel(0, vocab), 0.9),
                                 Detection.build(4, 5, ClassLabel(2, vocab), 0.9)))]
    report = evaluate(preds, gts)
    assert report.overall_map == 1.0
    assert report.ap[1] == (None,) * len(DEFAULT_THRESHOLDS)
    assert report.counts["bird"].detections == 1
    assert report.counts["bird"].ground_truth == 0


def test_extra_ground_truth_videos_count_as_misses():
    gts = [EventSet("v1", (SoundEvent.build(0, 1, DOG),)), EventSet("v2", (SoundEvent.build(0, 1, DOG),))]
    preds = [DetectionSet("v1", (Detection.build(0, 1, DOG, 0.9),))]
    assert evaluate(preds, gts).overall_map == pytest.approx(0.5)


def test_evaluate_errors():
    gts = [EventSet("v1", (SoundEvent.build(0, 1, DOG),))]
    with pytest.raises(UnknownVideoId):
        evaluate([DetectionSet("v9")], gts)
    with pytest.raises(EmptyGroundTruth):
        evaluate([], [EventSet("v1")])
    with pytest.raises(DuplicateVideoId):
        evaluate([], gts + gts)
    other = ClassLabel(0, Vocabulary(("dog", "car", "bird")))
    with pytest.raises(ValidationError, match="different vocabularies"):
        evaluate([DetectionSet("v1", (Detection.build(0, 1, other, 0.5),))], gts)


def test_evaluate_matches_brute_force_oracle():
    thresholds = TiouThresholds.parse("0.1:0.5:0.1")
    for _, preds, gts in instances(2024, 1000):
        report = evaluate(preds, gts, thresholds)
        per_threshold, overall = brute_force_map(preds, gts, thresholds.values)
        for got, want in zip(report.per_threshold_map, per_threshold):
            assert abs(got - want) <= 1e-9
        assert abs(report.overall_map - overall) <= 1e-9


def test_map_non_increasing_in_threshold():
    thresholds = TiouThresholds.parse("0.1:0.9:0.1")
    for _, preds, gts in instances(7, 100):
        values = evaluate(preds, gts, thresholds).per_threshold_map
        assert all(lo >= hi for lo, hi in zip(values, values[1:]))


def test_low_scored_false_positive_never_raises_ap():
    for vocabulary, preds, gts in instances(11, 300):
        gt_items = [(s.video_id, e) for s in gts for e in s.events]
        det_items = [(s.video_id, d) for s in preds for d in s.detections]
        for c in sorted({e.label.id for _, e in gt_items}):
            class_gts = [(v, e) for v, e in gt_items if e.label.id == c]
            class_dets = [(v, d) for v, d in det_items if d.label.id == c]
            lowest = min((d.score for _, d in class_dets), default=1.0)
            # Far past every generated event, so it can never match.
            extra = Detection.build(100.0, 101.0, ClassLabel(c, vocabulary), lowest / 2)
            widened = class_dets + [(class_gts[0][0], extra)]
            for t in (0.1, 0.3, 0.5, 0.7):
                assert average_precision(widened, class_gts, t) <= average_precision(class_dets, class_gts, t)

def test_report_independent_of_jobs():
    for _, preds, gts in instances(3, 10):
        assert evaluate(preds, gts, jobs=1).to_dict() == evaluate(preds, gts, jobs=4).to_dict()


def test_report_rendering():
    gts = [EventSet("v1", (SoundEvent.build(0, 1, DOG),))]
    report = evaluate(_perfect(gts), gts)
    doc = report.to_dict()
    assert doc["overall_map"] == 1.0
    assert doc["thresholds"] == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert doc["per_class"]["car"]["ap"] == [None] * 5
    table = report.to_table()
    assert "overall mAP: 1.0000" in table
    assert table.splitlines()[0].startswith("class")


def test_threshold_grammar():
    assert TiouThresholds.parse("0.1:0.5:0.1").values == (0.1, 0.2, 0.3, 0.4, 0.5)
    assert TiouThresholds.parse("0.5").values == (0.5,)
    assert TiouThresholds.parse("0.3, 0.5,0.7").values == (0.3, 0.5, 0.7)
    assert TiouThresholds.parse("0.5:0.95:0.05").values[-1] == 0.95
    assert all(math.isclose(a, b) for a, b in zip(DEFAULT_THRESHOLDS, (0.1, 0.2, 0.3, 0.4, 0.5)))


@pytest.mark.parametrize("text", ["0.1:0.5:0.3", "0.5,0.1", "0:1:0.5", "abc", "0.1:0.5", "", "1.5"])
def test_threshold_grammar_rejects(text):
    with pytest.raises(ConfigError):
        TiouThresholds.parse(text)
