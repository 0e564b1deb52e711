import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsl.core import (
    ClassLabel,
    Detection,
    DetectionSet,
    EventSet,
    SoundEvent,
    TimeInterval,
    Vocabulary,
    interval_duration,
    validate_detection_set,
    validate_event_set,
    vocabulary_of,
)
from tsl.errors import (
    EventExceedsDuration,
    InvalidInterval,
    InvalidScore,
    InvalidVocabulary,
    LabelOutOfRange,
    ValidationError,
)
from tsl.synthetic import synthetic_vocabulary

VOCAB17 = synthetic_vocabulary(17)


def test_interval_duration():
    assert interval_duration(TimeInterval(0.0, 1.0)) == 1.0
    assert interval_duration(TimeInterval(2.5, 2.75)) == 0.25
    assert TimeInterval(1, 3).duration == 2.0


@pytest.mark.parametrize(
    "start,end",
    [(0.0, 0.0), (2.0, 1.0), (-0.5, 1.0), (0.0, math.inf), (math.nan, 1.0), ("0", 1.0), (True, 2.0)],
)
def test_interval_rejects(start, end):
    with pytest.raises(InvalidInterval):
        TimeInterval(start, end)


@given(
    st.floats(allow_nan=True, allow_infinity=True, width=64),
    st.floats(allow_nan=True, allow_infinity=True, width=64),
)
def test_interval_accepts_exactly_the_valid_ones(start, end):
    valid = math.isfinite(start) and math.isfinite(end) and 0 <= start < end
    if valid:
        interval = TimeInterval(start, end)
        assert interval_duration(interval) > 0
    else:
        with pytest.raises(InvalidInterval):
            TimeInterval(start, end)


@given(st.floats(allow_nan=True, allow_infinity=True))
def test_score_accepts_exactly_the_unit_range(score):
    event = SoundEvent.build(0.0, 1.0, ClassLabel(0, VOCAB17))
    if 0.0 <= score <= 1.0:
        assert Detection(event, score).score == score
    else:
        with pytest.raises(InvalidScore):
            Detection(event, score)


def test_vocabulary():
    vocab = Vocabulary(["dog", "car"])
    assert vocab.names == ("dog", "car")
    assert len(vocab) == 2
    assert list(vocab) == ["dog", "car"]
    assert vocab.index("car") == 1
    assert vocab.name(0) == "dog"
    assert vocab == Vocabulary(("dog", "car"))
    with pytest.raises(LabelOutOfRange):
        vocab.index("bird")
    with pytest.raises(InvalidVocabulary):
        Vocabulary(("dog", "dog"))
    with pytest.raises(InvalidVocabulary):
        Vocabulary(("dog", ""))


def test_class_label_range():
    assert ClassLabel(16, VOCAB17).name == "class_16"
    with pytest.raises(LabelOutOfRange):
        ClassLabel(17, VOCAB17)
    with pytest.raises(LabelOutOfRange):
        ClassLabel(-1, VOCAB17)


def test_validate_event_set_passthrough():
    events = EventSet("v1", (SoundEvent.build(0.0, 1.5, ClassLabel(0, VOCAB17)),))
    assert validate_event_set(events) is events


def test_validate_event_set_from_raw_tuples():
    validated = validate_event_set(EventSet("v1", [(0.0, 1.5, 0)]), VOCAB17)
    assert validated.events == (SoundEvent.build(0.0, 1.5, ClassLabel(0, VOCAB17)),)
    assert validate_event_set(validated) is validated


def test_validate_event_set_zero_duration():
    with pytest.raises(InvalidInterval) as info:
        validate_event_set(EventSet("v1", [(0.0, 1.0, 0), (2.0, 2.0, 0)]), VOCAB17)
    assert info.value.index == 1
    assert info.value.video_id == "v1"
    assert "record 1" in str(info.value)


def test_validate_event_set_label_out_of_range():
    with pytest.raises(LabelOutOfRange) as info:
        validate_event_set(EventSet("v1", [(0.0, 1.0, 17)]), VOCAB17)
    assert info.value.index == 0


def test_validate_event_set_duration():
    label = ClassLabel(0, VOCAB17)
    raw = EventSet("v1", (SoundEvent.build(0.0, 1.0, label), SoundEvent.build(5.0, 12.0, label)), 10.0)
    with pytest.raises(EventExceedsDuration) as info:
        validate_event_set(raw)
    assert info.value.index == 1
    with pytest.raises(ValidationError):
        validate_event_set(EventSet("v1", (), 0.0))


def test_raw_labels_need_vocabulary():
    with pytest.raises(ValidationError):
        validate_event_set(EventSet("v1", [(0.0, 1.0, 0)]))


def test_validate_detection_set():
    raw = DetectionSet("v1", [(0.0, 1.0, 3, 0.5)])
    validated = validate_detection_set(raw, VOCAB17)
    assert validated.detections[0].score == 0.5
    assert validated.detections[0].label.name == "class_03"
    assert validate_detection_set(validated) is validated
    with pytest.raises(InvalidScore) as info:
        validate_detection_set(DetectionSet("v1", [(0.0, 1.0, 3, 0.5), (0.0, 1.0, 3, 1.5)]), VOCAB17)
    assert info.value.index == 1


def test_foreign_vocabulary_rejected():
    other = Vocabulary(("dog",))
    events = EventSet("v1", (SoundEvent.build(0.0, 1.0, ClassLabel(0, other)),))
    with pytest.raises(LabelOutOfRange):
        validate_event_set(events, VOCAB17)


def test_helpers():
    label = ClassLabel(2, VOCAB17)
    dets = (Detection.build(0.0, 1.0, label, 0.7), Detection.build(3.0, 4.0, label, 0.2))
    assert vocabulary_of(dets) == VOCAB17
    assert vocabulary_of([]) is None


def test_types_are_frozen():
    interval = TimeInterval(0.0, 1.0)
    with pytest.raises(AttributeError):
        interval.start = 0.5  # type: ignore[misc]
