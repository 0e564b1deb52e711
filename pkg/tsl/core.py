"""
tsl.core
--------

Domain types for temporal sound localisation.

A sound event is a half-open interval ``[start, end)`` in seconds plus a
class label; a detection adds a confidence score. Events and detections are
grouped per video in :class:`EventSet` (ground truth) and
:class:`DetectionSet` (predictions). All types are frozen: once built they
can be shared read-only between workers.

Intervals, labels and detections validate on construction, so an invalid one
cannot exist. The per-video containers are plain carriers; use
:func:`validate_event_set` / :func:`validate_detection_set` to check them
(this is where offending record indices get reported).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Tuple, Union

from .errors import (
    EventExceedsDuration,
    InvalidInterval,
    InvalidScore,
    InvalidVocabulary,
    LabelOutOfRange,
    ValidationError,
)

logger = logging.getLogger(__name__)


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class TimeInterval:
    """A ``[start, end)`` span on a video timeline, in seconds."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (_is_real(self.start) and _is_real(self.end)):
            raise InvalidInterval(
                f"interval bounds must be numbers, got ({self.start!r}, {self.end!r})"
            )
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise InvalidInterval(f"interval bounds must be finite, got [{self.start}, {self.end})")
        if self.start < 0:
            raise InvalidInterval(f"interval start {self.start} is negative")
        if self.end <= self.start:
            raise InvalidInterval(f"interval end {self.end} not after start {self.start}")
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))

    @property
    def duration(self) -> float:
        return self.end - self.start


def interval_duration(interval: TimeInterval) -> float:
    """Return ``end - start``; always positive for a constructed interval."""
    return interval.end - interval.start


@dataclass(frozen=True)
class Vocabulary:
    """Ordered list of unique, non-empty class names."""

    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        seen = set()
        for i, name in enumerate(names):
            if not isinstance(name, str) or not name:
                raise InvalidVocabulary(f"class name at position {i} is empty or not a string")
            if name in seen:
                raise InvalidVocabulary(f"class name {name!r} appears twice")
            seen.add(name)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_lookup", {name: i for i, name in enumerate(names)})

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]  # type: ignore[attr-defined]
        except KeyError:
            raise LabelOutOfRange(f"label {name!r} is not in the vocabulary") from None

    def name(self, label_id: int) -> str:
        return self.label(label_id).name

    def label(self, label_id: int) -> "ClassLabel":
        return ClassLabel(label_id, self)


@dataclass(frozen=True)
class ClassLabel:
    """An index into a :class:`Vocabulary`."""

    id: int
    vocabulary: Vocabulary = field(repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.id, int) or isinstance(self.id, bool):
            raise LabelOutOfRange(f"label id must be an integer, got {self.id!r}")
        if not 0 <= self.id < len(self.vocabulary):
            raise LabelOutOfRange(
                f"label id {self.id} outside vocabulary of {len(self.vocabulary)} classes"
            )

    @property
    def name(self) -> str:
        return self.vocabulary.names[self.id]


@dataclass(frozen=True)
class SoundEvent:
    """A labelled interval, ``(t_s, t_e, c)``."""

    interval: TimeInterval
    label: ClassLabel

    @classmethod
    def build(cls, start: float, end: float, label: ClassLabel) -> "SoundEvent":
        return cls(TimeInterval(start, end), label)

    @property
    def start(self) -> float:
        return self.interval.start

    @property
    def end(self) -> float:
        return self.interval.end


@dataclass(frozen=True)
class Detection:
    """A scored sound event emitted by a localiser."""

    event: SoundEvent
    score: float

    def __post_init__(self) -> None:
        if not _is_real(self.score) or not (0.0 <= self.score <= 1.0):
            raise InvalidScore(f"score {self.score!r} outside [0, 1]")
        object.__setattr__(self, "score", float(self.score))

    @classmethod
    def build(cls, start: float, end: float, label: ClassLabel, score: float) -> "Detection":
        return cls(SoundEvent(TimeInterval(start, end), label), score)

    @property
    def interval(self) -> TimeInterval:
        return self.event.interval

    @property
    def label(self) -> ClassLabel:
        return self.event.label

    @property
    def start(self) -> float:
        return self.event.interval.start

    @property
    def end(self) -> float:
        return self.event.interval.end


RawEvent = Union[SoundEvent, Tuple[float, float, int]]
RawDetection = Union[Detection, Tuple[float, float, int, float]]


@dataclass(frozen=True)
class EventSet:
    """Ground-truth events of one video."""

    video_id: str
    events: Tuple[RawEvent, ...] = ()
    duration: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class DetectionSet:
    """Scored detections of one video."""

    video_id: str
    detections: Tuple[RawDetection, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "detections", tuple(self.detections))

    def __len__(self) -> int:
        return len(self.detections)


def _check_video_id(video_id: Any) -> None:
    if not isinstance(video_id, str):
        raise ValidationError(f"video id must be a string, got {video_id!r}")


def _coerce_label(raw: Any, vocabulary: Optional[Vocabulary], index: int, video_id: str) -> ClassLabel:
    if isinstance(raw, ClassLabel):
        if vocabulary is not None and raw.vocabulary != vocabulary:
            raise LabelOutOfRange("label belongs to a different vocabulary", index, video_id)
        return raw
    if vocabulary is None:
        raise ValidationError("raw label ids need a vocabulary", index, video_id)
    try:
        return ClassLabel(raw, vocabulary)
    except LabelOutOfRange as exc:
        raise LabelOutOfRange(str(exc), index, video_id) from None


def _coerce_event(raw: RawEvent, vocabulary: Optional[Vocabulary], index: int, video_id: str) -> SoundEvent:
    if isinstance(raw, SoundEvent):
        if vocabulary is not None and raw.label.vocabulary != vocabulary:
            raise LabelOutOfRange("label belongs to a different vocabulary", index, video_id)
        return raw
    try:
        start, end, label = raw
    except (TypeError, ValueError):
        raise ValidationError(f"cannot read event from {raw!r}", index, video_id) from None
    try:
        interval = TimeInterval(start, end)
    except InvalidInterval as exc:
        raise InvalidInterval(str(exc), index, video_id) from None
    return SoundEvent(interval, _coerce_label(label, vocabulary, index, video_id))


def validate_event_set(raw: EventSet, vocabulary: Optional[Vocabulary] = None) -> EventSet:
    """Check every invariant of an event set.

    Events may be :class:`SoundEvent` objects or raw ``(start, end, label_id)``
    tuples; raw tuples need ``vocabulary``. A set that is already valid is
    returned unchanged (the same object), so validation is idempotent.

    Raises
    ------
    InvalidInterval, LabelOutOfRange, EventExceedsDuration
        With the offending event index.
    """
    _check_video_id(raw.video_id)
    if raw.duration is not None:
        if not _is_real(raw.duration) or not math.isfinite(raw.duration) or raw.duration <= 0:
            raise ValidationError(f"duration {raw.duration!r} must be positive", video_id=raw.video_id)
    events = []
    changed = False
    for i, item in enumerate(raw.events):
        event = _coerce_event(item, vocabulary, i, raw.video_id)
        changed = changed or event is not item
        if raw.duration is not None and event.end > raw.duration:
            raise EventExceedsDuration(
                f"event ends at {event.end} after video duration {raw.duration}", i, raw.video_id
            )
        events.append(event)
    if not changed:
        return raw
    return EventSet(raw.video_id, tuple(events), raw.duration)


def validate_detection_set(raw: DetectionSet, vocabulary: Optional[Vocabulary] = None) -> DetectionSet:
    """Prediction-side mirror of :func:`validate_event_set`.

    Raw detections are ``(start, end, label_id, score)`` tuples.
    """
    _check_video_id(raw.video_id)
    detections = []
    changed = False
    for i, item in enumerate(raw.detections):
        if isinstance(item, Detection):
            if vocabulary is not None and item.label.vocabulary != vocabulary:
                raise LabelOutOfRange("label belongs to a different vocabulary", i, raw.video_id)
            detections.append(item)
            continue
        try:
            start, end, label, score = item
        except (TypeError, ValueError):
            raise ValidationError(f"cannot read detection from {item!r}", i, raw.video_id) from None
        event = _coerce_event((start, end, label), vocabulary, i, raw.video_id)
        try:
            detections.append(Detection(event, score))
        except InvalidScore as exc:
            raise InvalidScore(str(exc), i, raw.video_id) from None
        changed = True
    if not changed:
        return raw
    return DetectionSet(raw.video_id, tuple(detections))


def vocabulary_of(items: Iterable[Union[SoundEvent, Detection]]) -> Optional[Vocabulary]:
    """Return the vocabulary shared by ``items``, or None when empty."""
    vocabulary: Optional[Vocabulary] = None
    for item in items:
        vocab = item.label.vocabulary
        if vocabulary is None:
            vocabulary = vocab
        elif vocab != vocabulary:
            raise ValidationError("items use different vocabularies")
    return vocabulary
