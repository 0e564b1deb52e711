"""
tsl.formats
-----------

File formats for detections, ground truth and feature streams.

Detection document (JSON)::

    {
      "vocabulary": ["dog", "car"],
      "durations": {"v1": 30.0},            # optional, ground truth only
      "videos": {
        "v1": [{"label": "dog", "start": 0.0, "end": 1.0, "score": 0.9}]
      }
    }

Ground truth uses the same schema with ``score`` omitted; within one file
either every record has a score or none does. Floats are written with
``repr`` (shortest round-trip form) and videos sorted by id.

Feature file (binary, little endian)::

    b"TSLF" | u32 version (=1) | u32 T | u32 C | u16 len(id) | id (UTF-8)
    | T*C float32, row-major by frame

Readers are pure and may run concurrently on distinct files. No locking is
done: concurrent writes to the same path are undefined.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, StrictStr
from pydantic import ValidationError as PydanticValidationError

from .core import (
    Detection,
    DetectionSet,
    EventSet,
    SoundEvent,
    TimeInterval,
    Vocabulary,
    validate_detection_set,
    validate_event_set,
)
from .errors import (
    BadMagic,
    DuplicateVideoId,
    InvalidFeatureStream,
    InvalidInterval,
    InvalidScore,
    LabelOutOfRange,
    LengthMismatch,
    MixedScorePresence,
    ParseError,
    ValidationError,
    VersionUnsupported,
)
from .features import FeatureStream

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FEATURE_MAGIC = b"TSLF"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_ID_LENGTH = struct.Struct("<H")


Seconds = Annotated[float, Field(strict=True)]


class RecordModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: StrictStr
    start: Seconds
    end: Seconds
    score: Optional[Seconds] = None


class DocumentModel(BaseModel):
    """Schema of a detection document, before domain validation."""

    model_config = ConfigDict(extra="forbid")

    vocabulary: List[StrictStr]
    videos: Dict[str, List[RecordModel]]
    durations: Optional[Dict[str, Seconds]] = None


@dataclass(frozen=True)
class DetectionDocument:
    """A parsed detection document.

    ``sets`` holds EventSets when the document carries no scores and
    DetectionSets otherwise. A document without records counts as
    predictions unless it declares durations.
    """

    vocabulary: Vocabulary
    sets: Tuple[Union[EventSet, DetectionSet], ...]
    has_scores: bool


def _schema_error(exc: PydanticValidationError) -> ValidationError:
    err = exc.errors()[0]
    loc = list(err["loc"])
    video_id = None
    index = None
    if len(loc) >= 2 and loc[0] in ("videos", "durations"):
        video_id = str(loc[1])
        if len(loc) >= 3 and isinstance(loc[2], int):
            index = loc[2]
    where = ".".join(str(p) for p in loc)
    return ValidationError(f"{where}: {err['msg']}", index=index, video_id=video_id)


def document_from_dict(raw: object) -> DetectionDocument:
    """Validate an already-decoded JSON document."""
    try:
        doc = DocumentModel.model_validate(raw)
    except PydanticValidationError as exc:
        raise _schema_error(exc) from None
    try:
        vocabulary = Vocabulary(tuple(doc.vocabulary))
    except ValidationError as exc:
        raise ValidationError(f"vocabulary: {exc}") from None

    records = [(vid, i, r) for vid, recs in doc.videos.items() for i, r in enumerate(recs)]
    with_scores = {r.score is not None for _, _, r in records}
    if len(with_scores) > 1:
        raise MixedScorePresence("some records carry a score and others do not")
    durations = doc.durations or {}
    has_scores = with_scores == {True} if records else not durations
    if has_scores and durations:
        raise ValidationError("durations are only allowed in ground-truth documents")
    for vid in durations:
        if vid not in doc.videos:
            raise ValidationError("duration given for a video without records", video_id=vid)

    sets: List[Union[EventSet, DetectionSet]] = []
    for vid, recs in doc.videos.items():
        items = []
        for i, r in enumerate(recs):
            try:
                label = vocabulary.label(vocabulary.index(r.label))
                event = SoundEvent(TimeInterval(r.start, r.end), label)
                items.append(Detection(event, r.score) if has_scores else event)
            except (InvalidInterval, LabelOutOfRange, InvalidScore) as exc:
                raise type(exc)(str(exc), index=i, video_id=vid) from None
        if has_scores:
            sets.append(validate_detection_set(DetectionSet(vid, tuple(items))))
        else:
            sets.append(validate_event_set(EventSet(vid, tuple(items), durations.get(vid))))
    return DetectionDocument(vocabulary, tuple(sets), has_scores)


class _Pairs(list):
    """Key/value pairs of one JSON object, in document order."""


def _unpack(value: object, path: Tuple[str, ...]) -> object:
    if isinstance(value, _Pairs):
        out: dict = {}
        for key, item in value:
            if key in out:
                if len(path) == 1 and path[0] in ("videos", "durations"):
                    raise DuplicateVideoId(f"{path[0]}: video listed twice", video_id=key)
                if len(path) == 3 and path[0] == "videos":
                    raise ValidationError(f"key {key!r} given twice", index=int(path[2]), video_id=path[1])
                raise ValidationError(f"{'.'.join(path + (key,))}: key given twice")
            out[key] = _unpack(item, path + (key,))
        return out
    if isinstance(value, list):
        return [_unpack(item, path + (str(i),)) for i, item in enumerate(value)]
    return value


def loads_detections(text: str) -> DetectionDocument:
    """Parse a detection document from a string.

    A key repeated within one object is an error rather than silently
    replacing the earlier value.
    """
    try:
        raw = _unpack(json.loads(text, object_pairs_hook=_Pairs), ())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return document_from_dict(raw)


def read_document(path: PathLike) -> DetectionDocument:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        document = loads_detections(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
    logger.info("read %d videos from %s", len(document.sets), path)
    return document


def read_detections(path: PathLike) -> Tuple[Vocabulary, List[Union[EventSet, DetectionSet]]]:
    """Read a detection or ground-truth file; see :class:`DetectionDocument`."""
    document = read_document(path)
    return document.vocabulary, list(document.sets)


def read_ground_truth(path: PathLike) -> Tuple[Vocabulary, List[EventSet]]:
    """Read a file that must not carry scores."""
    document = read_document(path)
    if document.has_scores and any(len(s) for s in document.sets):
        raise ValidationError(f"{path}: ground-truth records must not carry scores")
    sets = [s if isinstance(s, EventSet) else EventSet(s.video_id) for s in document.sets]
    return document.vocabulary, sets


def read_predictions(path: PathLike) -> Tuple[Vocabulary, List[DetectionSet]]:
    """Read a file whose records must all carry scores."""
    document = read_document(path)
    if not document.has_scores and any(len(s) for s in document.sets):
        raise ValidationError(f"{path}: prediction records need a score")
    sets = [s if isinstance(s, DetectionSet) else DetectionSet(s.video_id) for s in document.sets]
    return document.vocabulary, sets


def _record(item: Union[SoundEvent, Detection], vocabulary: Vocabulary) -> dict:
    if item.label.vocabulary != vocabulary:
        raise ValidationError(f"label {item.label.name!r} belongs to a different vocabulary")
    record = {"label": item.label.name, "start": item.start, "end": item.end}
    if isinstance(item, Detection):
        record["score"] = item.score
    return record


def dumps_detections(
    vocabulary: Vocabulary, sets: Sequence[Union[EventSet, DetectionSet]]
) -> str:
    """Serialise event or detection sets to a JSON document string."""
    videos: Dict[str, list] = {}
    durations: Dict[str, float] = {}
    kinds = set()
    for s in sorted(sets, key=lambda s: s.video_id):
        if s.video_id in videos:
            raise DuplicateVideoId("video listed twice", video_id=s.video_id)
        if isinstance(s, EventSet):
            s = validate_event_set(s, vocabulary)
            items = s.events
            kinds.add("events")
            if s.duration is not None:
                durations[s.video_id] = float(s.duration)
        else:
            s = validate_detection_set(s, vocabulary)
            items = s.detections
            kinds.add("detections")
        videos[s.video_id] = [_record(item, vocabulary) for item in items]  # type: ignore[arg-type]
    if len(kinds) > 1 and any(videos.values()):
        raise MixedScorePresence("cannot write events and detections into one document")
    doc: dict = {"vocabulary": list(vocabulary.names)}
    if durations:
        doc["durations"] = durations
    doc["videos"] = videos
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_detections(
    vocabulary: Vocabulary,
    sets: Sequence[Union[EventSet, DetectionSet]],
    path: Optional[PathLike] = None,
) -> str:
    """Serialise sets to a document; also write it to ``path`` if given."""
    text = dumps_detections(vocabulary, sets)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("wrote %d videos to %s", len(sets), path)
    return text


def encode_features(stream: FeatureStream) -> bytes:
    """Encode a stream in the binary feature layout."""
    video_id = stream.video_id.encode("utf-8")
    if len(video_id) > 0xFFFF:
        raise InvalidFeatureStream("video id longer than 65535 bytes", video_id=stream.video_id)
    payload = stream.data.astype("<f4")
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, stream.frames, stream.channels)
    return header + _ID_LENGTH.pack(len(video_id)) + video_id + payload.tobytes(order="C")


def decode_features(blob: bytes) -> FeatureStream:
    """Decode the binary feature layout, checking every declared length."""
    if len(blob) < 4 or blob[:4] != FEATURE_MAGIC:
        raise BadMagic(f"expected magic {FEATURE_MAGIC!r}, got {bytes(blob[:4])!r}")
    if len(blob) < _HEADER.size + _ID_LENGTH.size:
        raise LengthMismatch(f"header truncated at {len(blob)} bytes")
    _, version, frames, channels = _HEADER.unpack_from(blob, 0)
    if version != FEATURE_VERSION:
        raise VersionUnsupported(f"feature format version {version} is not supported")
    (id_length,) = _ID_LENGTH.unpack_from(blob, _HEADER.size)
    offset = _HEADER.size + _ID_LENGTH.size
    if len(blob) < offset + id_length:
        raise LengthMismatch("video id truncated")
    try:
        video_id = bytes(blob[offset : offset + id_length]).decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError("video id is not valid UTF-8") from None
    offset += id_length
    expected = frames * channels * 4
    if len(blob) - offset != expected:
        raise LengthMismatch(
            f"payload of {len(blob) - offset} bytes, declared {frames}x{channels} needs {expected}"
        )
    data = np.frombuffer(blob, dtype="<f4", count=frames * channels, offset=offset)
    return FeatureStream(video_id, data.reshape(frames, channels))


def read_features(path: PathLike) -> FeatureStream:
    with open(path, "rb") as fh:
        blob = fh.read()
    stream = decode_features(blob)
    logger.info("read %dx%d features for %s from %s", stream.frames, stream.channels, stream.video_id, path)
    return stream


def write_features(stream: FeatureStream, path: PathLike) -> None:
    blob = encode_features(stream)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(blob)
    logger.info("wrote %dx%d features for %s to %s", stream.frames, stream.channels, stream.video_id, path)
