"""
tsl.errors
----------

Exception hierarchy shared by the whole package.

Every error raised on purpose by ``tsl`` derives from :class:`TSLError`.
Data problems derive from :class:`ValidationError`, which is also a
``ValueError`` so that code catching the builtin keeps working. Errors tied
to one record carry its ``index`` and, when known, its ``video_id``.
"""

from __future__ import annotations

from typing import Optional


class TSLError(Exception):
    """Base class for all errors raised by the toolkit."""


class ValidationError(TSLError, ValueError):
    """An object or document violates a data invariant."""

    def __init__(
        self,
        message: str,
        index: Optional[int] = None,
        video_id: Optional[str] = None,
    ) -> None:
        self.index = index
        self.video_id = video_id
        where = []
        if video_id is not None:
            where.append(f"video {video_id!r}")
        if index is not None:
            where.append(f"record {index}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class InvalidInterval(ValidationError):
    """Interval bounds are non-finite, negative or not strictly increasing."""


class InvalidScore(ValidationError):
    """Confidence score outside [0, 1]."""


class InvalidVocabulary(ValidationError):
    """Vocabulary has empty or duplicate class names."""


class LabelOutOfRange(ValidationError):
    """Label id does not index into the vocabulary."""


class EventExceedsDuration(ValidationError):
    """Event ends after the declared video duration."""


class InvalidFeatureStream(ValidationError):
    """Feature matrix has a bad shape or non-finite values."""


class DuplicateVideoId(ValidationError):
    """The same video id appears twice in one collection."""


class VideoIdMismatch(ValidationError):
    """Inputs that must describe one video carry different ids."""


class UnknownVideoId(ValidationError):
    """Predictions reference a video missing from the ground truth."""


class EmptyGroundTruth(ValidationError):
    """The ground truth holds no events at all."""


class NoGroundTruth(ValidationError):
    """Average precision requested for a class without ground truth."""


class WeightCountMismatch(ValidationError):
    """Number of fusion weights differs from the number of models."""


class EmptyInput(ValidationError):
    """An operation needing at least one input received none."""


class FrameCountMismatch(ValidationError):
    """Feature streams to concatenate have different frame counts."""


class ConfigError(ValidationError):
    """A configuration object or parameter file is invalid."""


class ParseError(TSLError):
    """A document could not be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class MixedScorePresence(ValidationError):
    """Some records of a detection document carry scores and others do not."""


class BadMagic(ParseError):
    """Feature file does not start with the expected magic bytes."""


class VersionUnsupported(ParseError):
    """Feature file declares a format version this reader does not know."""


class LengthMismatch(ParseError):
    """Feature file payload length disagrees with its declared shape."""
